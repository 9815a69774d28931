//! Checks shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use ccg_nca::ccg::Supervisor;
use ccg_nca::data::embeddings::EmbeddingStore;
use ccg_nca::data::synth::{gen_synthetic, SynthConfig};
use ccg_nca::data::Example;
use ccg_nca::neural::checkpoint::Checkpoint;
use ccg_nca::neural::model::{NcaConfig, NcaModel};
use ccg_nca::neural::nca::{
    encode, entering_state, gumbel_noise, loss_and_grad, nca_step, noise_rng, numeric_gradient, relative_error,
    rollout, BatchInput, LossOptions, Mode,
};
use ccg_nca::training::{table_vocab, train, training_samples, TrainConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

/// Model, batch, initial targets and final targets.
pub type Case = (NcaModel, BatchInput, Vec<usize>, Vec<usize>);

/// Two sequences of length 6 over a 9-word table.
pub fn table_case(seed: u64) -> Case {
    let model = NcaModel::new(NcaConfig::test_scale(25, 6, 9), seed).unwrap();
    let input = BatchInput {
        len: 6,
        ids: vec![0, 3, 8, 3, 1, 2, 2, 7, 5, 4, 6, 0],
        vectors: None,
    };
    let init = vec![0, 5, 0, 5, 3, 17, 23, 0, 16, 0, 4, 0];
    let fin = vec![24, 1, 24, 24, 24, 24, 1, 24, 24, 24, 24, 24];
    (model, input, init, fin)
}

/// Two sequences of length 4 with precomputed 7-wide vectors.
pub fn vector_case(seed: u64) -> Case {
    let model = NcaModel::new(NcaConfig::test_scale(25, 7, 0), seed).unwrap();
    let vectors = Array2::from_shape_fn((8, 7), |(i, j)| ((i * 7 + j) as f64 * 0.61).sin());
    let input = BatchInput {
        len: 4,
        ids: Vec::new(),
        vectors: Some(vectors),
    };
    (
        model,
        input,
        vec![0, 5, 1, 9, 23, 3, 0, 2],
        vec![24, 1, 24, 24, 1, 24, 24, 24],
    )
}

pub struct TensorCheck {
    pub name: String,
    pub relative_error: f64,
    pub nonzero: bool,
}

impl TensorCheck {
    pub fn ok(&self) -> bool {
        self.relative_error < TOL && self.nonzero
    }
}

/// Analytic against central differences on the soft path, entering state frozen.
pub fn gradient_checks(case: &Case, t: usize, tensors: &[&str]) -> Vec<TensorCheck> {
    let (model, input, init, fin) = case;
    let opts = LossOptions {
        t,
        tau: 0.7,
        mode: Mode::Soft,
        w_init: 1.0,
        w_final: 1.0,
    };
    let noise = gumbel_noise(input.rows(), model.cfg.k, &mut noise_rng(11, 0, 0));
    let entering = entering_state(model, input, &opts, Some(&noise));
    let (_, grads) = loss_and_grad(model, input, init, fin, &opts, Some(&noise), Some(&entering)).unwrap();
    tensors
        .iter()
        .map(|&name| {
            let numeric = numeric_gradient(
                model,
                name,
                input,
                init,
                fin,
                &opts,
                Some(&noise),
                Some(&entering),
                STEP,
            );
            TensorCheck {
                name: name.to_string(),
                relative_error: relative_error(grads.tensor(name), &numeric),
                nonzero: grads.tensor(name).iter().any(|&g| g != 0.0),
            }
        })
        .collect()
}

/// Random state for `seqs` sequences of length `len`.
pub fn random_state(model: &NcaModel, seqs: usize, len: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((seqs * len, model.cfg.d), |_| rng.gen_range(-1.0..1.0))
}

/// Positions of a single sequence whose state differs after perturbing
/// position `j` and running `t` steps.
pub fn influenced(model: &NcaModel, state: &Array2<f64>, j: usize, t: usize) -> Vec<usize> {
    let len = state.nrows();
    let mut bumped = state.clone();
    bumped.row_mut(j).mapv_inplace(|v| v + 0.5);
    let a = rollout(&model.params, state, len, t);
    let b = rollout(&model.params, &bumped, len, t);
    (0..len).filter(|&i| a.row(i) != b.row(i)).collect()
}

/// Checks the cone `j - t ..= j + t` for every `j`; returns the first violation.
pub fn cone_violation(model: &NcaModel, len: usize, t: usize, seed: u64) -> Option<String> {
    let state = random_state(model, 1, len, seed);
    for j in 0..len {
        let hit = influenced(model, &state, j, t);
        if !hit.contains(&j) {
            return Some(format!("t={t} j={j}: perturbation vanished"));
        }
        if let Some(&i) = hit.iter().find(|&&i| i.abs_diff(j) > t) {
            return Some(format!("t={t} j={j}: position {i} changed"));
        }
    }
    None
}

/// `rollout(s, t) == nca_step(rollout(s, t - 1))`, bit for bit.
pub fn rollout_composes(model: &NcaModel, state: &Array2<f64>, len: usize, t: usize) -> bool {
    let p = &model.params;
    rollout(p, state, len, t) == nca_step(p, &rollout(p, state, len, t - 1), len)
}

/// Infer-mode codes ignore noise and are stable across calls.
pub fn inference_is_deterministic(model: &NcaModel, input: &BatchInput) -> bool {
    let p = &model.params;
    let a = encode(p, input, 1.0, Mode::Infer, None);
    let noise = gumbel_noise(input.rows(), model.cfg.k, &mut noise_rng(99, 3, 4));
    let b = encode(p, input, 0.2, Mode::Infer, Some(&noise));
    a.codes == b.codes && a.state0 == b.state0
}

/// A small synthetic corpus: (train, gen).
pub fn small_corpus(train_size: usize, gen_per_category: usize, seed: u64) -> (Vec<Example>, Vec<Example>) {
    let cfg = SynthConfig {
        train_size,
        gen_per_category,
        ..SynthConfig::default()
    };
    gen_synthetic(&cfg, seed).unwrap()
}

/// A few epochs at reduced width; used for reproducibility checks.
pub fn train_small(sup: &Supervisor, examples: &[Example], seed: u64, jobs: usize) -> Checkpoint {
    let vocab = table_vocab(sup, examples);
    let store = EmbeddingStore::Table {
        vocab: vocab.clone(),
        dim: 8,
    };
    let samples = training_samples(sup, &store, examples, jobs).unwrap();
    let model_cfg = NcaConfig::new(8, 8, 16, sup.table.len(), 8, vocab.len());
    let cfg = TrainConfig {
        seed,
        epochs: 3,
        temp_anneal_epochs: 2,
        t_max: 4,
        batch_size: 8,
        ..TrainConfig::default()
    };
    train(&samples, model_cfg, &cfg, sup.table.short_hash(), vocab, jobs, None)
        .unwrap()
        .0
}
