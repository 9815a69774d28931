//! Optimization: AdamW, temperature annealing, the T-curriculum, and a
//! deterministic batched training loop.
//!
//! Batches hold sequences of one content length, so no padding mask is
//! needed. Each batch is split into fixed-size shards whose gradients are
//! summed in shard order; the result is bit-identical for any thread count.

use std::io::Write;
use std::path::Path;

use log::info;
use ndarray::s;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ccg::{Supervisor, Trajectory};
use crate::data::embeddings::{EmbeddingStore, Input, Vocab};
use crate::data::tsv::Example;
use crate::error::{Error, Result};
use crate::neural::checkpoint::Checkpoint;
use crate::neural::model::{NcaConfig, NcaModel, Params};
use crate::neural::nca::{gumbel_noise, loss_and_grad, noise_rng, BatchInput, LossOptions, Mode};

/// Sequences per gradient shard. Fixed so reduction order never depends on `jobs`.
pub const SHARD: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub temp_start: f64,
    pub temp_end: f64,
    pub temp_anneal_epochs: usize,
    pub t_start: usize,
    pub t_max: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub w_init: f64,
    pub w_final: f64,
    /// Draw each batch's rollout length uniformly from `1..=T(epoch)`
    /// instead of using `T(epoch)` itself.
    pub sample_t: bool,
    /// Global gradient L2 norm cap; 0 disables clipping.
    pub clip_norm: f64,
    /// Learning rate at the last epoch as a fraction of `lr`; the decay is
    /// geometric over the epochs after `temp_anneal_epochs`. 1 keeps it flat.
    pub lr_final_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            weight_decay: 1e-4,
            temp_start: 1.0,
            temp_end: 0.1,
            temp_anneal_epochs: 50,
            t_start: 1,
            t_max: 60,
            epochs: 80,
            batch_size: 32,
            seed: 0,
            w_init: 1.0,
            w_final: 1.0,
            sample_t: true,
            clip_norm: 1.0,
            lr_final_scale: 0.1,
        }
    }
}

impl TrainConfig {
    /// CPU profile for the synthetic corpus: the full schedule cut to 60 epochs,
    /// so the lr decay covers the last 9.
    pub fn desk() -> TrainConfig {
        TrainConfig {
            epochs: 60,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.temp_end > 0.0 && self.temp_end < self.temp_start) {
            return bad("need 0 < temp_end < temp_start");
        }
        if self.t_start == 0 || self.t_start > self.t_max {
            return bad("need 1 <= t_start <= t_max");
        }
        if self.lr <= 0.0 || self.weight_decay < 0.0 || self.batch_size == 0 || self.temp_anneal_epochs == 0 {
            return bad("lr, batch_size and temp_anneal_epochs must be positive");
        }
        if self.w_init < 0.0 || self.w_final < 0.0 || self.w_init + self.w_final == 0.0 {
            return bad("loss weights must be non-negative and not both zero");
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return bad("clip_norm must be finite and non-negative");
        }
        if !(self.lr_final_scale > 0.0 && self.lr_final_scale <= 1.0) {
            return bad("need 0 < lr_final_scale <= 1");
        }
        Ok(())
    }

    /// Temperature (geometric) and rollout length (linear, integer) for `epoch`;
    /// both reach their end values at `temp_anneal_epochs` and hold there.
    pub fn schedule(&self, epoch: usize) -> (f64, usize) {
        let frac = (epoch as f64 / self.temp_anneal_epochs as f64).min(1.0);
        let tau = self.temp_start * (self.temp_end / self.temp_start).powf(frac);
        let t = self.t_start + ((self.t_max - self.t_start) as f64 * frac).round() as usize;
        (tau, t)
    }

    /// Learning rate for `epoch`: flat through the anneal window, then
    /// geometric down to `lr * lr_final_scale` at the last epoch.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        let tail = self.epochs.saturating_sub(self.temp_anneal_epochs + 1);
        if epoch <= self.temp_anneal_epochs || tail == 0 {
            return self.lr;
        }
        let frac = ((epoch - self.temp_anneal_epochs) as f64 / tail as f64).min(1.0);
        self.lr * self.lr_final_scale.powf(frac)
    }

    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(json)
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// AdamW with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Params,
    v: Params,
    step: i32,
}

impl AdamW {
    pub fn new(cfg: &NcaConfig, lr: f64, weight_decay: f64) -> AdamW {
        AdamW {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Params::zeros(cfg),
            v: Params::zeros(cfg),
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let decay = 1.0 - self.lr * self.weight_decay;
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] = p[i] * decay - self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// One supervised sequence: encoder input and the two target rows.
#[derive(Debug, Clone)]
pub struct Sample {
    pub example_id: u64,
    pub input: Input,
    pub init: Vec<usize>,
    pub fin: Vec<usize>,
}

/// Builds trajectories for every example, in input order.
pub fn trajectorize(sup: &Supervisor, examples: &[Example], jobs: usize) -> Vec<Result<Trajectory>> {
    with_jobs(jobs, || {
        examples
            .par_iter()
            .map(|e| sup.build_trajectory(&e.sentence, &e.lf_text))
            .collect()
    })
}

/// Runs `f` on a pool of `jobs` threads; 0 means all available cores.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Vocabulary for the trainable table over the content words of `corpora`.
pub fn table_vocab<'a>(sup: &Supervisor, corpora: impl IntoIterator<Item = &'a Example>) -> Vocab {
    let mut words = Vec::new();
    for e in corpora {
        words.extend(sup.function_words.strip(&e.tokens()).content);
    }
    Vocab::build(words.iter().map(String::as_str))
}

pub fn sample(store: &EmbeddingStore, example: &Example, traj: &Trajectory) -> Result<Sample> {
    let input = store.get_embeddings(example.id, &traj.content_tokens, &traj.alignment)?;
    Ok(Sample {
        example_id: example.id,
        input,
        init: traj.initial_types.clone(),
        fin: traj.final_types.clone(),
    })
}

/// Samples for a training set; any missing trajectory is a coverage failure.
pub fn training_samples(
    sup: &Supervisor,
    store: &EmbeddingStore,
    examples: &[Example],
    jobs: usize,
) -> Result<Vec<Sample>> {
    let trajs = trajectorize(sup, examples, jobs);
    let missing: Vec<usize> = trajs
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_err())
        .map(|(i, _)| i)
        .collect();
    if let Some(&first) = missing.first() {
        let e = &examples[first];
        log::error!(
            "no trajectory for `{}`: {}",
            e.sentence,
            trajs[first].as_ref().unwrap_err()
        );
        return Err(Error::Coverage {
            missing: missing.len(),
            total: examples.len(),
        });
    }
    examples
        .iter()
        .zip(trajs)
        .map(|(e, t)| sample(store, e, &t.expect("checked above")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub init_acc: f64,
    pub final_acc: f64,
    pub temperature: f64,
    pub t: usize,
    pub seed: u64,
    pub config_hash: String,
    pub type_table_hash: String,
}

/// Batches of equal-length sequences in a seeded order.
pub fn batches(samples: &[Sample], batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut by_len: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, s) in samples.iter().enumerate() {
        by_len.entry(s.init.len()).or_default().push(i);
    }
    let mut out = Vec::new();
    for (_, mut idx) in by_len {
        idx.shuffle(&mut rng);
        out.extend(idx.chunks(batch_size).map(<[usize]>::to_vec));
    }
    out.shuffle(&mut rng);
    out
}

struct Shard {
    input: BatchInput,
    init: Vec<usize>,
    fin: Vec<usize>,
    rows: std::ops::Range<usize>,
}

fn shards(samples: &[Sample], batch: &[usize]) -> Result<Vec<Shard>> {
    let len = samples[batch[0]].init.len();
    batch
        .chunks(SHARD)
        .enumerate()
        .map(|(k, part)| {
            let inputs: Vec<&Input> = part.iter().map(|&i| &samples[i].input).collect();
            let start = k * SHARD * len;
            Ok(Shard {
                input: BatchInput::from_inputs(&inputs)?,
                init: part.iter().flat_map(|&i| samples[i].init.iter().copied()).collect(),
                fin: part.iter().flat_map(|&i| samples[i].fin.iter().copied()).collect(),
                rows: start..start + part.len() * len,
            })
        })
        .collect()
}

/// Trains from a fresh model. The returned log has one record per epoch.
pub fn train(
    samples: &[Sample],
    model_cfg: NcaConfig,
    cfg: &TrainConfig,
    type_table_hash: u64,
    vocab: Vocab,
    jobs: usize,
    log_path: Option<&Path>,
) -> Result<(Checkpoint, Vec<EpochLog>)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let mut model = NcaModel::new(model_cfg, cfg.seed)?;
    let mut opt = AdamW::new(&model_cfg, cfg.lr, cfg.weight_decay);
    let config_hash = cfg.hash_hex();
    let mut log_file = match log_path {
        Some(p) => Some(
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p, e))?,
        ),
        None => None,
    };
    let mut logs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (tau, t) = cfg.schedule(epoch);
        opt.lr = cfg.learning_rate(epoch);
        let (mut loss_sum, mut rows, mut init_ok, mut final_ok) = (0.0, 0usize, 0usize, 0usize);
        for (b, batch) in batches(samples, cfg.batch_size, cfg.seed, epoch).iter().enumerate() {
            let parts = shards(samples, batch)?;
            let total_rows = parts.last().map(|s| s.rows.end).unwrap_or(0);
            let mut rng = noise_rng(cfg.seed, epoch, b);
            let noise = gumbel_noise(total_rows, model_cfg.k, &mut rng);
            let opts = LossOptions {
                t: if cfg.sample_t { rng.gen_range(1..=t) } else { t },
                tau,
                mode: Mode::Train,
                w_init: cfg.w_init,
                w_final: cfg.w_final,
            };
            let results: Vec<_> = with_jobs(jobs, || {
                parts
                    .par_iter()
                    .map(|s| {
                        let n = noise.slice(s![s.rows.clone(), ..]).to_owned();
                        loss_and_grad(&model, &s.input, &s.init, &s.fin, &opts, Some(&n), None)
                    })
                    .collect()
            });
            // Shard losses are means; weight by rows for the batch mean.
            let mut grads = Params::zeros(&model_cfg);
            for (s, r) in parts.iter().zip(results) {
                let (report, mut g) = r?;
                let w = s.rows.len() as f64 / total_rows as f64;
                g.scale(w);
                grads.add_assign(&g);
                loss_sum += report.loss * s.rows.len() as f64;
                rows += s.rows.len();
                init_ok += report.init_correct;
                final_ok += report.final_correct;
            }
            if cfg.clip_norm > 0.0 {
                let norm = grads
                    .tensors()
                    .iter()
                    .flat_map(|(_, t)| t.iter())
                    .map(|g| g * g)
                    .sum::<f64>()
                    .sqrt();
                if norm > cfg.clip_norm {
                    grads.scale(cfg.clip_norm / norm);
                }
            }
            opt.step(&mut model.params, &grads);
            if let Some(name) = model.params.all_finite() {
                return Err(Error::NonFinite(format!("parameter {name} at epoch {epoch}")));
            }
        }
        let rec = EpochLog {
            epoch,
            loss: loss_sum / rows as f64,
            init_acc: init_ok as f64 / rows as f64,
            final_acc: final_ok as f64 / rows as f64,
            temperature: tau,
            t,
            seed: cfg.seed,
            config_hash: config_hash.clone(),
            type_table_hash: format!("{type_table_hash:016x}"),
        };
        info!(
            "epoch {epoch} loss {:.4} init {:.4} final {:.4} tau {tau:.3} T {t}",
            rec.loss, rec.init_acc, rec.final_acc
        );
        if let Some(f) = log_file.as_mut() {
            let line = serde_json::to_string(&rec)?;
            writeln!(f, "{line}").map_err(|e| Error::io(log_path.unwrap(), e))?;
        }
        logs.push(rec);
    }
    Ok((
        Checkpoint {
            model,
            type_table_hash,
            vocab,
        },
        logs,
    ))
}
