//! The desk-scale experiment: synthetic corpus, trainable embedding table,
//! one model per seed, gen-set records with structural labels.

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_mechanism, classify_subpattern, MechanismLabel, SubPatternLabel, TrainCoverage};
use crate::ccg::Supervisor;
use crate::data::embeddings::EmbeddingStore;
use crate::data::synth::{gen_synthetic, SynthConfig};
use crate::data::tsv::Example;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalRecord, Predictor};
use crate::lf::parse_lf;
use crate::neural::checkpoint::Checkpoint;
use crate::neural::model::NcaConfig;
use crate::training::{table_vocab, train, training_samples, trajectorize, EpochLog, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeskConfig {
    pub synth: SynthConfig,
    /// Corpus seed; fixed across model seeds.
    pub corpus_seed: u64,
    pub train: TrainConfig,
    pub k: usize,
    pub d: usize,
    pub h: usize,
    pub embed_dim: usize,
}

impl Default for DeskConfig {
    fn default() -> Self {
        DeskConfig {
            synth: SynthConfig::default(),
            corpus_seed: 0,
            train: TrainConfig::desk(),
            k: 32,
            d: 32,
            h: 64,
            embed_dim: 32,
        }
    }
}

/// Structural labels of one gen example, independent of any model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub subpattern: Option<SubPatternLabel>,
    pub mechanism: Option<MechanismLabel>,
}

pub struct Corpus {
    pub train: Vec<Example>,
    pub gen: Vec<Example>,
    pub labels: Vec<Labels>,
}

pub fn corpus(cfg: &DeskConfig, sup: &Supervisor, jobs: usize) -> Result<Corpus> {
    let (train, gen) = gen_synthetic(&cfg.synth, cfg.corpus_seed)?;
    let train_trajs: Vec<_> = trajectorize(sup, &train, jobs).into_iter().collect::<Result<_>>()?;
    let cov = TrainCoverage::build(&train_trajs, &sup.table);
    let labels = label_examples(sup, &gen, &cov, jobs);
    Ok(Corpus { train, gen, labels })
}

pub fn label_examples(sup: &Supervisor, examples: &[Example], cov: &TrainCoverage, jobs: usize) -> Vec<Labels> {
    trajectorize(sup, examples, jobs)
        .into_iter()
        .zip(examples)
        .map(|(t, e)| match t {
            Ok(t) => {
                let lf = parse_lf(&e.lf_text).ok();
                Labels {
                    subpattern: Some(classify_subpattern(lf.as_ref(), &t, &sup.table)),
                    mechanism: Some(classify_mechanism(lf.as_ref(), &t, cov, &sup.table)),
                }
            }
            Err(_) => Labels {
                subpattern: None,
                mechanism: None,
            },
        })
        .collect()
}

pub struct DeskRun {
    pub seed: u64,
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub records: Vec<EvalRecord>,
}

/// Trains one model on `corpus.train` and evaluates it on `corpus.gen`.
pub fn run_seed(cfg: &DeskConfig, sup: &Supervisor, corpus: &Corpus, seed: u64, jobs: usize) -> Result<DeskRun> {
    let vocab = table_vocab(sup, corpus.train.iter().chain(&corpus.gen));
    let store = EmbeddingStore::Table {
        vocab: vocab.clone(),
        dim: cfg.embed_dim,
    };
    let samples = training_samples(sup, &store, &corpus.train, jobs)?;
    let model_cfg = NcaConfig::new(cfg.k, cfg.d, cfg.h, sup.table.len(), cfg.embed_dim, vocab.len());
    let tc = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let (checkpoint, log) = train(&samples, model_cfg, &tc, sup.table.short_hash(), vocab, jobs, None)?;
    let predictor = Predictor::Model {
        model: &checkpoint.model,
        store: &store,
        t: tc.t_max,
    };
    let records = evaluate(sup, &predictor, &corpus.gen, jobs);
    if records
        .iter()
        .any(|r| r.failure_note.as_deref().is_some_and(|n| n.starts_with("no gold")))
    {
        return Err(Error::Config("synthetic gen example without a gold trajectory".into()));
    }
    Ok(DeskRun {
        seed,
        checkpoint,
        log,
        records,
    })
}
