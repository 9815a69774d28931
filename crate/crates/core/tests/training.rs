mod common;

use ccg_nca::ccg::Supervisor;
use ccg_nca::data::embeddings::EmbeddingStore;
use ccg_nca::data::Example;
use ccg_nca::error::Error;
use ccg_nca::neural::model::{NcaConfig, NcaModel};
use ccg_nca::neural::nca::{loss_and_grad, loss_value, BatchInput, LossOptions, Mode};
use ccg_nca::training::{table_vocab, train, training_samples, AdamW, TrainConfig};
use common::{small_corpus, table_case, train_small};

#[test]
fn same_seed_same_checkpoint_for_any_thread_count() {
    let sup = Supervisor::default();
    let (train_set, _) = small_corpus(120, 1, 3);
    let a = train_small(&sup, &train_set, 7, 1);
    let b = train_small(&sup, &train_set, 7, 0);
    let c = train_small(&sup, &train_set, 7, 3);
    assert_eq!(a.to_bytes(), b.to_bytes());
    assert_eq!(a.sha256_hex(), c.sha256_hex());
    assert_ne!(a.sha256_hex(), train_small(&sup, &train_set, 8, 1).sha256_hex());
}

#[test]
fn uniform_readout_costs_ln_c_at_both_points() {
    let (mut model, input, init, fin) = table_case(1);
    model.params.readout.fill(0.0);
    let opts = LossOptions {
        t: 3,
        tau: 1.0,
        mode: Mode::Infer,
        w_init: 1.0,
        w_final: 1.0,
    };
    let (rep, _) = loss_and_grad(&model, &input, &init, &fin, &opts, None, None).unwrap();
    let ln_c = (model.cfg.c as f64).ln();
    assert!((rep.init_ce - ln_c).abs() < 1e-12);
    assert!((rep.final_ce - ln_c).abs() < 1e-12);
    assert!((rep.loss - 2.0 * ln_c).abs() < 1e-12);
}

/// Ten equal-length examples in one batch, optimized on the noise-free
/// relaxed path until both cross-entropies vanish.
#[test]
fn memorizes_ten_examples() {
    let sup = Supervisor::default();
    let (pool, _) = small_corpus(200, 1, 11);
    let trajs: Vec<_> = pool
        .iter()
        .map(|e| sup.build_trajectory(&e.sentence, &e.lf_text).unwrap())
        .collect();
    let len = trajs[0].len();
    let chosen: Vec<usize> = (0..pool.len()).filter(|&i| trajs[i].len() == len).take(10).collect();
    assert_eq!(chosen.len(), 10);
    let examples: Vec<Example> = chosen.iter().map(|&i| pool[i].clone()).collect();
    let vocab = table_vocab(&sup, &examples);
    let store = EmbeddingStore::Table {
        vocab: vocab.clone(),
        dim: 16,
    };
    let samples = training_samples(&sup, &store, &examples, 1).unwrap();
    let inputs: Vec<_> = samples.iter().map(|s| &s.input).collect();
    let input = BatchInput::from_inputs(&inputs).unwrap();
    let init: Vec<usize> = samples.iter().flat_map(|s| s.init.clone()).collect();
    let fin: Vec<usize> = samples.iter().flat_map(|s| s.fin.clone()).collect();

    let model_cfg = NcaConfig::new(16, 16, 32, sup.table.len(), 16, vocab.len());
    let mut model = NcaModel::new(model_cfg, 0).unwrap();
    let mut opt = AdamW::new(&model_cfg, 1e-2, 0.0);
    let opts = LossOptions {
        t: 3,
        tau: 1.0,
        mode: Mode::Soft,
        w_init: 1.0,
        w_final: 1.0,
    };
    let mut loss = f64::INFINITY;
    for _ in 0..2000 {
        let (rep, grads) = loss_and_grad(&model, &input, &init, &fin, &opts, None, None).unwrap();
        loss = rep.loss;
        if loss < 1e-3 {
            break;
        }
        opt.step(&mut model.params, &grads);
    }
    assert!(loss < 1e-3, "loss {loss:e}");
    assert!((loss - loss_value(&model, &input, &init, &fin, &opts, None, None)).abs() < 1e-12);
}

#[test]
fn log_follows_schedule() {
    let sup = Supervisor::default();
    let (train_set, _) = small_corpus(40, 1, 5);
    let vocab = table_vocab(&sup, &train_set);
    let store = EmbeddingStore::Table {
        vocab: vocab.clone(),
        dim: 8,
    };
    let samples = training_samples(&sup, &store, &train_set, 1).unwrap();
    let cfg = TrainConfig {
        epochs: 6,
        temp_anneal_epochs: 4,
        t_max: 5,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    let model_cfg = NcaConfig::new(8, 8, 16, sup.table.len(), 8, vocab.len());
    let (_, log) = train(&samples, model_cfg, &cfg, sup.table.short_hash(), vocab, 1, Some(&path)).unwrap();
    assert_eq!(log.len(), 6);
    for (e, l) in log.iter().enumerate() {
        assert_eq!((l.temperature, l.t), cfg.schedule(e));
        assert!(l.loss.is_finite());
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 6);
}

#[test]
fn uncovered_example_is_a_coverage_error() {
    let sup = Supervisor::default();
    let (mut train_set, _) = small_corpus(20, 1, 2);
    train_set.push(Example {
        id: 20,
        sentence: "Emma cat .".into(),
        lf_text: "cat ( x _ 1 )".into(),
        ..train_set[0].clone()
    });
    let store = EmbeddingStore::Table {
        vocab: table_vocab(&sup, &train_set),
        dim: 4,
    };
    match training_samples(&sup, &store, &train_set, 1) {
        Err(Error::Coverage { missing: 1, total: 21 }) => {}
        other => panic!("{other:?}"),
    }
}
