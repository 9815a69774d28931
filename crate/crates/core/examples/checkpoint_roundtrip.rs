//! Trains a small model for a few epochs, saves it, loads it back and checks
//! that the reloaded model predicts the same types.
//!
//! cargo run --release --example checkpoint_roundtrip -- [PATH]

use std::path::PathBuf;

use ccg_nca::ccg::Supervisor;
use ccg_nca::data::embeddings::EmbeddingStore;
use ccg_nca::data::synth::{gen_synthetic, SynthConfig};
use ccg_nca::neural::checkpoint::Checkpoint;
use ccg_nca::neural::model::NcaConfig;
use ccg_nca::neural::nca::{predict, BatchInput};
use ccg_nca::training::{table_vocab, train, training_samples, TrainConfig};

fn main() -> ccg_nca::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("roundtrip.ckpt"));
    let sup = Supervisor::default();
    let cfg = SynthConfig {
        train_size: 300,
        gen_per_category: 5,
        ..SynthConfig::default()
    };
    let (train_set, gen) = gen_synthetic(&cfg, 0)?;
    let vocab = table_vocab(&sup, train_set.iter().chain(&gen));
    let store = EmbeddingStore::Table {
        vocab: vocab.clone(),
        dim: 16,
    };
    let samples = training_samples(&sup, &store, &train_set, 0)?;
    let model_cfg = NcaConfig::new(16, 16, 32, sup.table.len(), 16, vocab.len());
    let tc = TrainConfig {
        epochs: 5,
        temp_anneal_epochs: 4,
        t_max: 8,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let (ck, log) = train(&samples, model_cfg, &tc, sup.table.short_hash(), vocab, 0, None)?;
    for l in &log {
        println!(
            "epoch {:>2} T {:>2} tau {:.2} loss {:.4}",
            l.epoch, l.t, l.temperature, l.loss
        );
    }
    ck.save(&path)?;
    let back = Checkpoint::load(&path)?;
    println!("{} sha256 {}", path.display(), back.sha256_hex());

    let e = &gen[0];
    let s = sup.function_words.strip(&e.tokens());
    let input = BatchInput::from_inputs(&[&store.get_embeddings(e.id, &s.content, &s.alignment)?])?;
    let (a, b) = (
        predict(&ck.model, &input, tc.t_max),
        predict(&back.model, &input, tc.t_max),
    );
    println!(
        "{}\n  initial {}\n  final   {}",
        e.sentence,
        sup.table.names(&a.0).join(" "),
        sup.table.names(&a.1).join(" ")
    );
    assert_eq!(a, b, "reloaded model disagrees");
    println!("reloaded model agrees");
    Ok(())
}
