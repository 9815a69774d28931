//! Writes the precomputed-embedding binary format and the function-word
//! sidecar an external exporter needs, reads both back, and builds encoder
//! inputs from the file. Vectors here are random; a real exporter writes
//! contextual vectors for the same (example id, token position) keys.
//!
//! cargo run --example embeddings_file -- [OUT_DIR]

use std::path::PathBuf;

use ccg_nca::ccg::strip::FunctionWords;
use ccg_nca::ccg::Supervisor;
use ccg_nca::data::embeddings::{EmbeddingFile, EmbeddingStore, EmbeddingWriter};
use ccg_nca::data::synth::{gen_synthetic, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 16;

fn main() -> ccg_nca::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| std::env::temp_dir().display().to_string()),
    );
    std::fs::create_dir_all(&out).expect("output directory");
    let sup = Supervisor::default();
    let cfg = SynthConfig {
        train_size: 50,
        gen_per_category: 5,
        ..SynthConfig::default()
    };
    let (train, _) = gen_synthetic(&cfg, 0)?;

    let sidecar = out.join("funcwords.json");
    sup.function_words.write(&sidecar)?;
    let words = FunctionWords::load(&sidecar)?;

    let bin = out.join("train.emb");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut w = EmbeddingWriter::create(&bin, DIM)?;
    for e in &train {
        for &pos in &words.strip(&e.tokens()).alignment {
            let v: Vec<f32> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
            w.write(e.id, pos as u16, &v)?;
        }
    }
    w.finish()?;

    let file = EmbeddingFile::open(&bin)?;
    println!("{}: {} vectors of width {}", bin.display(), file.len(), file.dim());
    println!("{}: {} always-stripped words", sidecar.display(), words.always.len());
    let store = EmbeddingStore::File(file);
    let e = &train[0];
    let s = words.strip(&e.tokens());
    let input = store.get_embeddings(e.id, &s.content, &s.alignment)?;
    println!(
        "{}\n  content {:?} at {:?}\n  {} encoder rows",
        e.sentence,
        s.content,
        s.alignment,
        input.len()
    );
    Ok(())
}
