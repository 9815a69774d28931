//! Scores gold types through the full pipeline: every example is parsed
//! from its gold initial types and the recovered edges are compared with the
//! logical form. Any miss is a supervision bug, not a model error.
//!
//! cargo run --release --example oracle_eval -- [DATA_DIR]

use std::path::Path;

use ccg_nca::ccg::Supervisor;
use ccg_nca::data::synth::{gen_synthetic, SynthConfig};
use ccg_nca::data::{load_tsv, locate_data};
use ccg_nca::eval::{category_report, evaluate, Metric, Predictor};

fn main() -> ccg_nca::Result<()> {
    let gen = match std::env::args().nth(1) {
        Some(dir) => load_tsv(
            &locate_data(Path::new(&dir))
                .expect("no gen*.tsv under the given directory")
                .gen,
        )?,
        None => gen_synthetic(&SynthConfig::default(), 0)?.1,
    };
    let sup = Supervisor::default();
    let records = evaluate(&sup, &Predictor::Oracle, &gen, 0);
    let mut categories: Vec<&str> = gen.iter().map(|e| e.category.as_str()).collect();
    categories.sort_unstable();
    categories.dedup();
    for metric in [Metric::Type, Metric::Edge] {
        println!("{metric:?}");
        print!(
            "{}",
            category_report(&[(0, records.clone())], metric, &categories).render_text()
        );
    }
    for r in records.iter().filter(|r| !r.edge_match).take(10) {
        println!(
            "miss [{}] {} {}",
            r.category,
            r.sentence,
            r.failure_note.as_deref().unwrap_or("")
        );
    }
    Ok(())
}
