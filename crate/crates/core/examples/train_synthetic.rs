//! Trains on the synthetic corpus with the trainable embedding table and
//! prints per-category scores and sub-pattern tables.
//!
//! cargo run --release --example train_synthetic -- [--config desk.json] [seed ...]

use std::time::Instant;

use ccg_nca::analysis::decompose_category;
use ccg_nca::ccg::Supervisor;
use ccg_nca::data::synth::GEN_CATEGORIES;
use ccg_nca::desk::{corpus, run_seed, DeskConfig};
use ccg_nca::eval::{category_report, EvalRecord, Metric};

fn main() -> ccg_nca::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match args.iter().position(|a| a == "--config") {
        Some(i) => serde_json::from_str(&std::fs::read_to_string(&args[i + 1]).expect("config file"))?,
        None => DeskConfig::default(),
    };
    let seeds: Vec<u64> = args.iter().filter_map(|s| s.parse().ok()).collect();
    let seeds = if seeds.is_empty() { vec![0] } else { seeds };
    let sup = Supervisor::default();
    let corpus = corpus(&cfg, &sup, 0)?;
    println!("train {} gen {}", corpus.train.len(), corpus.gen.len());

    let mut runs = Vec::new();
    for &seed in &seeds {
        let start = Instant::now();
        let run = run_seed(&cfg, &sup, &corpus, seed, 0)?;
        println!("seed {seed}: {:.1}s", start.elapsed().as_secs_f64());
        runs.push((seed, run.records));
    }
    for metric in [Metric::Type, Metric::Initial, Metric::Final, Metric::Edge] {
        println!("\n{metric:?}");
        print!("{}", category_report(&runs, metric, &GEN_CATEGORIES).render_text());
    }
    for (seed, records) in &runs {
        println!("\nseed {seed}");
        for cat in GEN_CATEGORIES {
            let idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].category == cat).collect();
            let recs: Vec<&EvalRecord> = idx.iter().map(|&i| &records[i]).collect();
            let keys: Vec<String> = idx
                .iter()
                .map(|&i| {
                    let l = &corpus.labels[i];
                    format!(
                        "{} [{}]",
                        l.subpattern.map(|s| s.key()).unwrap_or_default(),
                        l.mechanism.as_ref().map(|m| m.render()).unwrap_or_default()
                    )
                })
                .collect();
            print!(
                "{}",
                decompose_category(cat, &recs, &keys, |r| r.type_match).render_text()
            );
            if let Some(r) = recs.iter().find(|r| !r.type_match) {
                println!("  e.g. {}", r.sentence);
                println!("    initial {}", r.predicted_initial_types.join(" "));
                println!("    final   {}", r.predicted_final_types.join(" "));
            }
        }
    }
    Ok(())
}
