//! Labels every generalization example with its sub-pattern and with the
//! structural reason it can or cannot be reached from training data, then
//! lists the type trigrams each category shows that training never did.
//!
//! cargo run --release --example analyze_mechanisms -- [DATA_DIR]
//!
//! DATA_DIR is searched for `train.tsv` and `gen*.tsv`; without it the
//! synthetic corpus is used.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ccg_nca::analysis::{classify_mechanism, classify_subpattern, ngram_coverage, TrainCoverage};
use ccg_nca::ccg::Supervisor;
use ccg_nca::data::synth::{gen_synthetic, SynthConfig};
use ccg_nca::data::{load_tsv, locate_data};
use ccg_nca::lf::parse_lf;
use ccg_nca::training::trajectorize;

fn main() -> ccg_nca::Result<()> {
    let (train, gen) = match std::env::args().nth(1) {
        Some(dir) => {
            let files = locate_data(Path::new(&dir)).expect("no train.tsv / gen*.tsv under the given directory");
            (load_tsv(&files.train)?, load_tsv(&files.gen)?)
        }
        None => gen_synthetic(&SynthConfig::default(), 0)?,
    };
    let sup = Supervisor::default();
    let trajs: Vec<_> = trajectorize(&sup, &train, 0)
        .into_iter()
        .filter_map(|t| t.ok())
        .collect();
    println!(
        "train {} ({} with a trajectory), gen {}",
        train.len(),
        trajs.len(),
        gen.len()
    );
    let cov = TrainCoverage::build(&trajs, &sup.table);

    let mut mechanisms: BTreeMap<(&str, String), usize> = BTreeMap::new();
    let mut patterns: BTreeMap<(&str, String), usize> = BTreeMap::new();
    let mut novel: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
    for (e, t) in gen.iter().zip(trajectorize(&sup, &gen, 0)) {
        let Ok(t) = t else {
            *mechanisms.entry((&e.category, "no trajectory".into())).or_default() += 1;
            continue;
        };
        let lf = parse_lf(&e.lf_text).ok();
        let m = classify_mechanism(lf.as_ref(), &t, &cov, &sup.table);
        *mechanisms.entry((&e.category, m.render())).or_default() += 1;
        let p = classify_subpattern(lf.as_ref(), &t, &sup.table);
        *patterns.entry((&e.category, p.key())).or_default() += 1;
        let grams: BTreeSet<String> = ngram_coverage(&cov, &t.initial_types, 3)
            .iter()
            .map(|g| sup.table.names(g).join(" "))
            .collect();
        for g in grams {
            *novel.entry(&e.category).or_default().entry(g).or_default() += 1;
        }
    }

    println!("\nmechanisms");
    for ((cat, label), n) in &mechanisms {
        println!("  {cat:<24} {label:<40} {n}");
    }
    println!("\nsub-patterns");
    for ((cat, key), n) in &patterns {
        println!("  {cat:<24} {key:<60} {n}");
    }
    println!("\nunseen trigrams");
    for (cat, grams) in &novel {
        for (g, n) in grams {
            println!("  {cat:<24} {g:<30} {n}");
        }
    }
    Ok(())
}
