//! Turns a sentence and its logical form into CCG supervision: content
//! tokens, initial types, the unique CKY derivation, final types and the
//! semantic edges read back off the derivation.
//!
//! cargo run --example derive_trajectory -- ["<sentence>" "<lf>"]
//!
//! Without arguments, one synthetic example per generalization category is shown.

use ccg_nca::ccg::{Supervisor, Trajectory};
use ccg_nca::data::synth::{gen_synthetic, SynthConfig};

fn show(sup: &Supervisor, sentence: &str, t: &Trajectory) {
    println!("{sentence}");
    println!("  content  {}", t.content_tokens.join(" "));
    println!("  initial  {}", sup.table.names(&t.initial_types).join(" "));
    println!("  final    {}", sup.table.names(&t.final_types).join(" "));
    println!("  head     {}", t.content_tokens[t.head()]);
    println!("  tree     {}", t.derivation.render(&sup.table));
    for e in &t.gold_edges.edges {
        println!(
            "  edge     {} -{}-> {}",
            t.tokens[e.head], e.role, t.tokens[e.dependent]
        );
    }
    println!();
}

fn main() -> ccg_nca::Result<()> {
    let sup = Supervisor::default();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [sentence, lf] = args.as_slice() {
        let t = sup.build_trajectory(sentence, lf)?;
        show(&sup, sentence, &t);
        return Ok(());
    }
    let cfg = SynthConfig {
        train_size: 1,
        gen_per_category: 1,
        ..SynthConfig::default()
    };
    let (_, gen) = gen_synthetic(&cfg, 4)?;
    for e in &gen {
        println!("[{}]", e.category);
        show(&sup, &e.sentence, &sup.build_trajectory(&e.sentence, &e.lf_text)?);
    }
    Ok(())
}
