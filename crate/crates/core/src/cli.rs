//! Command-line front end. `run` returns the process exit code; usage
//! errors (including unknown flags) exit with 2.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_mechanism, classify_subpattern, decompose_category, ngram_coverage, TrainCoverage};
use crate::ccg::{FunctionWords, Supervisor, TypeTable};
use crate::data::embeddings::{EmbeddingFile, EmbeddingStore};
use crate::data::synth::{gen_synthetic, SynthConfig};
use crate::data::tsv::{category_counts, load_tsv, write_tsv, Example};
use crate::error::{Error, Result};
use crate::eval::{category_report, evaluate, EvalRecord, Metric, Predictor};
use crate::lf::parse_lf;
use crate::neural::checkpoint::Checkpoint;
use crate::neural::model::{NcaConfig, PARAM_BUDGET};
use crate::training::{table_vocab, train, training_samples, trajectorize, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ccg-nca",
    version,
    about = "CCG supervision, NCA type prediction and structural evaluation"
)]
pub struct Cli {
    /// Type table TSV; the built-in table when absent.
    #[arg(long, global = true)]
    pub type_table: Option<PathBuf>,
    /// Function-word list JSON; the built-in list when absent.
    #[arg(long, global = true)]
    pub funcwords_in: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// TSV to trajectories (JSON lines) plus a coverage manifest.
    Derive(DeriveArgs),
    /// Trains one model per seed.
    Train(TrainArgs),
    /// Scores checkpoints (or gold types) on a TSV, per category.
    Eval(EvalArgs),
    /// Sub-pattern decomposition, mechanism labels and novel n-grams.
    Analyze(AnalyzeArgs),
    /// Writes the synthetic corpus.
    Synth(SynthArgs),
    /// Gold-type pipeline fidelity: type to edge agreement.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Trajectory output (JSON lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes the function-word list used for stripping.
    #[arg(long)]
    pub funcwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `table` or `file:PATH`.
    #[arg(long, default_value = "table")]
    pub embeddings: String,
    /// Output path; `{seed}` is replaced per seed.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides `--seed`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// TrainConfig JSON; unspecified fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starts from the CPU profile instead of the full schedule.
    #[arg(long)]
    pub desk: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// `K,D,H`; defaults to the parameter budget.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Width of the trainable table.
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
    /// Extra TSVs whose words enter the trainable table's vocabulary.
    #[arg(long)]
    pub vocab_from: Vec<PathBuf>,
    /// JSON-lines epoch log; `{seed}` is replaced per seed.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path; `{seed}` is replaced per seed.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    pub embeddings: String,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Scores gold types; no checkpoint needed.
    #[arg(long)]
    pub oracle_types: bool,
    /// Rollout steps; read from the checkpoint metadata when absent.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum, default_value_t = MetricArg::Type)]
    pub metric: MetricArg,
    /// Per-example records (JSON lines); `{seed}` is replaced per seed.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Type,
    Initial,
    Final,
    Edge,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Type => Metric::Type,
            MetricArg::Initial => Metric::Initial,
            MetricArg::Final => Metric::Final,
            MetricArg::Edge => Metric::Edge,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Evaluated TSV (gen set).
    #[arg(long)]
    pub data: PathBuf,
    /// Training TSV for the coverage index.
    #[arg(long)]
    pub train: PathBuf,
    /// Records from `eval --records`; labels only when absent.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Type)]
    pub metric: MetricArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Writes the function-word list next to the corpus.
    #[arg(long)]
    pub funcwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Mismatches listed in text output.
    #[arg(long, default_value_t = 20)]
    pub show: usize,
}

/// Metadata written next to each checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub train: TrainConfig,
    pub config_hash: String,
    pub type_table_hash: String,
    pub checkpoint_sha256: String,
    pub embeddings: String,
}

pub fn meta_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn per_seed(path: &Path, seed: u64) -> PathBuf {
    PathBuf::from(path.to_string_lossy().replace("{seed}", &seed.to_string()))
}

fn supervisor(cli: &Cli) -> Result<Supervisor> {
    let table = match &cli.type_table {
        Some(p) => TypeTable::load(p)?,
        None => TypeTable::builtin(),
    };
    let fw = match &cli.funcwords_in {
        Some(p) => FunctionWords::load(p)?,
        None => FunctionWords::default(),
    };
    Ok(Supervisor::new(table, fw))
}

fn emit(cli: &Cli, text: &str, json: &serde_json::Value) {
    match cli.format {
        Format::Text => print!("{text}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(json).expect("json")),
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let sup = supervisor(cli)?;
    match &cli.command {
        Command::Derive(a) => derive(cli, &sup, a),
        Command::Train(a) => train_cmd(cli, &sup, a),
        Command::Eval(a) => eval_cmd(cli, &sup, a),
        Command::Analyze(a) => analyze(cli, &sup, a),
        Command::Synth(a) => synth(cli, &sup, a),
        Command::Audit(a) => audit(cli, &sup, a),
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn derive(cli: &Cli, sup: &Supervisor, a: &DeriveArgs) -> Result<()> {
    let examples = load_tsv(&a.data)?;
    let trajs = trajectorize(sup, &examples, cli.jobs);
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut first_errors = Vec::new();
    for (e, t) in examples.iter().zip(&trajs) {
        if let Err(err) = t {
            *failures.entry(e.category.clone()).or_default() += 1;
            if first_errors.len() < 10 {
                first_errors.push(format!("{}: {err}", e.sentence));
            }
        }
    }
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        for (e, t) in examples.iter().zip(&trajs) {
            if let Ok(t) = t {
                let line = serde_json::json!({
                    "id": e.id,
                    "category": e.category,
                    "content_tokens": t.content_tokens,
                    "alignment": t.alignment,
                    "initial_types": sup.table.names(&t.initial_types),
                    "final_types": sup.table.names(&t.final_types),
                    "derivation": t.derivation.render(&sup.table),
                });
                writeln!(w, "{line}").map_err(|e| Error::io(out, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(out, e))?;
    }
    if let Some(p) = &a.funcwords {
        sup.function_words.write(p)?;
    }
    let missing: usize = failures.values().sum();
    let manifest = serde_json::json!({
        "data": a.data,
        "examples": examples.len(),
        "covered": examples.len() - missing,
        "coverage": if examples.is_empty() { 1.0 } else { (examples.len() - missing) as f64 / examples.len() as f64 },
        "failures_by_category": failures,
        "first_errors": first_errors,
        "type_table_hash": sup.table.hash_hex(),
    });
    let text = format!(
        "{} examples, {} covered ({:.2}%)\n{}",
        examples.len(),
        examples.len() - missing,
        100.0 * manifest["coverage"].as_f64().unwrap_or(0.0),
        first_errors.iter().map(|s| format!("  {s}\n")).collect::<String>()
    );
    emit(cli, &text, &manifest);
    Ok(())
}

fn store_for(spec: &str, vocab: Option<crate::data::embeddings::Vocab>, dim: usize) -> Result<EmbeddingStore> {
    if spec == "table" {
        return Ok(EmbeddingStore::Table {
            vocab: vocab.unwrap_or_default(),
            dim,
        });
    }
    match spec.strip_prefix("file:") {
        Some(p) => Ok(EmbeddingStore::File(EmbeddingFile::open(Path::new(p))?)),
        None => Err(Error::Config(format!(
            "--embeddings expects `table` or `file:PATH`, got `{spec}`"
        ))),
    }
}

fn train_cmd(cli: &Cli, sup: &Supervisor, a: &TrainArgs) -> Result<()> {
    let examples = load_tsv(&a.data)?;
    let mut base = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)?
        }
        None if a.desk => TrainConfig::desk(),
        None => TrainConfig::default(),
    };
    if let Some(e) = a.epochs {
        base.epochs = e;
    }
    base.validate()?;
    let (store, vocab) = if a.embeddings == "table" {
        let mut extra = Vec::new();
        for p in &a.vocab_from {
            extra.extend(load_tsv(p)?);
        }
        let vocab = table_vocab(sup, examples.iter().chain(&extra));
        (store_for("table", Some(vocab.clone()), a.embed_dim)?, vocab)
    } else {
        (store_for(&a.embeddings, None, 0)?, Default::default())
    };
    let samples = training_samples(sup, &store, &examples, cli.jobs)?;
    let vocab_size = if a.embeddings == "table" { vocab.len() } else { 0 };
    let model_cfg = match a.dims.as_slice() {
        [] => NcaConfig::for_budget(sup.table.len(), store.dim(), vocab_size, PARAM_BUDGET),
        [k, d, h] => NcaConfig::new(*k, *d, *h, sup.table.len(), store.dim(), vocab_size),
        _ => return Err(Error::Config("--dims expects K,D,H".into())),
    };
    let seeds = if a.seeds.is_empty() {
        vec![a.seed]
    } else {
        a.seeds.clone()
    };
    let mut summary = Vec::new();
    for seed in seeds {
        let cfg = TrainConfig { seed, ..base.clone() };
        let log_path = a.log.as_ref().map(|p| per_seed(p, seed));
        let (ck, log) = train(
            &samples,
            model_cfg,
            &cfg,
            sup.table.short_hash(),
            vocab.clone(),
            cli.jobs,
            log_path.as_deref(),
        )?;
        let path = per_seed(&a.checkpoint, seed);
        ck.save(&path)?;
        let meta = CheckpointMeta {
            seed,
            train: cfg.clone(),
            config_hash: cfg.hash_hex(),
            type_table_hash: format!("{:016x}", sup.table.short_hash()),
            checkpoint_sha256: ck.sha256_hex(),
            embeddings: a.embeddings.clone(),
        };
        std::fs::write(meta_path(&path), serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&path, e))?;
        let last = log.last().cloned();
        summary.push(serde_json::json!({ "seed": seed, "checkpoint": path, "sha256": meta.checkpoint_sha256, "last_epoch": last }));
    }
    let text = summary
        .iter()
        .map(|s| format!("seed {} -> {} sha256 {}\n", s["seed"], s["checkpoint"], s["sha256"]))
        .collect::<String>();
    emit(cli, &text, &serde_json::Value::Array(summary));
    Ok(())
}

fn write_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

fn eval_cmd(cli: &Cli, sup: &Supervisor, a: &EvalArgs) -> Result<()> {
    let examples = load_tsv(&a.data)?;
    let expected: Vec<String> = category_counts(&examples).into_keys().collect();
    let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
    let mut runs = Vec::new();
    if a.oracle_types {
        runs.push((0, evaluate(sup, &Predictor::Oracle, &examples, cli.jobs)));
    } else {
        let ck_path = a
            .checkpoint
            .as_ref()
            .ok_or_else(|| Error::Config("eval needs --checkpoint or --oracle-types".into()))?;
        let seeds = if a.seeds.is_empty() { vec![0] } else { a.seeds.clone() };
        for seed in seeds {
            let path = per_seed(ck_path, seed);
            let ck = Checkpoint::load(&path)?;
            if ck.type_table_hash != sup.table.short_hash() {
                return Err(Error::Checkpoint(format!(
                    "{} was trained with a different type table",
                    path.display()
                )));
            }
            let meta: Option<CheckpointMeta> = std::fs::read_to_string(meta_path(&path))
                .ok()
                .and_then(|t| serde_json::from_str(&t).ok());
            let t = a
                .steps
                .or(meta.as_ref().map(|m| m.train.t_max))
                .unwrap_or(TrainConfig::default().t_max);
            let store = store_for(&a.embeddings, Some(ck.vocab.clone()), ck.model.cfg.embed_dim)?;
            let predictor = Predictor::Model {
                model: &ck.model,
                store: &store,
                t,
            };
            runs.push((seed, evaluate(sup, &predictor, &examples, cli.jobs)));
        }
    }
    if let Some(p) = &a.records {
        for (seed, recs) in &runs {
            write_records(&per_seed(p, *seed), recs)?;
        }
    }
    let table = category_report(&runs, a.metric.into(), &expected);
    let mut text = table.render_text();
    let ambiguous: usize = runs[0].1.iter().filter(|r| r.initial_match && !r.edge_match).count();
    if ambiguous > 0 {
        text.push_str(&format!(
            "{ambiguous} examples with matching types but differing edges\n"
        ));
    }
    emit(cli, &text, &serde_json::to_value(&table)?);
    Ok(())
}

fn analyze(cli: &Cli, sup: &Supervisor, a: &AnalyzeArgs) -> Result<()> {
    let train_ex = load_tsv(&a.train)?;
    let gen = load_tsv(&a.data)?;
    let train_trajs: Vec<_> = trajectorize(sup, &train_ex, cli.jobs)
        .into_iter()
        .filter_map(|t| t.ok())
        .collect();
    let cov = TrainCoverage::build(&train_trajs, &sup.table);
    let gen_trajs = trajectorize(sup, &gen, cli.jobs);
    let records = match &a.records {
        Some(p) => Some(read_records(p)?),
        None => None,
    };
    if let Some(r) = &records {
        if r.len() != gen.len() {
            return Err(Error::Config(format!("{} records for {} examples", r.len(), gen.len())));
        }
    }
    let metric: Metric = a.metric.into();
    let mut by_cat: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in gen.iter().enumerate() {
        by_cat.entry(e.category.clone()).or_default().push(i);
    }
    let mut text = String::new();
    let mut json = Vec::new();
    for (cat, idx) in &by_cat {
        let mut keys = Vec::new();
        let mut mech: BTreeMap<String, usize> = BTreeMap::new();
        let mut trigrams: BTreeMap<String, usize> = BTreeMap::new();
        for &i in idx {
            let (key, m) = match &gen_trajs[i] {
                Ok(t) => {
                    let lf = parse_lf(&gen[i].lf_text).ok();
                    for g in ngram_coverage(&cov, &t.initial_types, 3) {
                        *trigrams.entry(sup.table.names(&g).join(" ")).or_default() += 1;
                    }
                    (
                        classify_subpattern(lf.as_ref(), t, &sup.table).key(),
                        classify_mechanism(lf.as_ref(), t, &cov, &sup.table).render(),
                    )
                }
                Err(_) => ("no-trajectory".into(), "no-trajectory".into()),
            };
            keys.push(key);
            *mech.entry(m).or_default() += 1;
        }
        text.push_str(&format!(
            "{cat}\n  mechanisms: {mech:?}\n  novel trigrams: {trigrams:?}\n"
        ));
        let mut entry = serde_json::json!({ "category": cat, "mechanisms": mech, "novel_trigrams": trigrams });
        if let Some(recs) = &records {
            let rs: Vec<&EvalRecord> = idx.iter().map(|&i| &recs[i]).collect();
            let d = decompose_category(cat, &rs, &keys, |r| metric.of(r));
            text.push_str(&d.render_text());
            entry["decomposition"] = serde_json::to_value(&d)?;
        }
        json.push(entry);
    }
    emit(cli, &text, &serde_json::Value::Array(json));
    Ok(())
}

fn synth(cli: &Cli, sup: &Supervisor, a: &SynthArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig::default(),
    };
    let (train, gen) = gen_synthetic(&cfg, a.seed)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    write_tsv(&a.out_dir.join("train.tsv"), &train)?;
    write_tsv(&a.out_dir.join("gen.tsv"), &gen)?;
    if let Some(p) = &a.funcwords {
        sup.function_words.write(p)?;
    }
    let counts = category_counts(&gen);
    let text = format!("train {} gen {} {:?}\n", train.len(), gen.len(), counts);
    emit(
        cli,
        &text,
        &serde_json::json!({ "train": train.len(), "gen": counts, "seed": a.seed }),
    );
    Ok(())
}

/// Gold types through CKY and edge extraction, compared with LF edges.
pub struct AuditReport {
    pub total: usize,
    pub no_trajectory: usize,
    pub agree: usize,
    /// (category, sentence) of each disagreement.
    pub mismatches: Vec<(String, String)>,
}

pub fn audit_examples(sup: &Supervisor, examples: &[Example], jobs: usize) -> AuditReport {
    let recs = evaluate(sup, &Predictor::Oracle, examples, jobs);
    let no_trajectory = recs
        .iter()
        .filter(|r| r.failure_note.as_deref().is_some_and(|n| n.starts_with("no gold")))
        .count();
    let mismatches = recs
        .iter()
        .filter(|r| {
            r.failure_note.as_deref().is_some_and(|n| !n.starts_with("no gold")) || (r.initial_match && !r.edge_match)
        })
        .map(|r| (r.category.clone(), r.sentence.clone()))
        .collect::<Vec<_>>();
    AuditReport {
        total: examples.len(),
        no_trajectory,
        agree: recs.iter().filter(|r| r.edge_match).count(),
        mismatches,
    }
}

fn audit(cli: &Cli, sup: &Supervisor, a: &AuditArgs) -> Result<()> {
    let examples = load_tsv(&a.data)?;
    let rep = audit_examples(sup, &examples, cli.jobs);
    let mut by_cat: BTreeMap<&str, usize> = BTreeMap::new();
    for (c, _) in &rep.mismatches {
        *by_cat.entry(c.as_str()).or_default() += 1;
    }
    let pct = if rep.total == 0 {
        100.0
    } else {
        100.0 * rep.agree as f64 / rep.total as f64
    };
    let mut text = format!(
        "{} of {} agree ({pct:.2}%), {} without trajectory\nmismatches by category: {by_cat:?}\n",
        rep.agree, rep.total, rep.no_trajectory
    );
    for (c, s) in rep.mismatches.iter().take(a.show) {
        text.push_str(&format!("  [{c}] {s}\n"));
    }
    let json = serde_json::json!({
        "total": rep.total, "agree": rep.agree, "no_trajectory": rep.no_trajectory,
        "mismatches_by_category": by_cat, "mismatches": rep.mismatches,
    });
    emit(cli, &text, &json);
    Ok(())
}
