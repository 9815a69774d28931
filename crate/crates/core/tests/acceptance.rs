//! Acceptance runner: one PASS / FAIL / SKIP line per criterion, exit code 1
//! on any FAIL. Benchmark criteria read `SLOG_DATA_DIR`; A2 additionally
//! needs trained checkpoints in `SLOG_CHECKPOINTS` (a path with `{seed}`).
//!
//! cargo test --release --test acceptance [-- A1 A3]

mod common;
#[path = "acceptance/reference.rs"]
mod reference;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ccg_nca::analysis::{
    classify_mechanism, classify_subpattern, decompose_category, ngram_coverage, Attachment, Mechanism, TrainCoverage,
};
use ccg_nca::ccg::{Supervisor, Trajectory};
use ccg_nca::cli::{audit_examples, meta_path, CheckpointMeta};
use ccg_nca::data::embeddings::{EmbeddingFile, EmbeddingStore};
use ccg_nca::data::synth::GEN_CATEGORIES;
use ccg_nca::data::{load_tsv, locate_data, DataFiles, Example};
use ccg_nca::desk::{corpus, run_seed, DeskConfig};
use ccg_nca::error::Error;
use ccg_nca::eval::{category_report, evaluate, EvalRecord, Metric, Predictor};
use ccg_nca::lf::parse_lf;
use ccg_nca::neural::checkpoint::Checkpoint;
use ccg_nca::neural::model::TENSOR_NAMES;
use ccg_nca::training::trajectorize;
use reference::{norm, CategoryRef};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

struct Benchmark {
    files: DataFiles,
    sup: Supervisor,
    train: Vec<Example>,
    gen: Vec<Example>,
}

impl Benchmark {
    fn load() -> Option<std::result::Result<Benchmark, String>> {
        let dir = PathBuf::from(std::env::var_os("SLOG_DATA_DIR")?);
        let Some(files) = locate_data(&dir) else {
            return Some(Err(format!("no train.tsv and gen*.tsv under {}", dir.display())));
        };
        let load = |p: &Path| load_tsv(p).map_err(|e| e.to_string());
        Some((|| {
            Ok(Benchmark {
                sup: Supervisor::default(),
                train: load(&files.train)?,
                gen: load(&files.gen)?,
                files,
            })
        })())
    }

    fn categories<'a>(&'a self, r: &CategoryRef) -> Vec<&'a Example> {
        self.gen.iter().filter(|e| r.matches(&e.category)).collect()
    }
}

fn by_name(name: &str) -> &'static CategoryRef {
    reference::CATEGORIES
        .iter()
        .find(|c| c.name == name)
        .expect("reference row")
}

fn a0(b: &Benchmark) -> Outcome {
    let start = Instant::now();
    let rep = audit_examples(&b.sup, &b.gen, 0);
    let secs = start.elapsed().as_secs_f64();
    let target = by_name(reference::AUDIT_MISMATCH_CATEGORY);
    let outside: BTreeSet<&str> = rep
        .mismatches
        .iter()
        .filter(|(c, _)| !target.matches(c))
        .map(|(c, _)| c.as_str())
        .collect();
    let pct = 100.0 * rep.agree as f64 / rep.total.max(1) as f64;
    let detail = format!(
        "{}/{} agree ({pct:.3}%), {} mismatches (reported {}), {} without trajectory, outside {}: {:?}, {secs:.1}s{}",
        rep.agree,
        rep.total,
        rep.mismatches.len(),
        reference::AUDIT_MISMATCHES,
        rep.no_trajectory,
        target.name,
        outside,
        size_delta("gen", rep.total, reference::GEN_SIZE)
    );
    verdict(
        pct >= 99.9 && outside.is_empty() && rep.mismatches.len() <= reference::AUDIT_MISMATCH_LIMIT && secs < 120.0,
        detail,
    )
}

fn size_delta(what: &str, got: usize, expected: usize) -> String {
    if got == expected {
        String::new()
    } else {
        format!(" [{what} has {got} rows, reported {expected}]")
    }
}

fn a1() -> Outcome {
    let start = Instant::now();
    let cfg = DeskConfig::default();
    let sup = Supervisor::default();
    let corpus = match corpus(&cfg, &sup, 0) {
        Ok(c) => c,
        Err(e) => return Fail(format!("corpus: {e}")),
    };
    let mut runs = Vec::new();
    let mut split_rows = Vec::new();
    for seed in [0, 1, 2] {
        let run = match run_seed(&cfg, &sup, &corpus, seed, 0) {
            Ok(r) => r,
            Err(e) => return Fail(format!("seed {seed}: {e}")),
        };
        for cat in GEN_CATEGORIES {
            let idx: Vec<usize> = (0..run.records.len())
                .filter(|&i| run.records[i].category == cat)
                .collect();
            let recs: Vec<&EvalRecord> = idx.iter().map(|&i| &run.records[i]).collect();
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
            let d = decompose_category(cat, &recs, &keys, |r| r.type_match);
            for r in d.rows.iter().filter(|r| r.correct != 0 && r.correct != r.count) {
                split_rows.push(format!("seed {seed} {cat} {} {}/{}", r.key, r.correct, r.count));
            }
        }
        runs.push((seed, run.records));
    }
    let secs = start.elapsed().as_secs_f64();
    let table = category_report(&runs, Metric::Type, &GEN_CATEGORIES);
    let per_seed = |cat: &str| table.row(cat).map(|r| r.per_seed.clone()).unwrap_or_default();
    let pp_rec = per_seed("pp_recursion");
    let pp_subj = per_seed("pp_modif_subj");
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join("/");
    let detail = format!(
        "type exact pp_recursion {} pp_modif_subj {} (q_subj {} q_obj {}), non-dichotomous rows {:?}, {secs:.0}s",
        fmt(&pp_rec),
        fmt(&pp_subj),
        fmt(&per_seed("q_subj")),
        fmt(&per_seed("q_obj")),
        split_rows
    );
    verdict(
        pp_rec.len() == 3
            && pp_rec.iter().all(|&v| v == 100.0)
            && pp_subj.len() == 3
            && pp_subj.iter().all(|&v| v == 0.0)
            && split_rows.is_empty()
            && secs < 900.0,
        detail,
    )
}

fn a2(b: &Benchmark) -> Outcome {
    let Some(pattern) = std::env::var_os("SLOG_CHECKPOINTS") else {
        return Skip(
            "benchmark data found but SLOG_CHECKPOINTS is not set; train with `ccg-nca train --seeds 0,...,9` first"
                .into(),
        );
    };
    let pattern = pattern.to_string_lossy().into_owned();
    let seeds: Vec<u64> = std::env::var("SLOG_SEEDS")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_else(|| (0..10).collect());
    let mut runs = Vec::new();
    for &seed in &seeds {
        let path = PathBuf::from(pattern.replace("{seed}", &seed.to_string()));
        let ck = match Checkpoint::load(&path) {
            Ok(c) => c,
            Err(e) => return Fail(format!("seed {seed}: {e}")),
        };
        let meta: Option<CheckpointMeta> = std::fs::read_to_string(meta_path(&path))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        let t = meta.as_ref().map(|m| m.train.t_max).unwrap_or(60);
        let store = match meta.as_ref().map(|m| m.embeddings.as_str()) {
            Some(spec) if spec.starts_with("file:") => {
                let Some(gen_file) = std::env::var_os("SLOG_GEN_EMBEDDINGS") else {
                    return Skip(
                        "checkpoints use exported embeddings; set SLOG_GEN_EMBEDDINGS to the gen-set export".into(),
                    );
                };
                match EmbeddingFile::open(Path::new(&gen_file)) {
                    Ok(f) => EmbeddingStore::File(f),
                    Err(e) => return Fail(e.to_string()),
                }
            }
            _ => EmbeddingStore::Table {
                vocab: ck.vocab.clone(),
                dim: ck.model.cfg.embed_dim,
            },
        };
        let predictor = Predictor::Model {
            model: &ck.model,
            store: &store,
            t,
        };
        runs.push((seed, evaluate(&b.sup, &predictor, &b.gen, 0)));
    }

    let mut problems = Vec::new();
    let labels: BTreeSet<&str> = b.gen.iter().map(|e| e.category.as_str()).collect();
    let table = category_report(&runs, Metric::Type, &labels.iter().copied().collect::<Vec<_>>());
    if (table.overall.mean - reference::OVERALL_MEAN).abs() > reference::OVERALL_TOLERANCE {
        problems.push(format!(
            "overall {:.1} vs {}",
            table.overall.mean,
            reference::OVERALL_MEAN
        ));
    }
    for r in &reference::CATEGORIES {
        let Some(label) = labels.iter().find(|l| r.matches(l)) else {
            problems.push(format!("{}: no matching category", r.name));
            continue;
        };
        let row = table.row(label).expect("category row");
        let perfect = row.per_seed.iter().filter(|&&v| v == 100.0).count();
        // Partial categories are checked through their decompositions below.
        let ok = if r.mean == 0.0 {
            row.per_seed.iter().all(|&v| v == 0.0)
        } else if r.mean >= 99.0 && r.std == 0.0 {
            row.mean >= 99.0 && perfect * 10 >= 9 * row.per_seed.len()
        } else if r.mean >= 99.0 {
            row.mean >= 99.0
        } else {
            true
        };
        if !ok {
            problems.push(format!(
                "{}: {:.1}±{:.1} vs {}±{}",
                r.name, row.mean, row.std, r.mean, r.std
            ));
        }
    }

    let qm = b.categories(by_name("Q_modified_NPs"));
    let rc = b.categories(by_name("RC_modif_subj"));
    let (qm_counts, qm_split) = q_modified_rows(b, &qm, &runs);
    for (i, (role, voice, has_rc, n, acc)) in reference::Q_MODIFIED_NPS.iter().enumerate() {
        if qm_counts[i] != *n || qm_split[i].iter().any(|&a| a != *acc) {
            problems.push(format!(
                "Q_modified_NPs {role}/{}/rc={has_rc}: {} rows accuracies {:?} vs {n} at {acc}",
                voice.unwrap_or("any"),
                qm_counts[i],
                qm_split[i]
            ));
        }
    }
    let (embedded, main) = rc_attachment_counts(b, &rc);
    if (embedded, main) != (reference::RC_MODIF_SUBJ_EMBEDDED, reference::RC_MODIF_SUBJ_MAIN) {
        problems.push(format!(
            "RC_modif_subj attachment {embedded}/{main} vs {}/{}",
            reference::RC_MODIF_SUBJ_EMBEDDED,
            reference::RC_MODIF_SUBJ_MAIN
        ));
    }
    verdict(
        problems.is_empty(),
        format!(
            "{} seeds, overall {:.1}±{:.1}; deltas: {:?}{}",
            seeds.len(),
            table.overall.mean,
            table.overall.std,
            problems,
            size_delta("gen", b.gen.len(), reference::GEN_SIZE)
        ),
    )
}

fn trajectory_of(b: &Benchmark, e: &Example) -> Option<Trajectory> {
    b.sup.build_trajectory(&e.sentence, &e.lf_text).ok()
}

/// Per reference row: matching example count and per-seed accuracy over them.
fn q_modified_rows(
    b: &Benchmark,
    examples: &[&Example],
    runs: &[(u64, Vec<EvalRecord>)],
) -> (Vec<usize>, Vec<Vec<f64>>) {
    let index: BTreeMap<u64, usize> = b.gen.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
    let mut counts = vec![0; reference::Q_MODIFIED_NPS.len()];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); reference::Q_MODIFIED_NPS.len()];
    for e in examples {
        let Some(t) = trajectory_of(b, e) else { continue };
        let lf = parse_lf(&e.lf_text).ok();
        let l = classify_subpattern(lf.as_ref(), &t, &b.sup.table);
        let role = serde_json::to_value(l.gap_role).unwrap();
        let voice = serde_json::to_value(l.gap_voice).unwrap();
        for (i, (r, v, rc, _, _)) in reference::Q_MODIFIED_NPS.iter().enumerate() {
            if role == *r && v.is_none_or(|v| voice == v) && l.has_rc == *rc {
                counts[i] += 1;
                members[i].push(index[&e.id]);
            }
        }
    }
    let accs = members
        .iter()
        .map(|m| {
            runs.iter()
                .map(|(_, recs)| m.iter().filter(|&&i| recs[i].type_match).count() as f64 / m.len().max(1) as f64)
                .collect()
        })
        .collect();
    (counts, accs)
}

fn rc_attachment_counts(b: &Benchmark, examples: &[&Example]) -> (usize, usize) {
    let (mut embedded, mut main) = (0, 0);
    for e in examples {
        let Some(t) = trajectory_of(b, e) else { continue };
        let lf = parse_lf(&e.lf_text).ok();
        match classify_subpattern(lf.as_ref(), &t, &b.sup.table).rc_attachment {
            Attachment::MainSubject => main += 1,
            Attachment::Embedded => embedded += 1,
            _ => {}
        }
    }
    (embedded, main)
}

fn a3() -> Outcome {
    let all: Vec<&str> = TENSOR_NAMES.to_vec();
    let no_emb: Vec<&str> = all.iter().copied().filter(|n| *n != "emb").collect();
    let cases = [
        (common::table_case(1), 1, &all),
        (common::table_case(2), 4, &all),
        (common::vector_case(3), 1, &no_emb),
        (common::vector_case(4), 3, &no_emb),
    ];
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    let mut checked = 0;
    for (case, t, names) in &cases {
        for c in common::gradient_checks(case, *t, names) {
            checked += 1;
            worst = worst.max(c.relative_error);
            if !c.ok() {
                bad.push(format!(
                    "T={t} {} err {:e} nonzero {}",
                    c.name, c.relative_error, c.nonzero
                ));
            }
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "{checked} tensor checks, worst relative error {worst:.2e} (step {:e}) {bad:?}",
            common::STEP
        ),
    )
}

fn a4(bench: Option<&Benchmark>) -> Outcome {
    let mut problems = Vec::new();
    for seed in 0..4u64 {
        let m = ccg_nca::neural::model::NcaModel::new(ccg_nca::neural::model::NcaConfig::test_scale(25, 6, 9), seed)
            .unwrap();
        for t in [1, 3, 5] {
            if let Some(v) = common::cone_violation(&m, 13, t, seed) {
                problems.push(v);
            }
        }
        let (_, input, _, _) = common::table_case(seed);
        if !common::inference_is_deterministic(&m, &input) {
            problems.push(format!("seed {seed}: inference depends on noise"));
        }
    }
    let sup = Supervisor::default();
    let (train, _) = common::small_corpus(120, 1, 3);
    let a = common::train_small(&sup, &train, 7, 1);
    let b = common::train_small(&sup, &train, 7, 0);
    if a.to_bytes() != b.to_bytes() {
        problems.push("seed 7 trained twice gives different checkpoints".into());
    }
    let (synth_train, _) = common::small_corpus(3000, 1, 0);
    let mut audited = vec![("synthetic", &synth_train)];
    if let Some(bench) = bench {
        audited.push(("benchmark", &bench.train));
    }
    let mut counts = Vec::new();
    for (name, set) in audited {
        let ambiguous = trajectorize(&sup, set, 0)
            .iter()
            .filter(|t| matches!(t, Err(Error::AmbiguousParse { .. })))
            .count();
        counts.push(format!("{name} train {ambiguous}/{}", set.len()));
        if ambiguous > 0 {
            problems.push(format!("{ambiguous} ambiguous parses in {name} train"));
        }
    }
    verdict(
        problems.is_empty(),
        format!(
            "cone t=1,3,5 over 4 models; inference determinism; seed 7 checkpoint {}; ambiguous parses {} {problems:?}",
            &a.sha256_hex()[..12],
            counts.join(", ")
        ),
    )
}

fn a5(b: &Benchmark) -> Outcome {
    let start = Instant::now();
    let trajs = trajectorize(&b.sup, &b.train, 0);
    let missing = trajs.iter().filter(|t| t.is_err()).count();
    let ok: Vec<Trajectory> = trajs.into_iter().filter_map(|t| t.ok()).collect();
    let cov = TrainCoverage::build(&ok, &b.sup.table);
    let mut problems = Vec::new();
    if missing > 0 {
        problems.push(format!("{missing} train examples without trajectory"));
    }

    let long_mv = b.categories(by_name("Q_long_mv"));
    let mut novel: BTreeSet<Vec<String>> = BTreeSet::new();
    for e in &long_mv {
        if let Some(t) = trajectory_of(b, e) {
            for g in ngram_coverage(&cov, &t.initial_types, 3) {
                novel.insert(b.sup.table.names(&g).iter().map(|s| s.to_string()).collect());
            }
        }
    }
    let expected: Vec<String> = reference::Q_LONG_MV_TRIGRAM.iter().map(|s| s.to_string()).collect();
    if long_mv.is_empty() || novel.len() != 1 || !novel.contains(&expected) {
        problems.push(format!("Q_long_mv novel trigrams {novel:?}"));
    }

    let mut counts: BTreeMap<(String, &str), usize> = BTreeMap::new();
    for e in &b.gen {
        let Some(t) = trajectory_of(b, e) else { continue };
        let lf = parse_lf(&e.lf_text).ok();
        let m = classify_mechanism(lf.as_ref(), &t, &cov, &b.sup.table);
        for (mech, tag) in [
            (Mechanism::ForwardArgExtraction, "A_forward_arg_extraction"),
            (Mechanism::SubjectSideModifier, "B_subject_side_modifier"),
        ] {
            if m.has(mech) {
                *counts.entry((norm(&e.category), tag)).or_default() += 1;
            }
        }
    }
    for (cat, tag, n) in reference::MECHANISMS {
        let got = counts.remove(&(norm(cat), tag)).unwrap_or(0);
        let got = got
            + by_name(cat)
                .aliases
                .iter()
                .map(|a| counts.remove(&(a.to_string(), tag)).unwrap_or(0))
                .sum::<usize>();
        if got != n {
            problems.push(format!("{cat} {tag}: {got} vs {n}"));
        }
    }
    for ((cat, tag), n) in &counts {
        problems.push(format!("{cat} {tag}: {n} unexpected"));
    }
    verdict(
        problems.is_empty(),
        format!(
            "train coverage {}/{}, Q_long_mv novel trigrams {:?}, {:.0}s; deltas {problems:?}{}",
            ok.len(),
            b.train.len(),
            novel,
            start.elapsed().as_secs_f64(),
            size_delta("train", b.train.len(), reference::TRAIN_SIZE)
        ),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filters.is_empty() || filters.iter().any(|f| id.contains(f.as_str()));
    if std::env::args().any(|a| a == "--list") {
        for id in ["A0", "A1", "A2", "A3", "A4", "A5"] {
            println!("{id}: test");
        }
        return;
    }

    let bench = Benchmark::load();
    let no_data = || match &bench {
        None => Skip("SLOG_DATA_DIR is not set".into()),
        Some(Err(e)) => Skip(e.clone()),
        Some(Ok(_)) => unreachable!(),
    };
    let data = bench.as_ref().and_then(|b| b.as_ref().ok());
    if let Some(b) = data {
        println!("benchmark: {} and {}", b.files.train.display(), b.files.gen.display());
    }

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, &str, Check)> = vec![
        (
            "A0",
            "symbolic fidelity",
            Box::new(|| data.map(a0).unwrap_or_else(no_data)),
        ),
        ("A1", "desk generalization", Box::new(a1)),
        (
            "A2",
            "full reproduction",
            Box::new(|| data.map(a2).unwrap_or_else(no_data)),
        ),
        ("A3", "gradient correctness", Box::new(a3)),
        ("A4", "locality and determinism", Box::new(|| a4(data))),
        (
            "A5",
            "coverage and trigrams",
            Box::new(|| data.map(a5).unwrap_or_else(no_data)),
        ),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (id, title, check) in criteria {
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let (tag, detail) = match check() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{id} {tag} {title}: {detail} [{}]", secs(start.elapsed()));
    }
    println!("acceptance finished in {}", secs(total.elapsed()));
    if failed > 0 {
        std::process::exit(1);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
