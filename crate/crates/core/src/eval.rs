//! Exact-match metrics and per-category score tables.
//!
//! `type_match` requires both the initial and the final type sequence to
//! equal the gold trajectory. The initial-only and final-only flags are kept
//! on every record so either reading can be tabulated.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccg::{Supervisor, Trajectory, TypeId};
use crate::data::embeddings::EmbeddingStore;
use crate::data::tsv::Example;
use crate::error::Result;
use crate::lf::normalize_for_reformatted_match;
use crate::neural::model::NcaModel;
use crate::neural::nca::{predict, BatchInput};
use crate::training::with_jobs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub example_id: u64,
    pub category: String,
    pub sentence: String,
    pub predicted_initial_types: Vec<String>,
    pub predicted_final_types: Vec<String>,
    pub initial_match: bool,
    pub final_match: bool,
    pub type_match: bool,
    pub edge_match: bool,
    pub cky_ok: bool,
    pub failure_note: Option<String>,
}

/// Equal length and equal at every position; a length mismatch is a miss.
pub fn type_exact_match(predicted: &[TypeId], gold: &[TypeId]) -> bool {
    predicted == gold
}

/// `(cky_ok, edge_match)` for a predicted initial sequence.
pub fn edge_exact_match(sup: &Supervisor, predicted: &[TypeId], gold: &Trajectory) -> (bool, bool) {
    if predicted.len() != gold.len() {
        return (false, false);
    }
    match sup.parse(predicted) {
        Err(_) => (false, false),
        Ok(d) => match crate::ccg::extract_edges(&d, &sup.table, &gold.tokens, &gold.alignment) {
            Ok(edges) => (true, normalize_for_reformatted_match(&edges, &gold.gold_edges)),
            Err(_) => (true, false),
        },
    }
}

/// Source of predicted type sequences.
pub enum Predictor<'a> {
    /// Gold types: evaluates the symbolic pipeline alone.
    Oracle,
    Model {
        model: &'a NcaModel,
        store: &'a EmbeddingStore,
        t: usize,
    },
}

impl Predictor<'_> {
    fn predict(&self, sup: &Supervisor, ex: &Example, gold: Option<&Trajectory>) -> Result<(Vec<TypeId>, Vec<TypeId>)> {
        match self {
            Predictor::Oracle => {
                let g = gold.expect("oracle prediction needs a gold trajectory");
                Ok((g.initial_types.clone(), g.final_types.clone()))
            }
            Predictor::Model { model, store, t } => {
                let stripped = sup.function_words.strip(&ex.tokens());
                let input = store.get_embeddings(ex.id, &stripped.content, &stripped.alignment)?;
                let batch = BatchInput::from_inputs(&[&input])?;
                Ok(predict(model, &batch, *t))
            }
        }
    }
}

pub fn evaluate_example(sup: &Supervisor, predictor: &Predictor, ex: &Example) -> EvalRecord {
    let mut rec = EvalRecord {
        example_id: ex.id,
        category: ex.category.clone(),
        sentence: ex.sentence.clone(),
        predicted_initial_types: Vec::new(),
        predicted_final_types: Vec::new(),
        initial_match: false,
        final_match: false,
        type_match: false,
        edge_match: false,
        cky_ok: false,
        failure_note: None,
    };
    let gold = match sup.build_trajectory(&ex.sentence, &ex.lf_text) {
        Ok(t) => t,
        Err(e) => {
            rec.failure_note = Some(format!("no gold trajectory: {e}"));
            return rec;
        }
    };
    let (init, fin) = match predictor.predict(sup, ex, Some(&gold)) {
        Ok(p) => p,
        Err(e) => {
            rec.failure_note = Some(format!("prediction failed: {e}"));
            return rec;
        }
    };
    rec.predicted_initial_types = sup.table.names(&init);
    rec.predicted_final_types = sup.table.names(&fin);
    rec.initial_match = type_exact_match(&init, &gold.initial_types);
    rec.final_match = type_exact_match(&fin, &gold.final_types);
    rec.type_match = rec.initial_match && rec.final_match;
    let (cky_ok, edge_match) = edge_exact_match(sup, &init, &gold);
    rec.cky_ok = cky_ok;
    rec.edge_match = edge_match;
    if init.len() != gold.len() {
        rec.failure_note = Some("length mismatch".into());
    } else if rec.initial_match && !edge_match {
        rec.failure_note = Some("edges differ under gold types".into());
    } else if !cky_ok {
        rec.failure_note = Some("predicted types do not parse".into());
    }
    rec
}

/// Records in input order.
pub fn evaluate(sup: &Supervisor, predictor: &Predictor, examples: &[Example], jobs: usize) -> Vec<EvalRecord> {
    with_jobs(jobs, || {
        examples
            .par_iter()
            .map(|e| evaluate_example(sup, predictor, e))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Type,
    Initial,
    Final,
    Edge,
}

impl Metric {
    pub fn of(self, r: &EvalRecord) -> bool {
        match self {
            Metric::Type => r.type_match,
            Metric::Initial => r.initial_match,
            Metric::Final => r.final_match,
            Metric::Edge => r.edge_match,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    /// Examples per seed (from the first seed).
    pub n: usize,
    /// Percent per seed.
    pub per_seed: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across seeds; 0 for one seed.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub metric: Metric,
    pub seeds: Vec<u64>,
    pub rows: Vec<CategoryRow>,
    pub overall: CategoryRow,
    /// Expected categories with no records.
    pub missing: Vec<String>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn row(category: String, n: usize, per_seed: Vec<f64>) -> CategoryRow {
    let (mean, std) = mean_std(&per_seed);
    CategoryRow {
        category,
        n,
        per_seed,
        mean,
        std,
    }
}

/// Mean and std across seeds per category; the overall row is the
/// example-weighted mean within each seed.
pub fn category_report(runs: &[(u64, Vec<EvalRecord>)], metric: Metric, expected: &[&str]) -> CategoryTable {
    assert!(!runs.is_empty(), "category_report needs at least one seed");
    let mut per_cat: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for (s, (_, recs)) in runs.iter().enumerate() {
        for r in recs {
            let v = per_cat
                .entry(r.category.clone())
                .or_insert_with(|| vec![(0, 0); runs.len()]);
            v[s].0 += 1;
            v[s].1 += metric.of(r) as usize;
        }
    }
    let pct = |(n, k): (usize, usize)| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    let rows: Vec<CategoryRow> = per_cat
        .iter()
        .map(|(c, v)| row(c.clone(), v[0].0, v.iter().map(|&x| pct(x)).collect()))
        .collect();
    let overall_seed: Vec<f64> = (0..runs.len())
        .map(|s| {
            let (n, k) = per_cat.values().fold((0, 0), |a, v| (a.0 + v[s].0, a.1 + v[s].1));
            pct((n, k))
        })
        .collect();
    let total = runs[0].1.len();
    let missing = expected
        .iter()
        .filter(|c| !per_cat.contains_key(**c))
        .map(|c| c.to_string())
        .collect();
    CategoryTable {
        metric,
        seeds: runs.iter().map(|(s, _)| *s).collect(),
        rows,
        overall: row("Overall".into(), total, overall_seed),
        missing,
    }
}

impl CategoryTable {
    pub fn row(&self, category: &str) -> Option<&CategoryRow> {
        self.rows.iter().find(|r| r.category == category)
    }

    pub fn render_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.category.len()).max().unwrap_or(0).max(8);
        let mut s = String::new();
        let _ = writeln!(s, "{:<w$}  {:>6}  {:>7}  {:>6}", "category", "n", "mean", "std");
        for r in self.rows.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(s, "{:<w$}  {:>6}  {:>7.1}  {:>6.1}", r.category, r.n, r.mean, r.std);
        }
        for m in &self.missing {
            let _ = writeln!(s, "{m:<w$}  missing");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}
