//! Benchmark TSV files: `sentence<TAB>LF<TAB>category`, extra columns tolerated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    Gen,
}

impl Split {
    /// Guesses the split from a file stem such as `train`, `dev` or `gen`.
    pub fn from_path(path: &Path) -> Split {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_lowercase();
        if stem.contains("gen") {
            Split::Gen
        } else if stem.contains("dev") {
            Split::Dev
        } else if stem.contains("test") {
            Split::Test
        } else {
            Split::Train
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    /// Zero-based row index within its file; also the embedding-file key.
    pub id: u64,
    pub sentence: String,
    pub lf_text: String,
    pub category: String,
    pub split: Split,
}

impl Example {
    pub fn tokens(&self) -> Vec<String> {
        crate::lexical::tokenize(&self.sentence)
    }
}

pub fn parse_tsv(text: &str, path: &Path, split: Split) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    let mut extra_columns = 0usize;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |message: &str| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_string(),
        };
        if cols.len() < 3 {
            return Err(err("expected sentence, LF and category columns"));
        }
        if cols.len() > 3 {
            extra_columns += 1;
        }
        let (sentence, lf_text, category) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        if sentence.is_empty() || lf_text.is_empty() {
            return Err(err("empty sentence or LF"));
        }
        out.push(Example {
            id: out.len() as u64,
            sentence: sentence.to_string(),
            lf_text: lf_text.to_string(),
            category: category.to_string(),
            split,
        });
    }
    if extra_columns > 0 {
        log::info!("{}: {extra_columns} rows carry extra columns (ignored)", path.display());
    }
    if out.is_empty() {
        log::warn!("{}: no examples", path.display());
    }
    for (cat, n) in category_counts(&out) {
        log::debug!("{}: {cat} = {n}", path.display());
    }
    Ok(out)
}

pub fn load_tsv(path: &Path) -> Result<Vec<Example>> {
    load_tsv_as(path, Split::from_path(path))
}

pub fn load_tsv_as(path: &Path, split: Split) -> Result<Vec<Example>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(&text, path, split)
}

pub fn render_tsv(examples: &[Example]) -> String {
    let mut s = String::new();
    for e in examples {
        let _ = writeln!(s, "{}\t{}\t{}", e.sentence, e.lf_text, e.category);
    }
    s
}

pub fn write_tsv(path: &Path, examples: &[Example]) -> Result<()> {
    std::fs::write(path, render_tsv(examples)).map_err(|e| Error::io(path, e))
}

pub fn category_counts(examples: &[Example]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for e in examples {
        *m.entry(e.category.clone()).or_insert(0) += 1;
    }
    m
}

/// Train and gen TSVs of a benchmark checkout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataFiles {
    pub train: PathBuf,
    pub gen: PathBuf,
}

/// Finds `train.tsv` and a `gen*.tsv` under `dir` (up to four levels deep),
/// preferring files that sit under a directory named like `*cogs*` since
/// those carry the LF notation this crate parses. Shallower paths win ties.
pub fn locate_data(dir: &Path) -> Option<DataFiles> {
    let mut found = Vec::new();
    collect_tsv(dir, 0, &mut found);
    let rank = |p: &PathBuf| {
        let under_cogs = p
            .strip_prefix(dir)
            .map(|r| r.to_string_lossy().to_lowercase().contains("cogs"))
            .unwrap_or(false);
        (!under_cogs, p.components().count(), p.clone())
    };
    let name = |p: &PathBuf| p.file_name().and_then(|s| s.to_str()).unwrap_or("").to_lowercase();
    let best = |pred: &dyn Fn(&str) -> bool| found.iter().filter(|p| pred(&name(p))).min_by_key(|p| rank(p)).cloned();
    Some(DataFiles {
        train: best(&|n| n == "train.tsv")?,
        gen: best(&|n| n.starts_with("gen") && n.ends_with(".tsv"))?,
    })
}

fn collect_tsv(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) {
    let Ok(entries) = std::fs::read_dir(dir) else { return };
    for e in entries.flatten() {
        let p = e.path();
        if p.is_dir() && depth < 4 {
            collect_tsv(&p, depth + 1, out);
        } else if p.extension().is_some_and(|x| x == "tsv") {
            out.push(p);
        }
    }
}
