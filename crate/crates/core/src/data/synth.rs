//! Desk-scale corpus with the benchmark's train/generalization split shape:
//! covered structures in train, one directed structure withheld for gen.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::tsv::{Example, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verb {
    pub past: String,
    pub base: String,
    pub lemma: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub train_size: usize,
    pub gen_per_category: usize,
    /// Inclusive PP-chain depth range on train objects.
    pub train_pp_depth: (usize, usize),
    /// Inclusive PP-chain depth range for the gen recursion category.
    pub gen_pp_depth: (usize, usize),
    /// Inclusive PP-chain depth range on gen subjects.
    pub subject_pp_depth: (usize, usize),
    pub object_pp: bool,
    pub subject_pp_gen: bool,
    pub wh_split: bool,
    pub ccomp: bool,
    pub xcomp: bool,
    /// Allows PPs on complement-clause subjects in train.
    pub ccomp_subject_pp: bool,
    pub nouns: Vec<String>,
    pub names: Vec<String>,
    pub prepositions: Vec<String>,
    pub transitive: Vec<Verb>,
    pub intransitive: Vec<Verb>,
    pub ccomp_verbs: Vec<Verb>,
    pub xcomp_verbs: Vec<Verb>,
}

fn verbs(list: &[(&str, &str, &str)]) -> Vec<Verb> {
    list.iter()
        .map(|(p, b, l)| Verb {
            past: p.to_string(),
            base: b.to_string(),
            lemma: l.to_string(),
        })
        .collect()
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_size: 3000,
            gen_per_category: 300,
            train_pp_depth: (0, 2),
            gen_pp_depth: (3, 6),
            subject_pp_depth: (1, 2),
            object_pp: true,
            subject_pp_gen: true,
            wh_split: true,
            ccomp: true,
            xcomp: true,
            ccomp_subject_pp: false,
            nouns: words(&[
                "cat", "dog", "girl", "boy", "cake", "box", "table", "bird", "chair", "house", "car", "book",
                "teacher", "baby",
            ]),
            names: words(&["Emma", "Liam", "Noah", "Ava", "Mia", "Lucas"]),
            prepositions: words(&["beside", "in", "on"]),
            transitive: verbs(&[
                ("saw", "see", "see"),
                ("liked", "like", "like"),
                ("found", "find", "find"),
                ("helped", "help", "help"),
                ("called", "call", "call"),
                ("admired", "admire", "admire"),
            ]),
            intransitive: verbs(&[
                ("slept", "sleep", "sleep"),
                ("smiled", "smile", "smile"),
                ("laughed", "laugh", "laugh"),
                ("danced", "dance", "dance"),
            ]),
            ccomp_verbs: verbs(&[
                ("said", "say", "say"),
                ("hoped", "hope", "hope"),
                ("believed", "believe", "believe"),
                ("thought", "think", "think"),
            ]),
            xcomp_verbs: verbs(&[
                ("wanted", "want", "want"),
                ("tried", "try", "try"),
                ("planned", "plan", "plan"),
            ]),
        }
    }
}

impl SynthConfig {
    pub fn load(path: &Path) -> Result<SynthConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SynthConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.gen_pp_depth.0 <= self.train_pp_depth.1 {
            return bad("gen PP depth must exceed every train depth");
        }
        if self.train_pp_depth.0 > self.train_pp_depth.1
            || self.gen_pp_depth.0 > self.gen_pp_depth.1
            || self.subject_pp_depth.0 > self.subject_pp_depth.1
        {
            return bad("depth ranges must be ordered");
        }
        if self.subject_pp_depth.0 == 0 {
            return bad("subject PP depth must be at least 1");
        }
        if self.nouns.is_empty() || self.names.is_empty() || self.prepositions.is_empty() {
            return bad("noun, name and preposition lists must be non-empty");
        }
        if self.transitive.is_empty() || self.intransitive.is_empty() {
            return bad("verb lists must be non-empty");
        }
        if self.ccomp && self.ccomp_verbs.is_empty() || self.xcomp && self.xcomp_verbs.is_empty() {
            return bad("enabled phenomena need verbs");
        }
        Ok(())
    }
}

/// Sentence and LF under construction; variables are token positions.
#[derive(Default)]
struct Builder {
    tokens: Vec<String>,
    definites: Vec<String>,
    body: Vec<String>,
}

impl Builder {
    fn push(&mut self, w: &str) -> usize {
        self.tokens.push(w.to_string());
        self.tokens.len() - 1
    }

    fn var(i: usize) -> String {
        format!("x _ {i}")
    }

    fn role(&mut self, lemma: &str, role: &str, head: usize, dep: &str) {
        self.body
            .push(format!("{lemma} . {role} ( {} , {dep} )", Self::var(head)));
    }

    fn finish(mut self, punct: &str, category: &str) -> (String, String, String) {
        self.push(punct);
        let mut lf = String::new();
        for d in &self.definites {
            lf.push_str(d);
            lf.push_str(" ; ");
        }
        lf.push_str(&self.body.join(" AND "));
        let mut sentence = self.tokens.join(" ");
        if let Some(first) = sentence.get(..1) {
            sentence = first.to_uppercase() + &sentence[1..];
        }
        (sentence, lf, category.to_string())
    }
}

struct Gen<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn pick<'b, T>(&mut self, xs: &'b [T]) -> &'b T {
        xs.choose(&mut self.rng).expect("non-empty list")
    }

    fn depth(&mut self, range: (usize, usize)) -> usize {
        self.rng.gen_range(range.0..=range.1)
    }

    /// Pushes a common noun phrase and returns its head position.
    fn common_np(&mut self, b: &mut Builder) -> usize {
        let definite = self.rng.gen_bool(0.5);
        b.push(if definite { "the" } else { "a" });
        let noun = self.pick(&self.cfg.nouns).clone();
        let h = b.push(&noun);
        let term = format!("{noun} ( {} )", Builder::var(h));
        if definite {
            b.definites.push(format!("* {term}"));
        } else {
            b.body.push(term);
        }
        h
    }

    /// Pushes an NP with a low-attaching PP chain of `pp` links; returns the LF argument.
    fn np(&mut self, b: &mut Builder, pp: usize, allow_name: bool) -> String {
        if pp == 0 && allow_name && self.rng.gen_bool(0.4) {
            // Names align by first occurrence, so each appears at most once.
            let name = self.pick(&self.cfg.names).clone();
            if !b.tokens.contains(&name) {
                b.push(&name);
                return name;
            }
        }
        let head = self.common_np(b);
        let mut cur = head;
        for _ in 0..pp {
            let prep = self.pick(&self.cfg.prepositions).clone();
            b.push(&prep);
            let obj = self.common_np(b);
            let noun = b.tokens[cur].clone();
            b.body.push(format!(
                "{noun} . nmod . {prep} ( {} , {} )",
                Builder::var(cur),
                Builder::var(obj)
            ));
            cur = obj;
        }
        Builder::var(head)
    }

    fn clause_tv(&mut self, b: &mut Builder, subj_pp: usize, obj_pp: usize) -> usize {
        let subj = self.np(b, subj_pp, true);
        let v = self.pick(&self.cfg.transitive).clone();
        let vi = b.push(&v.past);
        b.role(&v.lemma, "agent", vi, &subj);
        let obj = self.np(b, obj_pp, true);
        b.role(&v.lemma, "theme", vi, &obj);
        vi
    }

    fn clause_iv(&mut self, b: &mut Builder, subj_pp: usize) -> usize {
        let subj = self.np(b, subj_pp, true);
        let v = self.pick(&self.cfg.intransitive).clone();
        let vi = b.push(&v.past);
        b.role(&v.lemma, "agent", vi, &subj);
        vi
    }

    fn train_pp(&mut self) -> usize {
        if self.cfg.object_pp {
            self.depth(self.cfg.train_pp_depth)
        } else {
            0
        }
    }

    fn decl_tv(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        let d = self.train_pp();
        self.clause_tv(&mut b, 0, d);
        b.finish(".", "decl_tv")
    }

    fn decl_iv(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        self.clause_iv(&mut b, 0);
        b.finish(".", "decl_iv")
    }

    fn ccomp(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        let subj = self.np(&mut b, 0, true);
        let v = self.pick(&self.cfg.ccomp_verbs).clone();
        let vi = b.push(&v.past);
        b.role(&v.lemma, "agent", vi, &subj);
        b.push("that");
        let inner_subj_pp = if self.cfg.ccomp_subject_pp && self.rng.gen_bool(0.3) {
            self.depth(self.cfg.subject_pp_depth)
        } else {
            0
        };
        let inner = if self.rng.gen_bool(0.6) {
            let d = self.train_pp();
            self.clause_tv(&mut b, inner_subj_pp, d)
        } else {
            self.clause_iv(&mut b, inner_subj_pp)
        };
        b.role(&v.lemma, "ccomp", vi, &Builder::var(inner));
        b.finish(".", "ccomp")
    }

    fn xcomp(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        let subj = self.np(&mut b, 0, true);
        let v = self.pick(&self.cfg.xcomp_verbs).clone();
        let vi = b.push(&v.past);
        b.role(&v.lemma, "agent", vi, &subj);
        b.push("to");
        let inf = self.pick(&self.cfg.transitive).clone();
        let ii = b.push(&inf.base);
        b.role(&v.lemma, "xcomp", vi, &Builder::var(ii));
        b.role(&inf.lemma, "agent", ii, &subj);
        let d = self.train_pp();
        let obj = self.np(&mut b, d, true);
        b.role(&inf.lemma, "theme", ii, &obj);
        b.finish(".", "xcomp")
    }

    fn q_subj(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        b.push("who");
        let v = self.pick(&self.cfg.transitive).clone();
        let vi = b.push(&v.past);
        b.role(&v.lemma, "agent", vi, "?");
        let d = self.train_pp();
        let obj = self.np(&mut b, d, true);
        b.role(&v.lemma, "theme", vi, &obj);
        b.finish("?", "q_subj")
    }

    fn q_obj(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        b.push(if self.rng.gen_bool(0.5) { "who" } else { "what" });
        b.push("did");
        let subj = self.np(&mut b, 0, true);
        let v = self.pick(&self.cfg.transitive).clone();
        let vi = b.push(&v.base);
        b.role(&v.lemma, "agent", vi, &subj);
        b.role(&v.lemma, "theme", vi, "?");
        b.finish("?", "q_obj")
    }

    fn pp_recursion(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        let d = self.depth(self.cfg.gen_pp_depth);
        self.clause_tv(&mut b, 0, d);
        b.finish(".", "pp_recursion")
    }

    fn pp_modif_subj(&mut self) -> (String, String, String) {
        let mut b = Builder::default();
        let d = self.depth(self.cfg.subject_pp_depth);
        if self.rng.gen_bool(0.7) {
            self.clause_tv(&mut b, d, 0);
        } else {
            self.clause_iv(&mut b, d);
        }
        b.finish(".", "pp_modif_subj")
    }
}

fn to_examples(rows: Vec<(String, String, String)>, split: Split) -> Vec<Example> {
    rows.into_iter()
        .enumerate()
        .map(|(i, (sentence, lf_text, category))| Example {
            id: i as u64,
            sentence,
            lf_text,
            category,
            split,
        })
        .collect()
}

/// Generation categories, in output order.
pub const GEN_CATEGORIES: [&str; 4] = ["pp_recursion", "pp_modif_subj", "q_subj", "q_obj"];

/// Deterministic for a fixed `(config, seed)`.
pub fn gen_synthetic(cfg: &SynthConfig, seed: u64) -> Result<(Vec<Example>, Vec<Example>)> {
    cfg.validate()?;
    let mut g = Gen {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    type Maker<'a> = fn(&mut Gen<'a>) -> (String, String, String);
    let mut mix: Vec<(f64, Maker)> = vec![(0.35, Gen::decl_tv), (0.10, Gen::decl_iv)];
    if cfg.ccomp {
        mix.push((0.15, Gen::ccomp));
    }
    if cfg.xcomp {
        mix.push((0.15, Gen::xcomp));
    }
    if cfg.wh_split {
        mix.push((0.25, Gen::q_subj));
    }
    let total: f64 = mix.iter().map(|(w, _)| w).sum();
    let mut train = Vec::with_capacity(cfg.train_size);
    for _ in 0..cfg.train_size {
        let mut r = g.rng.gen::<f64>() * total;
        let mut chosen = mix[mix.len() - 1].1;
        for (w, f) in &mix {
            if r < *w {
                chosen = *f;
                break;
            }
            r -= w;
        }
        train.push(chosen(&mut g));
    }

    let mut gen = Vec::new();
    let mut makers: Vec<Maker> = vec![Gen::pp_recursion];
    if cfg.subject_pp_gen {
        makers.push(Gen::pp_modif_subj);
    }
    if cfg.wh_split {
        makers.push(Gen::q_subj);
        makers.push(Gen::q_obj);
    }
    for f in makers {
        for _ in 0..cfg.gen_per_category {
            gen.push(f(&mut g));
        }
    }
    Ok((to_examples(train, Split::Train), to_examples(gen, Split::Gen)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccg::Supervisor;

    fn small() -> SynthConfig {
        SynthConfig {
            train_size: 200,
            gen_per_category: 30,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_synthetic(&small(), 3).unwrap();
        let b = gen_synthetic(&small(), 3).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(&small(), 4).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn every_example_trajectorizes() {
        let sup = Supervisor::default();
        let (train, gen) = gen_synthetic(&small(), 1).unwrap();
        for e in train.iter().chain(&gen) {
            let t = sup.build_trajectory(&e.sentence, &e.lf_text);
            let t = t.unwrap_or_else(|err| panic!("{}: {err}", e.sentence));
            let edges = sup.edges_for(&t.initial_types, &t).unwrap();
            assert_eq!(edges, t.gold_edges, "{}", e.sentence);
        }
    }

    #[test]
    fn gen_depth_exceeds_train_depth() {
        let cfg = small();
        let (train, gen) = gen_synthetic(&cfg, 9).unwrap();
        let depth = |e: &Example| e.lf_text.matches("nmod").count();
        let max_train = train.iter().map(depth).max().unwrap();
        let min_gen = gen
            .iter()
            .filter(|e| e.category == "pp_recursion")
            .map(depth)
            .min()
            .unwrap();
        assert!(max_train <= cfg.train_pp_depth.1);
        assert!(min_gen > max_train);
    }

    #[test]
    fn config_validation() {
        let mut cfg = small();
        cfg.gen_pp_depth = (2, 4);
        assert!(gen_synthetic(&cfg, 0).is_err());
        let json = serde_json::to_string(&SynthConfig::default()).unwrap();
        let back: SynthConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SynthConfig::default());
        let partial: SynthConfig = serde_json::from_str(r#"{"train_size": 10}"#).unwrap();
        assert_eq!(partial.train_size, 10);
    }
}
