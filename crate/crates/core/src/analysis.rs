//! Structural labels computed from gold trajectories only: sub-pattern
//! decomposition, the two failure mechanisms, and type n-gram coverage.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ccg::cky::{Derivation, Rule, Side};
use crate::ccg::types::{Atom, Category, Voice};
use crate::ccg::{Trajectory, TypeId, TypeTable};
use crate::eval::EvalRecord;
use crate::lexical::is_wh_word;
use crate::lf::{resolve_arg, LogicalForm, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapRole {
    Agent,
    Theme,
    Recipient,
    /// A non-core role (e.g. a questioned clausal complement).
    Other,
    None,
}

impl GapRole {
    fn of(role: &Role) -> GapRole {
        match role {
            Role::Agent => GapRole::Agent,
            Role::Theme => GapRole::Theme,
            Role::Recipient => GapRole::Recipient,
            _ => GapRole::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapVoice {
    Active,
    Passive,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attachment {
    /// Consumed by backward application on the main clause spine.
    MainSubject,
    /// Consumed by backward application inside a complement or relative clause.
    Embedded,
    /// Consumed by forward application.
    ObjectSide,
    None,
}

/// Table-3/4 features. `gap_*` describe the wh-gap, `rc_gap_*` the gap
/// inside the (first) relative clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubPatternLabel {
    pub gap_role: GapRole,
    pub gap_voice: GapVoice,
    pub has_rc: bool,
    pub rc_attachment: Attachment,
    pub rc_gap_role: GapRole,
    pub rc_gap_voice: GapVoice,
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl SubPatternLabel {
    /// Stable row key, e.g. `gap=theme/active rc=main_subject/agent/active`.
    pub fn key(&self) -> String {
        let rc = if self.has_rc {
            format!(
                "{}/{}/{}",
                snake(&self.rc_attachment),
                snake(&self.rc_gap_role),
                snake(&self.rc_gap_voice)
            )
        } else {
            "none".into()
        };
        format!("gap={}/{} rc={rc}", snake(&self.gap_role), snake(&self.gap_voice))
    }

    /// The wh-question grouping: gap role, voice, RC presence.
    pub fn wh_key(&self) -> String {
        format!(
            "gap={}/{} rc={}",
            snake(&self.gap_role),
            snake(&self.gap_voice),
            if self.has_rc { "yes" } else { "no" }
        )
    }

    /// The RC grouping: attachment, RC gap role and voice.
    pub fn rc_key(&self) -> String {
        format!(
            "rc={}/{}/{}",
            snake(&self.rc_attachment),
            snake(&self.rc_gap_role),
            snake(&self.rc_gap_voice)
        )
    }
}

fn content_index(traj: &Trajectory, token: usize) -> Option<usize> {
    traj.alignment.iter().position(|&p| p == token)
}

/// Content position of the verb hosting the wh-gap, and the gapped role.
pub fn wh_gap(lf: &LogicalForm, traj: &Trajectory) -> Option<(usize, Role)> {
    let wh_tok = traj.tokens.iter().position(|t| is_wh_word(t))?;
    lf.role_terms().find_map(|t| {
        let dep = resolve_arg(&t.args[1], &traj.tokens).ok()??;
        if dep != wh_tok {
            return None;
        }
        let head = resolve_arg(&t.args[0], &traj.tokens).ok()??;
        Some((content_index(traj, head)?, t.role.clone()?))
    })
}

fn voice(table: &TypeTable, ty: TypeId) -> GapVoice {
    match table.get(ty).frame().map(|f| f.voice) {
        Some(Voice::Active) => GapVoice::Active,
        Some(Voice::Passive) => GapVoice::Passive,
        None => GapVoice::None,
    }
}

fn child_side(d: &Derivation, parent: usize, child: usize) -> Side {
    match d.nodes[parent].children {
        Some((l, _)) if l == child => Side::Left,
        _ => Side::Right,
    }
}

/// Whether `node` lies on the main clause spine: every step up to the root
/// passes through the head child, or enters a wh-merge as its clause.
fn on_main_spine(d: &Derivation, mut node: usize) -> bool {
    while let Some(p) = d.parent_of(node) {
        let pn = &d.nodes[p];
        if pn.rule != Rule::WhMerge && pn.head_child != Some(child_side(d, p, node)) {
            return false;
        }
        node = p;
    }
    true
}

/// Where the NP built at `np_node` is consumed.
pub fn attachment(d: &Derivation, np_node: usize) -> Attachment {
    let Some(p) = d.parent_of(np_node) else {
        return Attachment::None;
    };
    match d.nodes[p].rule {
        Rule::BwdApp if child_side(d, p, np_node) == Side::Left => {
            if on_main_spine(d, p) {
                Attachment::MainSubject
            } else {
                Attachment::Embedded
            }
        }
        Rule::FwdApp => Attachment::ObjectSide,
        _ => Attachment::None,
    }
}

/// NP nodes built by `NP + NP\NP`, paired with the modifier node.
pub fn modified_nps(d: &Derivation) -> Vec<(usize, usize)> {
    d.internal()
        .filter(|(_, n)| n.rule == Rule::BwdApp && n.category == Category::np())
        .filter_map(|(i, n)| {
            let (_, r) = n.children?;
            (d.nodes[r].category == Category::np_modifier()).then_some((i, r))
        })
        .collect()
}

fn rc_gap(d: &Derivation, table: &TypeTable, traj: &Trajectory, rc_node: usize) -> (GapRole, GapVoice) {
    let Some((_, clause)) = d.nodes[rc_node].children else {
        return (GapRole::None, GapVoice::None);
    };
    let verb_ty = traj.initial_types[d.nodes[clause].head];
    let Some(frame) = table.get(verb_ty).frame() else {
        return (GapRole::None, GapVoice::None);
    };
    let v = voice(table, verb_ty);
    let cat = &d.nodes[clause].category;
    if *cat == Category::vp() {
        (GapRole::of(frame.subject()), v)
    } else if let Some(g) = &frame.gap {
        (GapRole::of(g), v)
    } else if cat.is_atom(Atom::SGap) {
        // TV_GAP-style entries that record the gap only through S_GAP.
        (GapRole::Theme, v)
    } else {
        (GapRole::Other, v)
    }
}

pub fn classify_subpattern(lf: Option<&LogicalForm>, traj: &Trajectory, table: &TypeTable) -> SubPatternLabel {
    let d = &traj.derivation;
    let (gap_role, gap_voice) = match lf.and_then(|lf| wh_gap(lf, traj)) {
        Some((host, role)) => (GapRole::of(&role), voice(table, traj.initial_types[host])),
        None => (GapRole::None, GapVoice::None),
    };
    let rc_first = modified_nps(d)
        .into_iter()
        .filter(|&(_, m)| d.nodes[m].rule == Rule::RcMerge)
        .min_by_key(|&(np, _)| d.nodes[np].span.0);
    let (has_rc, rc_attachment, rc_gap_role, rc_gap_voice) = match rc_first {
        Some((np, m)) => {
            let (r, v) = rc_gap(d, table, traj, m);
            (true, attachment(d, np), r, v)
        }
        None => (false, Attachment::None, GapRole::None, GapVoice::None),
    };
    SubPatternLabel {
        gap_role,
        gap_voice,
        has_rc,
        rc_attachment,
        rc_gap_role,
        rc_gap_voice,
    }
}

/// A merge together with how its children were built; the unit whose
/// training coverage decides success.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MergeSignature {
    pub rule: String,
    pub left: String,
    pub right: String,
    pub left_rule: String,
    pub right_rule: String,
}

pub fn merge_signatures(d: &Derivation) -> Vec<MergeSignature> {
    d.internal()
        .map(|(_, n)| {
            let (l, r) = n.children.unwrap();
            MergeSignature {
                rule: n.rule.tag().into(),
                left: d.nodes[l].category.to_string(),
                right: d.nodes[r].category.to_string(),
                left_rule: d.nodes[l].rule.tag().into(),
                right_rule: d.nodes[r].rule.tag().into(),
            }
        })
        .collect()
}

/// Read-only index over the training trajectories.
#[derive(Debug, Clone, Default)]
pub struct TrainCoverage {
    ngrams: [HashSet<Vec<TypeId>>; 2],
    /// Verb types each predicate lemma receives in training.
    lemma_types: HashMap<String, BTreeSet<TypeId>>,
    merges: HashSet<MergeSignature>,
}

impl TrainCoverage {
    pub fn build<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>, table: &TypeTable) -> TrainCoverage {
        let mut cov = TrainCoverage::default();
        for t in trajs {
            for (k, n) in [2, 3].into_iter().enumerate() {
                cov.ngrams[k].extend(t.initial_types.windows(n).map(<[TypeId]>::to_vec));
            }
            for (i, &ty) in t.initial_types.iter().enumerate() {
                if table.get(ty).frame().is_some() {
                    let lemma = lemma_at(t, i);
                    cov.lemma_types.entry(lemma).or_default().insert(ty);
                }
            }
            cov.merges.extend(merge_signatures(&t.derivation));
        }
        cov
    }

    /// Training n-grams, n in {2, 3}.
    pub fn contains(&self, gram: &[TypeId]) -> bool {
        match gram.len() {
            2 => self.ngrams[0].contains(gram),
            3 => self.ngrams[1].contains(gram),
            _ => false,
        }
    }

    pub fn lemma_types(&self, lemma: &str) -> Option<&BTreeSet<TypeId>> {
        self.lemma_types.get(lemma)
    }

    pub fn has_merge(&self, m: &MergeSignature) -> bool {
        self.merges.contains(m)
    }
}

fn lemma_at(t: &Trajectory, content: usize) -> String {
    let tok = t.alignment[content];
    t.gold_edges
        .token_lemmas
        .get(tok)
        .cloned()
        .unwrap_or_else(|| t.tokens[tok].to_lowercase())
}

/// The example's type n-grams absent from training, first occurrence order.
pub fn ngram_coverage(cov: &TrainCoverage, types: &[TypeId], n: usize) -> Vec<Vec<TypeId>> {
    assert!(n == 2 || n == 3, "coverage is indexed for n = 2, 3");
    let mut seen = HashSet::new();
    types
        .windows(n)
        .filter(|g| !cov.contains(g) && seen.insert(g.to_vec()))
        .map(<[TypeId]>::to_vec)
        .collect()
}

/// Merges of the example's gold derivation absent from training.
pub fn novel_merges(cov: &TrainCoverage, traj: &Trajectory) -> Vec<MergeSignature> {
    let set: BTreeSet<_> = merge_signatures(&traj.derivation)
        .into_iter()
        .filter(|m| !cov.has_merge(m))
        .collect();
    set.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "A_forward_arg_extraction")]
    ForwardArgExtraction,
    #[serde(rename = "B_subject_side_modifier")]
    SubjectSideModifier,
}

/// Empty means covered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismLabel(pub BTreeSet<Mechanism>);

impl MechanismLabel {
    pub fn is_covered(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has(&self, m: Mechanism) -> bool {
        self.0.contains(&m)
    }

    pub fn render(&self) -> String {
        if self.is_covered() {
            "covered".into()
        } else {
            self.0.iter().map(snake).collect::<Vec<_>>().join("+")
        }
    }
}

/// A: the wh-gap host carries a type its lemma never receives in training,
/// with WH material to its left. B: an `NP + NP\NP` result is the subject
/// of the main clause.
pub fn classify_mechanism(
    lf: Option<&LogicalForm>,
    traj: &Trajectory,
    cov: &TrainCoverage,
    table: &TypeTable,
) -> MechanismLabel {
    let mut out = BTreeSet::new();
    if let Some((host, _)) = lf.and_then(|lf| wh_gap(lf, traj)) {
        let wh = table.id("WH");
        let ty = traj.initial_types[host];
        let wh_left = traj.initial_types[..host].contains(&wh);
        let seen = cov.lemma_types(&lemma_at(traj, host)).is_some_and(|s| s.contains(&ty));
        if wh_left && !seen {
            out.insert(Mechanism::ForwardArgExtraction);
        }
    }
    let d = &traj.derivation;
    if modified_nps(d)
        .iter()
        .any(|&(np, _)| attachment(d, np) == Attachment::MainSubject)
    {
        out.insert(Mechanism::SubjectSideModifier);
    }
    MechanismLabel(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompRow {
    pub key: String,
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub category: String,
    /// Sorted by key.
    pub rows: Vec<DecompRow>,
    /// Examples in rows at exactly 100%.
    pub all_pass: usize,
    /// Examples in rows at exactly 0%.
    pub all_fail: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Decomposition {
    /// Every row is at exactly 0% or exactly 100%.
    pub fn is_dichotomous(&self) -> bool {
        self.all_pass + self.all_fail == self.total
    }

    pub fn render_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.key.len()).max().unwrap_or(0).max(10);
        let mut s = format!("{}\n", self.category);
        for r in &self.rows {
            let _ = writeln!(s, "  {:<w$}  {:>5}  {:>6.1}%", r.key, r.count, 100.0 * r.accuracy);
        }
        let _ = writeln!(s, "  {:<w$}  {:>5}  100.0%", "subtotal pass", self.all_pass);
        let _ = writeln!(s, "  {:<w$}  {:>5}    0.0%", "subtotal fail", self.all_fail);
        let _ = writeln!(
            s,
            "  {:<w$}  {:>5}  {:>6.1}%",
            "total",
            self.total,
            100.0 * self.accuracy
        );
        s
    }
}

/// Groups `records` by `keys` (parallel slices) and scores with `hit`.
pub fn decompose_category(
    category: &str,
    records: &[&EvalRecord],
    keys: &[String],
    hit: impl Fn(&EvalRecord) -> bool,
) -> Decomposition {
    assert_eq!(records.len(), keys.len());
    let mut by: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (r, k) in records.iter().zip(keys) {
        let e = by.entry(k.as_str()).or_default();
        e.0 += 1;
        e.1 += hit(r) as usize;
    }
    let rows: Vec<DecompRow> = by
        .into_iter()
        .map(|(k, (n, c))| DecompRow {
            key: k.to_string(),
            count: n,
            correct: c,
            accuracy: c as f64 / n as f64,
        })
        .collect();
    let total = records.len();
    let correct: usize = rows.iter().map(|r| r.correct).sum();
    Decomposition {
        category: category.to_string(),
        all_pass: rows.iter().filter(|r| r.correct == r.count).map(|r| r.count).sum(),
        all_fail: rows.iter().filter(|r| r.correct == 0).map(|r| r.count).sum(),
        rows,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccg::Supervisor;
    use crate::lf::parse_lf;

    fn traj(sup: &Supervisor, s: &str, lf: &str) -> (Trajectory, LogicalForm) {
        (sup.build_trajectory(s, lf).unwrap(), parse_lf(lf).unwrap())
    }

    const WHO_CLEANED: (&str, &str) = (
        "Who cleaned a cake beside a car ?",
        "clean . agent ( x _ 1 , ? ) AND clean . theme ( x _ 1 , x _ 3 ) AND cake ( x _ 3 ) \
         AND cake . nmod . beside ( x _ 3 , x _ 6 ) AND car ( x _ 6 )",
    );
    const EMMA_CLEANED: (&str, &str) = (
        "Emma cleaned a cake beside a car .",
        "clean . agent ( x _ 1 , Emma ) AND clean . theme ( x _ 1 , x _ 3 ) AND cake ( x _ 3 ) \
         AND cake . nmod . beside ( x _ 3 , x _ 6 ) AND car ( x _ 6 )",
    );
    const CAKE_FOUND: (&str, &str) = (
        "A cake that Liam found was investigated by the cat .",
        "* cat ( x _ 9 ) ; cake ( x _ 1 ) AND find . agent ( x _ 4 , Liam ) AND find . theme ( x _ 4 , x _ 1 ) \
         AND investigate . theme ( x _ 6 , x _ 1 ) AND investigate . agent ( x _ 6 , x _ 9 )",
    );
    const CAT_BESIDE: (&str, &str) = (
        "A cat beside the box saw Emma .",
        "* box ( x _ 4 ) ; cat ( x _ 1 ) AND cat . nmod . beside ( x _ 1 , x _ 4 ) \
         AND see . agent ( x _ 5 , x _ 1 ) AND see . theme ( x _ 5 , Emma )",
    );

    #[test]
    fn agent_gap_question() {
        let sup = Supervisor::default();
        let (t, lf) = traj(&sup, WHO_CLEANED.0, WHO_CLEANED.1);
        let l = classify_subpattern(Some(&lf), &t, &sup.table);
        assert_eq!(
            (l.gap_role, l.gap_voice, l.has_rc),
            (GapRole::Agent, GapVoice::Active, false)
        );
        assert_eq!(l.wh_key(), "gap=agent/active rc=no");
    }

    #[test]
    fn rc_on_main_subject() {
        let sup = Supervisor::default();
        let (t, lf) = traj(&sup, CAKE_FOUND.0, CAKE_FOUND.1);
        let l = classify_subpattern(Some(&lf), &t, &sup.table);
        assert!(l.has_rc);
        assert_eq!(l.rc_attachment, Attachment::MainSubject);
        assert_eq!((l.rc_gap_role, l.rc_gap_voice), (GapRole::Theme, GapVoice::Active));
        assert_eq!(l.gap_role, GapRole::None);
    }

    #[test]
    fn mechanisms() {
        let sup = Supervisor::default();
        let (train, _) = traj(&sup, EMMA_CLEANED.0, EMMA_CLEANED.1);
        let cov = TrainCoverage::build([&train], &sup.table);

        let (t, lf) = traj(&sup, CAT_BESIDE.0, CAT_BESIDE.1);
        let m = classify_mechanism(Some(&lf), &t, &cov, &sup.table);
        assert!(m.has(Mechanism::SubjectSideModifier) && !m.has(Mechanism::ForwardArgExtraction));

        let (t, lf) = traj(&sup, WHO_CLEANED.0, WHO_CLEANED.1);
        assert!(classify_mechanism(Some(&lf), &t, &cov, &sup.table).is_covered());

        let (t, lf) = traj(
            &sup,
            "What did Emma clean ?",
            "clean . agent ( x _ 3 , Emma ) AND clean . theme ( x _ 3 , ? )",
        );
        let m = classify_mechanism(Some(&lf), &t, &cov, &sup.table);
        assert_eq!(m.render(), "A_forward_arg_extraction");

        assert!(classify_mechanism(None, &train, &cov, &sup.table).is_covered());
    }

    #[test]
    fn ngram_edge_cases() {
        let sup = Supervisor::default();
        let (train, _) = traj(&sup, EMMA_CLEANED.0, EMMA_CLEANED.1);
        let cov = TrainCoverage::build([&train], &sup.table);
        for n in [2, 3] {
            assert!(ngram_coverage(&cov, &train.initial_types, n).is_empty());
        }
        assert!(ngram_coverage(&cov, &[sup.table.id("NP")], 2).is_empty());
        let (t, _) = traj(&sup, WHO_CLEANED.0, WHO_CLEANED.1);
        let novel = ngram_coverage(&cov, &t.initial_types, 2);
        assert_eq!(novel, vec![vec![sup.table.id("WH"), sup.table.id("TV")]]);
    }

    #[test]
    fn decomposition() {
        let mk = |ok: bool| EvalRecord {
            example_id: 0,
            category: "c".into(),
            sentence: String::new(),
            predicted_initial_types: vec![],
            predicted_final_types: vec![],
            initial_match: ok,
            final_match: ok,
            type_match: ok,
            edge_match: ok,
            cky_ok: true,
            failure_note: None,
        };
        let recs = [mk(true), mk(true), mk(false), mk(true)];
        let refs: Vec<&EvalRecord> = recs.iter().collect();
        let keys: Vec<String> = ["a", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let d = decompose_category("c", &refs, &keys, |r| r.type_match);
        assert_eq!((d.all_pass, d.all_fail, d.total), (3, 1, 4));
        assert!(d.is_dichotomous());
        assert_eq!(
            d.rows.iter().map(|r| r.key.as_str()).collect::<Vec<_>>(),
            ["a", "b", "c"]
        );

        let all = decompose_category("c", &refs[..2], &keys[..2], |r| r.type_match);
        assert_eq!(all.rows.len(), 1);
        assert_eq!(all.accuracy, 1.0);
    }
}
