//! Deterministic semantic edge extraction from a derivation.
//!
//! Each node carries a small semantic value. Verbal functors hold a role
//! queue; forward application pops its front, backward application consumes
//! the last (subject) role. Gaps are recorded on the hosting verb and filled
//! by the wh-word or by the noun a relative clause modifies.

use std::collections::VecDeque;

use crate::ccg::cky::{Derivation, Rule};
use crate::ccg::types::{Lexical, TypeTable};
use crate::error::{Error, Result};
use crate::lf::{Edge, EdgeSet, Role};

#[derive(Debug, Clone)]
struct Verbal {
    verb: usize,
    queue: VecDeque<Role>,
    gap: Option<(usize, Role)>,
    /// Infinitival verbs whose subject is the subject of this verb.
    controlled: Vec<(usize, Role)>,
    /// Deepest verb along the complement chain; fallback gap site.
    gap_host: usize,
}

#[derive(Debug, Clone)]
struct Clause {
    verb: usize,
    gap: Option<(usize, Role)>,
    gap_host: usize,
}

#[derive(Debug, Clone)]
enum Sem {
    Np(usize),
    Wh(usize),
    Verbal(Verbal),
    Clause(Clause),
    Prep(String),
    /// `NP\NP` from a preposition: (preposition lemma, object head).
    Nmod(String, usize),
    /// `NP\NP` from a relative clause: argument slots the modified noun fills.
    Relative(Vec<(usize, Role)>),
    To,
    Pp(Option<usize>),
    RcThat,
    Other,
}

struct Extractor<'a> {
    edges: Vec<Edge>,
    alignment: &'a [usize],
}

impl Extractor<'_> {
    fn emit(&mut self, head: usize, role: Role, dependent: usize) {
        self.edges.push(Edge {
            head: self.alignment[head],
            role,
            dependent: self.alignment[dependent],
        });
    }

    /// Fills the subject slot of `v` (and its controlled verbs) with `filler`.
    fn saturate(&mut self, v: Verbal, filler: usize) -> Result<Clause> {
        if v.queue.len() != 1 {
            return Err(Error::RoleExhausted(v.verb));
        }
        let subj = v.queue[0].clone();
        self.emit(v.verb, subj, filler);
        for (c, r) in &v.controlled {
            self.emit(*c, r.clone(), filler);
        }
        Ok(Clause {
            verb: v.verb,
            gap: v.gap,
            gap_host: v.gap_host,
        })
    }

    fn forward(&mut self, mut v: Verbal, arg: Sem) -> Result<Sem> {
        if v.queue.len() < 2 {
            return Err(Error::RoleExhausted(v.verb));
        }
        let role = v.queue.pop_front().unwrap();
        match arg {
            Sem::Np(h) | Sem::Wh(h) | Sem::Pp(Some(h)) => self.emit(v.verb, role, h),
            Sem::Pp(None) => v.gap = Some((v.verb, role)),
            Sem::Clause(c) => {
                self.emit(v.verb, role, c.verb);
                if c.gap.is_some() {
                    v.gap = c.gap;
                }
                v.gap_host = c.gap_host;
            }
            Sem::Verbal(x) => {
                self.emit(v.verb, role, x.verb);
                if let Some(subj) = x.queue.back() {
                    v.controlled.push((x.verb, subj.clone()));
                }
                v.controlled.extend(x.controlled);
                if x.gap.is_some() {
                    v.gap = x.gap;
                }
                v.gap_host = x.gap_host;
            }
            _ => {}
        }
        Ok(Sem::Verbal(v))
    }

    fn combine(&mut self, rule: Rule, left: Sem, right: Sem) -> Result<Sem> {
        Ok(match (rule, left, right) {
            (Rule::FwdApp, Sem::Verbal(v), arg) => self.forward(v, arg)?,
            (Rule::FwdApp, Sem::Prep(p), Sem::Np(h)) => Sem::Nmod(p, h),
            (Rule::FwdApp, Sem::To, Sem::Np(h)) => Sem::Pp(Some(h)),
            (Rule::BwdApp, Sem::Np(h), Sem::Nmod(p, obj)) => {
                self.emit(h, Role::Nmod(p), obj);
                Sem::Np(h)
            }
            (Rule::BwdApp, Sem::Np(h), Sem::Relative(fills)) => {
                for (v, r) in fills {
                    self.emit(v, r, h);
                }
                Sem::Np(h)
            }
            (Rule::BwdApp | Rule::WhMerge, Sem::Np(h) | Sem::Wh(h), Sem::Verbal(v)) => {
                Sem::Clause(self.saturate(v, h)?)
            }
            (Rule::WhMerge, Sem::Wh(w), Sem::Clause(c)) => {
                let (v, r) = c.gap.clone().unwrap_or((c.gap_host, Role::Theme));
                self.emit(v, r, w);
                Sem::Clause(Clause { gap: None, ..c })
            }
            (Rule::RcMerge, Sem::RcThat, Sem::Clause(c)) => {
                Sem::Relative(vec![c.gap.unwrap_or((c.gap_host, Role::Theme))])
            }
            (Rule::RcMerge, Sem::RcThat, Sem::Verbal(v)) => {
                let subj = v.queue.back().cloned().ok_or(Error::RoleExhausted(v.verb))?;
                if v.queue.len() != 1 {
                    return Err(Error::RoleExhausted(v.verb));
                }
                let mut fills = vec![(v.verb, subj)];
                fills.extend(v.controlled);
                Sem::Relative(fills)
            }
            _ => Sem::Other,
        })
    }
}

fn leaf(table: &TypeTable, ty: usize, pos: usize, token: &str) -> Sem {
    let t = table.get(ty);
    match (&t.lexical, t.name.as_str()) {
        (Lexical::Verb(f), _) => Sem::Verbal(Verbal {
            verb: pos,
            queue: f.roles.iter().cloned().collect(),
            gap: f.gap.clone().map(|r| (pos, r)),
            controlled: Vec::new(),
            gap_host: pos,
        }),
        (Lexical::Preposition, _) => Sem::Prep(token.to_lowercase()),
        (_, "NP") => Sem::Np(pos),
        (_, "WH") => Sem::Wh(pos),
        (_, "TO") => Sem::To,
        (_, "PP") => Sem::Pp(None),
        (_, "RC_THAT") => Sem::RcThat,
        _ => Sem::Other,
    }
}

/// Semantic edges of a derivation over original sentence positions.
///
/// `tokens` is the original sentence; `alignment[i]` is the original position
/// of content position `i`.
pub fn extract_edges(d: &Derivation, table: &TypeTable, tokens: &[String], alignment: &[usize]) -> Result<EdgeSet> {
    let mut ex = Extractor {
        edges: Vec::new(),
        alignment,
    };
    let mut sems: Vec<Option<Sem>> = vec![None; d.nodes.len()];
    for (i, node) in d.nodes.iter().enumerate() {
        let sem = match node.children {
            None => {
                let pos = node.span.0;
                leaf(table, d.leaf_types[pos], pos, &tokens[alignment[pos]])
            }
            Some((l, r)) => {
                let ls = sems[l].take().expect("children precede parents");
                let rs = sems[r].take().expect("children precede parents");
                ex.combine(node.rule, ls, rs)?
            }
        };
        sems[i] = Some(sem);
    }
    Ok(EdgeSet::from_edges(ex.edges, tokens))
}
