//! Deterministic lexical type assignment from a gold logical form.

use std::collections::{BTreeMap, BTreeSet};

use crate::ccg::strip::{FunctionWords, Stripped};
use crate::ccg::types::{Atom, Category, Frame, TypeId, TypeTable, Voice};
use crate::error::{Error, Result};
use crate::lexical;
use crate::lf::{lf_to_edges, Arg, LogicalForm, Role, TermKind};

/// What a verb's surface context demands of its type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbQuery {
    pub category: Category,
    pub voice: Voice,
    /// Forward roles in consumption order, then the subject role.
    pub roles: Vec<Role>,
    pub gap: Option<Role>,
    /// Inside a relative clause whose gap this verb hosts.
    pub relative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ArgKind {
    Np,
    Pp,
    S,
    Vp,
}

impl ArgKind {
    fn category(self) -> Category {
        match self {
            ArgKind::Np => Category::np(),
            ArgKind::Pp => Category::Atom(Atom::Pp),
            ArgKind::S => Category::s(),
            ArgKind::Vp => Category::vp(),
        }
    }
}

fn frame_matches(frame: &Frame, q: &VerbQuery, gap: Option<&Role>) -> bool {
    frame.voice == q.voice && frame.roles == q.roles && frame.gap.as_ref() == gap
}

/// Resolves a query against the table with a fixed fallback cascade:
/// relative-gap entry, exact frame, frame without gap, structure plus subject role.
pub fn lookup_verb(table: &TypeTable, q: &VerbQuery) -> Option<TypeId> {
    if q.relative && q.gap.is_some() {
        let gapped = with_gap_result(&q.category);
        if let Some((t, _)) = table
            .verb_types()
            .find(|(t, f)| t.category == gapped && frame_matches(f, q, q.gap.as_ref()))
        {
            return Some(t.id);
        }
    }
    let same_cat = || table.verb_types().filter(|(t, _)| t.category == q.category);
    if let Some((t, _)) = same_cat().find(|(_, f)| frame_matches(f, q, q.gap.as_ref())) {
        return Some(t.id);
    }
    if let Some((t, _)) = same_cat().find(|(_, f)| frame_matches(f, q, None)) {
        return Some(t.id);
    }
    same_cat()
        .find(|(_, f)| f.voice == q.voice && f.gap.is_none() && f.subject() == q.roles.last().unwrap())
        .map(|(t, _)| t.id)
}

/// Replaces the `S` of the innermost `S\NP` with `S_GAP`.
fn with_gap_result(cat: &Category) -> Category {
    match cat {
        Category::Fwd(r, a) => Category::Fwd(Box::new(with_gap_result(r)), a.clone()),
        Category::Bwd(r, a) if r.is_atom(Atom::S) => Category::Bwd(Box::new(Category::Atom(Atom::SGap)), a.clone()),
        other => other.clone(),
    }
}

/// Assigns one type per content token.
pub fn derive_types(
    lf: &LogicalForm,
    tokens: &[String],
    stripped: &Stripped,
    fw: &FunctionWords,
    table: &TypeTable,
) -> Result<Vec<TypeId>> {
    if lf.is_primitive() || (stripped.content.len() == 1 && tokens.len() == 1) {
        return primitive_type(lf, stripped, table);
    }
    let gold = lf_to_edges(lf, tokens)?;

    let mut nouns: BTreeSet<usize> = BTreeSet::new();
    for t in &lf.terms {
        let pos = crate::lf::resolve_arg(&t.args[0], tokens)?;
        if let (TermKind::UnaryNoun, Some(p)) = (t.kind, pos) {
            nouns.insert(p);
        }
        for a in &t.args {
            if let Arg::Const(_) = a {
                if let Some(p) = crate::lf::resolve_arg(a, tokens)? {
                    nouns.insert(p);
                }
            }
        }
    }

    let mut verb_args: BTreeMap<usize, Vec<(Role, usize)>> = BTreeMap::new();
    let mut preps: BTreeSet<usize> = BTreeSet::new();
    for e in &gold.edges {
        match &e.role {
            Role::Nmod(p) => {
                let prep = (e.head + 1..e.dependent)
                    .rev()
                    .find(|&i| tokens[i].eq_ignore_ascii_case(p))
                    .ok_or_else(|| Error::Alignment(format!("no `{p}` between {} and {}", e.head, e.dependent)))?;
                preps.insert(prep);
                nouns.insert(e.dependent);
            }
            role => {
                verb_args.entry(e.head).or_default().push((role.clone(), e.dependent));
                if !role.is_clausal() {
                    nouns.insert(e.dependent);
                }
            }
        }
    }

    let is_kept = |i: usize| stripped.alignment.contains(&i);
    let stranded_to: Vec<usize> = (0..tokens.len())
        .filter(|&i| {
            tokens[i].eq_ignore_ascii_case(&fw.infinitival)
                && is_kept(i)
                && tokens.get(i + 1).is_none_or(|n| lexical::is_punctuation(n))
        })
        .collect();

    let mut out = Vec::with_capacity(stripped.content.len());
    for &p in &stripped.alignment {
        let tok = &tokens[p];
        let ty = if lexical::is_wh_word(tok) {
            table.id("WH")
        } else if fw.is_relative_that(tokens, p) {
            table.id("RC_THAT")
        } else if tok.eq_ignore_ascii_case(&fw.infinitival) {
            if stranded_to.contains(&p) {
                table.id("PP")
            } else {
                table.id("TO")
            }
        } else if preps.contains(&p) {
            table.id("PREP")
        } else if let Some(args) = verb_args.get(&p) {
            let q = verb_query(p, args, tokens, fw, &stranded_to)?;
            lookup_verb(table, &q).ok_or_else(|| Error::DerivationGap {
                token: tok.clone(),
                position: p,
            })?
        } else if nouns.contains(&p) {
            table.id("NP")
        } else {
            return Err(Error::DerivationGap {
                token: tok.clone(),
                position: p,
            });
        };
        out.push(ty);
    }
    Ok(out)
}

fn verb_query(
    v: usize,
    args: &[(Role, usize)],
    tokens: &[String],
    fw: &FunctionWords,
    stranded_to: &[usize],
) -> Result<VerbQuery> {
    let gap_err = || Error::DerivationGap {
        token: tokens[v].clone(),
        position: v,
    };
    let voice = if v > 0 && lexical::is_passive_aux(&tokens[v - 1]) {
        Voice::Passive
    } else {
        Voice::Active
    };

    let mut left: Vec<(Role, usize)> = args.iter().filter(|(r, d)| *d < v && r.is_core()).cloned().collect();
    left.sort_by_key(|(_, d)| std::cmp::Reverse(*d));
    let (subject, _) = left.first().cloned().ok_or_else(gap_err)?;

    let mut forward: Vec<(usize, Role, ArgKind)> = Vec::new();
    for (role, d) in args.iter().filter(|(_, d)| *d > v) {
        let kind = match role {
            Role::Ccomp => ArgKind::S,
            Role::Xcomp => ArgKind::Vp,
            Role::Recipient if dative_to_before(tokens, *d, fw) => ArgKind::Pp,
            _ => ArgKind::Np,
        };
        forward.push((*d, role.clone(), kind));
    }

    let mut gap = None;
    for (role, _) in left.iter().skip(1) {
        let stranded = stranded_to.iter().find(|&&t| t > v);
        match (role, stranded) {
            (Role::Recipient, Some(&t)) => forward.push((t, role.clone(), ArgKind::Pp)),
            _ if gap.is_none() => gap = Some(role.clone()),
            _ => return Err(gap_err()),
        }
    }
    forward.sort_by_key(|(pos, ..)| *pos);

    let mut category = Category::vp();
    for (_, _, kind) in forward.iter().rev() {
        category = Category::fwd(category, kind.category());
    }
    let mut roles: Vec<Role> = forward.into_iter().map(|(_, r, _)| r).collect();
    roles.push(subject.clone());

    let relative = gap.is_some()
        && left
            .iter()
            .skip(1)
            .any(|(_, d)| !lexical::is_wh_word(&tokens[*d]) && (*d + 1..v).any(|i| fw.is_relative_that(tokens, i)));

    Ok(VerbQuery {
        category,
        voice,
        roles,
        gap,
        relative,
    })
}

/// A dative `to` directly precedes the recipient, possibly with a determiner between.
fn dative_to_before(tokens: &[String], d: usize, fw: &FunctionWords) -> bool {
    let mut i = d;
    while i > 0 {
        i -= 1;
        let t = &tokens[i];
        if lexical::is_determiner(t) {
            continue;
        }
        return t.eq_ignore_ascii_case(&fw.infinitival);
    }
    false
}

fn primitive_type(lf: &LogicalForm, stripped: &Stripped, table: &TypeTable) -> Result<Vec<TypeId>> {
    if stripped.content.len() != 1 {
        return Err(Error::DerivationGap {
            token: stripped.content.join(" "),
            position: 0,
        });
    }
    let roles: BTreeSet<Role> = lf.role_terms().filter_map(|t| t.role.clone()).collect();
    if roles.is_empty() {
        return Ok(vec![table.id("NP")]);
    }
    table
        .verb_types()
        .find(|(_, f)| {
            f.voice == Voice::Active && f.gap.is_none() && f.roles.iter().cloned().collect::<BTreeSet<_>>() == roles
        })
        .map(|(t, _)| vec![t.id])
        .ok_or_else(|| Error::DerivationGap {
            token: stripped.content[0].clone(),
            position: stripped.alignment[0],
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexical::tokenize;
    use crate::lf::parse_lf;

    fn types(sentence: &str, lf: &str) -> Vec<String> {
        let table = TypeTable::builtin();
        let fw = FunctionWords::default();
        let toks = tokenize(sentence);
        let stripped = fw.strip(&toks);
        let ids = derive_types(&parse_lf(lf).unwrap(), &toks, &stripped, &fw, &table).unwrap();
        table.names(&ids)
    }

    #[test]
    fn wh_subject_keeps_transitive() {
        let t = types(
            "Who chased the cat ?",
            "* cat ( x _ 3 ) ; chase . agent ( x _ 1 , ? ) AND chase . theme ( x _ 1 , x _ 3 )",
        );
        assert_eq!(t, ["WH", "TV", "NP"]);
    }

    #[test]
    fn wh_object_loses_theme() {
        let t = types(
            "What did Emma chase ?",
            "chase . agent ( x _ 3 , Emma ) AND chase . theme ( x _ 3 , ? )",
        );
        assert_eq!(t, ["WH", "NP", "IV"]);
    }

    #[test]
    fn intransitive() {
        assert_eq!(
            types("A cat slept .", "cat ( x _ 1 ) AND sleep . agent ( x _ 2 , x _ 1 )"),
            ["NP", "IV"]
        );
    }

    #[test]
    fn passive_and_by() {
        let t = types(
            "A cake was burned by Emma .",
            "cake ( x _ 1 ) AND burn . theme ( x _ 3 , x _ 1 ) AND burn . agent ( x _ 3 , Emma )",
        );
        assert_eq!(t, ["NP", "PASS_TV", "NP"]);
    }

    #[test]
    fn passive_dative_question() {
        let t = types(
            "What was given to a mouse by a student ?",
            "give . theme ( x _ 2 , ? ) AND give . recipient ( x _ 2 , x _ 5 ) AND mouse ( x _ 5 ) \
             AND give . agent ( x _ 2 , x _ 8 ) AND student ( x _ 8 )",
        );
        assert_eq!(t, ["WH", "PASS_DTV_TO_BY", "TO", "NP", "NP"]);
    }

    #[test]
    fn stranded_dative() {
        let t = types(
            "Who did a girl give the scarf to ?",
            "* scarf ( x _ 6 ) ; girl ( x _ 3 ) AND give . agent ( x _ 4 , x _ 3 ) AND give . theme ( x _ 4 , x _ 6 ) \
             AND give . recipient ( x _ 4 , ? )",
        );
        assert_eq!(t, ["WH", "NP", "DTV_TO", "NP", "PP"]);
    }

    #[test]
    fn relative_object_gap() {
        let t = types(
            "A cake that Liam found was investigated by the cat .",
            "* cat ( x _ 9 ) ; cake ( x _ 1 ) AND find . agent ( x _ 4 , Liam ) AND find . theme ( x _ 4 , x _ 1 ) \
             AND investigate . theme ( x _ 6 , x _ 1 ) AND investigate . agent ( x _ 6 , x _ 9 )",
        );
        assert_eq!(t, ["NP", "RC_THAT", "NP", "TV_GAP", "PASS_TV", "NP"]);
    }

    #[test]
    fn complement_and_pp() {
        let t = types(
            "Emma hoped that a cake beside a car was burned .",
            "hope . agent ( x _ 1 , Emma ) AND hope . ccomp ( x _ 1 , x _ 9 ) AND cake ( x _ 4 ) \
             AND cake . nmod . beside ( x _ 4 , x _ 7 ) AND car ( x _ 7 ) AND burn . theme ( x _ 9 , x _ 4 )",
        );
        assert_eq!(t, ["NP", "CCOMP", "NP", "PREP", "NP", "PASS_IV"]);
    }

    #[test]
    fn control_verb() {
        let t = types(
            "Emma wanted to eat a cake .",
            "want . agent ( x _ 1 , Emma ) AND want . xcomp ( x _ 1 , x _ 3 ) AND eat . agent ( x _ 3 , Emma ) \
             AND eat . theme ( x _ 3 , x _ 5 ) AND cake ( x _ 5 )",
        );
        assert_eq!(t, ["NP", "XCOMP", "TV", "NP"]);
    }

    #[test]
    fn primitives() {
        assert_eq!(types("shark", "LAMBDA a . shark ( a )"), ["NP"]);
        assert_eq!(
            types(
                "paint",
                "LAMBDA a . LAMBDA b . LAMBDA e . paint . agent ( e , b ) AND paint . theme ( e , a )"
            ),
            ["TV"]
        );
    }

    #[test]
    fn double_object_theme_extraction_falls_back_to_tv() {
        let t = types(
            "What did Emma give the girl ?",
            "* girl ( x _ 5 ) ; give . agent ( x _ 3 , Emma ) AND give . recipient ( x _ 3 , x _ 5 ) AND give . theme ( x _ 3 , ? )",
        );
        assert_eq!(t, ["WH", "NP", "TV", "NP"]);
    }

    #[test]
    fn unknown_word_is_gap() {
        let table = TypeTable::builtin();
        let fw = FunctionWords::default();
        let toks = tokenize("A cat slept happily .");
        let stripped = fw.strip(&toks);
        let lf = parse_lf("cat ( x _ 1 ) AND sleep . agent ( x _ 2 , x _ 1 )").unwrap();
        assert!(matches!(
            derive_types(&lf, &toks, &stripped, &fw, &table),
            Err(Error::DerivationGap { position: 3, .. })
        ));
    }
}
