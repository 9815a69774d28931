//! COGS/SLOG logical forms: parsing, rendering and canonical edge sets.
//!
//! The accepted surface syntax is the benchmark's conjunctive notation:
//!
//! ```text
//! * cat ( x _ 1 ) ; eat . agent ( x _ 2 , x _ 1 ) AND eat . theme ( x _ 2 , Emma )
//! LAMBDA a . LAMBDA e . sleep . agent ( e , a )
//! ```
//!
//! Tokens need not be space separated (`cake(x_3)` parses the same way).
//! A `?` argument stands for the wh-word of a question and aligns to it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexical;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Agent,
    Theme,
    Recipient,
    Ccomp,
    Xcomp,
    /// Noun modification by a preposition, e.g. `nmod.beside`.
    Nmod(String),
}

impl Role {
    pub fn parse(s: &str) -> Result<Role> {
        match s {
            "agent" => Ok(Role::Agent),
            "theme" => Ok(Role::Theme),
            "recipient" => Ok(Role::Recipient),
            "ccomp" => Ok(Role::Ccomp),
            "xcomp" => Ok(Role::Xcomp),
            _ => match s.strip_prefix("nmod.") {
                Some(prep) if !prep.is_empty() => Ok(Role::Nmod(prep.to_string())),
                _ => Err(Error::UnknownRole(s.to_string())),
            },
        }
    }

    /// Core argument roles, the ones a verb frame orders.
    pub fn is_core(&self) -> bool {
        matches!(self, Role::Agent | Role::Theme | Role::Recipient)
    }

    pub fn is_clausal(&self) -> bool {
        matches!(self, Role::Ccomp | Role::Xcomp)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Agent => f.write_str("agent"),
            Role::Theme => f.write_str("theme"),
            Role::Recipient => f.write_str("recipient"),
            Role::Ccomp => f.write_str("ccomp"),
            Role::Xcomp => f.write_str("xcomp"),
            Role::Nmod(p) => write!(f, "nmod.{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arg {
    /// `x _ i`, bound to token `i`.
    Var(usize),
    /// A proper name appearing verbatim in the sentence.
    Const(String),
    /// A variable bound by a `LAMBDA` prefix (primitive examples).
    Lambda(String),
    /// `?`, the questioned argument.
    Wh,
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Var(i) => write!(f, "x _ {i}"),
            Arg::Const(c) | Arg::Lambda(c) => f.write_str(c),
            Arg::Wh => f.write_str("?"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermKind {
    UnaryNoun,
    Role,
    EventPredicate,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub predicate: String,
    pub kind: TermKind,
    pub role: Option<Role>,
    pub args: Vec<Arg>,
}

impl Term {
    fn render_into(&self, out: &mut String) {
        out.push_str(&self.predicate);
        if let Some(role) = &self.role {
            for part in role.to_string().split('.') {
                out.push_str(" . ");
                out.push_str(part);
            }
        }
        out.push_str(" ( ");
        let args: Vec<String> = self.args.iter().map(Arg::to_string).collect();
        out.push_str(&args.join(" , "));
        out.push_str(" )");
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalForm {
    pub lambdas: Vec<String>,
    pub terms: Vec<Term>,
    pub variables: BTreeSet<usize>,
    pub definite_markers: BTreeSet<usize>,
}

impl LogicalForm {
    pub fn is_primitive(&self) -> bool {
        !self.lambdas.is_empty()
    }

    pub fn role_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| t.kind == TermKind::Role)
    }

    /// Renders in the benchmark's spaced notation, definites first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lambdas {
            out.push_str("LAMBDA ");
            out.push_str(l);
            out.push_str(" . ");
        }
        let mut body = Vec::new();
        for term in &self.terms {
            let definite = term.kind == TermKind::UnaryNoun
                && matches!(term.args.as_slice(), [Arg::Var(v)] if self.definite_markers.contains(v));
            let mut s = String::new();
            if definite {
                s.push_str("* ");
                term.render_into(&mut s);
                out.push_str(&s);
                out.push_str(" ; ");
            } else {
                term.render_into(&mut s);
                body.push(s);
            }
        }
        out.push_str(&body.join(" AND "));
        out.trim_end_matches(" ; ").to_string()
    }
}

impl fmt::Display for LogicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(usize),
    LParen,
    RParen,
    Comma,
    Dot,
    Underscore,
    Star,
    Semi,
    Question,
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '_' => Some(Tok::Underscore),
            '*' => Some(Tok::Star),
            ';' => Some(Tok::Semi),
            '?' => Some(Tok::Question),
            _ => None,
        };
        if let Some(t) = single {
            toks.push(t);
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse().map_err(|_| Error::Syntax {
                position: toks.len(),
                message: format!("bad number `{s}`"),
            })?;
            toks.push(Tok::Num(n));
        } else if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '-' || chars[i] == '\'') {
                i += 1;
            }
            toks.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(Error::Syntax {
                position: toks.len(),
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    lambdas: Vec<String>,
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {tok:?}, found {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other:?}")),
        }
    }

    fn lambda_prefix(&mut self) -> Result<()> {
        while matches!(self.peek(), Some(Tok::Ident(s)) if s == "LAMBDA") {
            self.pos += 1;
            let var = self.ident()?;
            self.expect(Tok::Dot)?;
            self.lambdas.push(var);
        }
        Ok(())
    }

    fn arg(&mut self) -> Result<Arg> {
        match self.peek().cloned() {
            Some(Tok::Question) => {
                self.pos += 1;
                Ok(Arg::Wh)
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                if s == "x" && self.peek() == Some(&Tok::Underscore) {
                    self.pos += 1;
                    match self.peek() {
                        Some(Tok::Num(n)) => {
                            let n = *n;
                            self.pos += 1;
                            Ok(Arg::Var(n))
                        }
                        other => self.err(format!("expected variable index, found {other:?}")),
                    }
                } else if self.lambdas.contains(&s) {
                    Ok(Arg::Lambda(s))
                } else {
                    Ok(Arg::Const(s))
                }
            }
            other => self.err(format!("expected argument, found {other:?}")),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let mut parts = vec![self.ident()?];
        while self.peek() == Some(&Tok::Dot) {
            self.pos += 1;
            parts.push(self.ident()?);
        }
        self.expect(Tok::LParen)?;
        let mut args = vec![self.arg()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.arg()?);
        }
        self.expect(Tok::RParen)?;

        let predicate = parts[0].clone();
        if parts.len() == 1 {
            if args.len() != 1 {
                return self.err(format!("unary predicate `{predicate}` takes one argument"));
            }
            return Ok(Term {
                predicate,
                kind: TermKind::UnaryNoun,
                role: None,
                args,
            });
        }
        let role = Role::parse(&parts[1..].join("."))?;
        if args.len() != 2 {
            return self.err(format!("role term `{}` takes two arguments", parts.join(".")));
        }
        Ok(Term {
            predicate,
            kind: TermKind::Role,
            role: Some(role),
            args,
        })
    }
}

/// Parses one logical form. Unparseable input never yields a partial LF.
pub fn parse_lf(lf_text: &str) -> Result<LogicalForm> {
    let toks = lex(lf_text)?;
    if toks.is_empty() {
        return Err(Error::Syntax {
            position: 0,
            message: "empty logical form".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        lambdas: Vec::new(),
    };
    p.lambda_prefix()?;

    let mut terms = Vec::new();
    let mut definite_markers = BTreeSet::new();

    while p.peek() == Some(&Tok::Star) {
        p.pos += 1;
        let term = p.term()?;
        match (term.kind, term.args.as_slice()) {
            (TermKind::UnaryNoun, [Arg::Var(v)]) => {
                definite_markers.insert(*v);
            }
            _ => return p.err("definite marker must precede a unary noun over a variable"),
        }
        terms.push(term);
        p.expect(Tok::Semi)?;
    }

    // A definite-only LF ends right after the last `;`.
    if p.peek().is_some() || terms.is_empty() {
        terms.push(p.term()?);
        loop {
            match p.peek() {
                None => break,
                Some(Tok::Ident(s)) if s == "AND" => {
                    p.pos += 1;
                    terms.push(p.term()?);
                }
                Some(other) => {
                    let msg = format!("expected AND, found {other:?}");
                    return p.err(msg);
                }
            }
        }
    }

    // Unary terms over an event variable are event predicates, not nouns.
    let event_vars: BTreeSet<Arg> = terms
        .iter()
        .filter(|t| t.kind == TermKind::Role && t.role.as_ref().is_some_and(|r| !matches!(r, Role::Nmod(_))))
        .map(|t| t.args[0].clone())
        .collect();
    for t in &mut terms {
        if t.kind == TermKind::UnaryNoun && event_vars.contains(&t.args[0]) {
            t.kind = TermKind::EventPredicate;
        }
    }

    let variables = terms
        .iter()
        .flat_map(|t| t.args.iter())
        .filter_map(|a| match a {
            Arg::Var(v) => Some(*v),
            _ => None,
        })
        .collect();

    Ok(LogicalForm {
        lambdas: p.lambdas,
        terms,
        variables,
        definite_markers,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub head: usize,
    pub role: Role,
    pub dependent: usize,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.role, self.dependent)
    }
}

/// Semantic edges over sentence token positions.
///
/// `edges` is a sorted set, so conjunct order and variable naming in the
/// source LF never affect equality.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EdgeSet {
    pub edges: BTreeSet<Edge>,
    pub token_lemmas: Vec<String>,
    pub definite: Vec<bool>,
}

impl EdgeSet {
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>, tokens: &[String]) -> Self {
        EdgeSet {
            edges: edges.into_iter().collect(),
            token_lemmas: tokens.iter().map(|t| t.to_lowercase()).collect(),
            definite: vec![false; tokens.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

impl PartialEq for EdgeSet {
    fn eq(&self, other: &Self) -> bool {
        self.edges == other.edges
    }
}

impl Eq for EdgeSet {}

/// Resolves an LF argument to a sentence position. `None` for lambda variables.
pub fn resolve_arg(arg: &Arg, tokens: &[String]) -> Result<Option<usize>> {
    match arg {
        Arg::Var(i) => {
            if *i < tokens.len() {
                Ok(Some(*i))
            } else {
                Err(Error::Alignment(format!(
                    "variable x_{i} exceeds sentence length {}",
                    tokens.len()
                )))
            }
        }
        Arg::Const(name) => tokens
            .iter()
            .position(|t| t == name)
            .map(Some)
            .ok_or_else(|| Error::Alignment(format!("constant `{name}` not found in sentence"))),
        Arg::Wh => tokens
            .iter()
            .position(|t| lexical::is_wh_word(t))
            .map(Some)
            .ok_or_else(|| Error::Alignment("`?` argument but no wh-word in sentence".into())),
        Arg::Lambda(_) => Ok(None),
    }
}

/// Gold edges of an LF over `sentence_tokens`. Lambda-bound arguments of
/// primitive examples have no position and contribute no edges.
pub fn lf_to_edges(lf: &LogicalForm, sentence_tokens: &[String]) -> Result<EdgeSet> {
    let mut set = EdgeSet::from_edges([], sentence_tokens);
    for term in &lf.terms {
        match term.kind {
            TermKind::UnaryNoun | TermKind::EventPredicate => {
                if let Some(pos) = resolve_arg(&term.args[0], sentence_tokens)? {
                    set.token_lemmas[pos] = term.predicate.clone();
                    if let Arg::Var(v) = term.args[0] {
                        set.definite[pos] = lf.definite_markers.contains(&v);
                    }
                }
            }
            TermKind::Role => {
                let head = resolve_arg(&term.args[0], sentence_tokens)?;
                let dep = resolve_arg(&term.args[1], sentence_tokens)?;
                if let Some(h) = head {
                    set.token_lemmas[h] = term.predicate.clone();
                }
                if let (Some(head), Some(dependent)) = (head, dep) {
                    set.edges.insert(Edge {
                        head,
                        role: term.role.clone().expect("role term carries a role"),
                        dependent,
                    });
                }
            }
        }
    }
    Ok(set)
}

/// Equality after canonicalization: indices are kept, order and naming are not.
pub fn normalize_for_reformatted_match(a: &EdgeSet, b: &EdgeSet) -> bool {
    a.edges == b.edges
}
