//! The simplified CCG inventory: directional categories and the declarative type table.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lf::Role;

pub type TypeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Atom {
    Np,
    S,
    Pp,
    SGap,
    Wh,
    RcThat,
    Empty,
}

impl Atom {
    fn parse(s: &str) -> Option<Atom> {
        Some(match s {
            "NP" => Atom::Np,
            "S" => Atom::S,
            "PP" => Atom::Pp,
            "S_GAP" => Atom::SGap,
            "WH" => Atom::Wh,
            "RC_THAT" => Atom::RcThat,
            "∅" | "EMPTY" => Atom::Empty,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Atom::Np => "NP",
            Atom::S => "S",
            Atom::Pp => "PP",
            Atom::SGap => "S_GAP",
            Atom::Wh => "WH",
            Atom::RcThat => "RC_THAT",
            Atom::Empty => "∅",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Slash {
    /// `X/Y`: seeks `Y` to the right.
    Forward,
    /// `X\Y`: seeks `Y` to the left.
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Atom(Atom),
    Fwd(Box<Category>, Box<Category>),
    Bwd(Box<Category>, Box<Category>),
}

impl Category {
    pub fn np() -> Category {
        Category::Atom(Atom::Np)
    }

    pub fn s() -> Category {
        Category::Atom(Atom::S)
    }

    pub fn fwd(result: Category, arg: Category) -> Category {
        Category::Fwd(Box::new(result), Box::new(arg))
    }

    pub fn bwd(result: Category, arg: Category) -> Category {
        Category::Bwd(Box::new(result), Box::new(arg))
    }

    /// `S\NP`
    pub fn vp() -> Category {
        Category::bwd(Category::s(), Category::np())
    }

    /// `NP\NP`
    pub fn np_modifier() -> Category {
        Category::bwd(Category::np(), Category::np())
    }

    pub fn is_atom(&self, atom: Atom) -> bool {
        matches!(self, Category::Atom(a) if *a == atom)
    }

    pub fn slash(&self) -> Option<Slash> {
        match self {
            Category::Atom(_) => None,
            Category::Fwd(..) => Some(Slash::Forward),
            Category::Bwd(..) => Some(Slash::Backward),
        }
    }

    /// Number of forward slashes on the spine before the first backward one.
    pub fn forward_arity(&self) -> usize {
        match self {
            Category::Fwd(r, _) => 1 + r.forward_arity(),
            _ => 0,
        }
    }

    pub fn parse(text: &str) -> Result<Category> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let cat = parse_expr(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::TypeTable(format!("trailing input in category `{text}`")));
        }
        Ok(cat)
    }

    fn fmt_inner(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match self {
            Category::Atom(a) => f.write_str(a.name()),
            Category::Fwd(r, a) | Category::Bwd(r, a) => {
                let slash = if matches!(self, Category::Fwd(..)) { '/' } else { '\\' };
                if nested {
                    f.write_str("(")?;
                }
                r.fmt_inner(f, true)?;
                write!(f, "{slash}")?;
                a.fmt_inner(f, true)?;
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_primary(chars: &[char], pos: &mut usize) -> Result<Category> {
    if chars.get(*pos) == Some(&'(') {
        *pos += 1;
        let inner = parse_expr(chars, pos)?;
        if chars.get(*pos) != Some(&')') {
            return Err(Error::TypeTable("unbalanced parenthesis in category".into()));
        }
        *pos += 1;
        return Ok(inner);
    }
    let start = *pos;
    while *pos < chars.len() && !matches!(chars[*pos], '(' | ')' | '/' | '\\') {
        *pos += 1;
    }
    let name: String = chars[start..*pos].iter().collect();
    Atom::parse(&name)
        .map(Category::Atom)
        .ok_or_else(|| Error::TypeTable(format!("unknown atomic category `{name}`")))
}

fn parse_expr(chars: &[char], pos: &mut usize) -> Result<Category> {
    let mut left = parse_primary(chars, pos)?;
    while let Some(&c) = chars.get(*pos) {
        match c {
            '/' => {
                *pos += 1;
                left = Category::fwd(left, parse_primary(chars, pos)?);
            }
            '\\' => {
                *pos += 1;
                left = Category::bwd(left, parse_primary(chars, pos)?);
            }
            _ => break,
        }
    }
    Ok(left)
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_inner(f, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Voice {
    Active,
    Passive,
}

/// Argument frame of a verbal type. `roles` lists roles in the order the
/// functor consumes arguments; the last one is filled by backward application.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub voice: Voice,
    pub roles: Vec<Role>,
    pub gap: Option<Role>,
}

impl Frame {
    pub fn subject(&self) -> &Role {
        self.roles.last().expect("frames have at least one role")
    }

    pub fn forward_roles(&self) -> &[Role] {
        &self.roles[..self.roles.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lexical {
    Plain,
    Verb(Frame),
    Preposition,
}

#[derive(Debug, Clone)]
pub struct CcgType {
    pub id: TypeId,
    pub name: String,
    pub category: Category,
    pub lexical: Lexical,
}

pub const EXTENSION_TYPES: [&str; 4] = ["RC_THAT", "TV_GAP", "S_GAP", "WH"];

impl CcgType {
    pub fn is_extension(&self) -> bool {
        EXTENSION_TYPES.contains(&self.name.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.category.is_atom(Atom::Empty)
    }

    pub fn frame(&self) -> Option<&Frame> {
        match &self.lexical {
            Lexical::Verb(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TypeTable {
    types: Vec<CcgType>,
    by_name: HashMap<String, TypeId>,
    hash: [u8; 32],
}

pub const DEFAULT_TYPE_TABLE: &str = include_str!("../../data/type_table.tsv");

fn parse_frame(text: &str, line: usize) -> Result<Lexical> {
    let err = |m: String| Error::TypeTable(format!("line {line}: {m}"));
    match text {
        "-" => return Ok(Lexical::Plain),
        "nmod" => return Ok(Lexical::Preposition),
        _ => {}
    }
    let (voice, rest) = text.split_once(':').ok_or_else(|| err(format!("bad frame `{text}`")))?;
    let voice = match voice {
        "active" => Voice::Active,
        "passive" => Voice::Passive,
        v => return Err(err(format!("bad voice `{v}`"))),
    };
    let (roles, gap) = match rest.split_once(";gap=") {
        Some((r, g)) => (r, Some(Role::parse(g)?)),
        None => (rest, None),
    };
    let roles = roles.split(',').map(Role::parse).collect::<Result<Vec<_>>>()?;
    if roles.is_empty() {
        return Err(err("frame without roles".into()));
    }
    Ok(Lexical::Verb(Frame { voice, roles, gap }))
}

impl TypeTable {
    pub fn builtin() -> TypeTable {
        TypeTable::parse(DEFAULT_TYPE_TABLE).expect("bundled type table is valid")
    }

    pub fn load(path: &Path) -> Result<TypeTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TypeTable::parse(&text)
    }

    /// Parses `id<TAB>name<TAB>structure[<TAB>frame]` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<TypeTable> {
        let mut types: Vec<CcgType> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 {
                return Err(Error::TypeTable(format!("line {}: expected at least 3 columns", i + 1)));
            }
            let id: TypeId = cols[0]
                .parse()
                .map_err(|_| Error::TypeTable(format!("line {}: bad id `{}`", i + 1, cols[0])))?;
            if id != types.len() {
                return Err(Error::TypeTable(format!(
                    "line {}: ids must be dense and ascending",
                    i + 1
                )));
            }
            let category = Category::parse(cols[2])?;
            let lexical = match cols.get(3) {
                Some(f) => parse_frame(f, i + 1)?,
                None => Lexical::Plain,
            };
            if let Lexical::Verb(frame) = &lexical {
                let expected = frame.roles.len() - 1;
                if category.forward_arity() != expected {
                    return Err(Error::TypeTable(format!(
                        "line {}: {} has {} forward slots but {} forward roles",
                        i + 1,
                        cols[1],
                        category.forward_arity(),
                        expected
                    )));
                }
            }
            types.push(CcgType {
                id,
                name: cols[1].to_string(),
                category,
                lexical,
            });
        }
        let by_name: HashMap<String, TypeId> = types.iter().map(|t| (t.name.clone(), t.id)).collect();
        if by_name.len() != types.len() {
            return Err(Error::TypeTable("duplicate type names".into()));
        }
        for required in ["NP", "S", "PP", "PREP", "TO", "WH", "RC_THAT", "S_GAP", "EMPTY"] {
            if !by_name.contains_key(required) {
                return Err(Error::TypeTable(format!("missing required type {required}")));
            }
        }
        let hash: [u8; 32] = Sha256::digest(text.as_bytes()).into();
        Ok(TypeTable { types, by_name, hash })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, id: TypeId) -> &CcgType {
        &self.types[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CcgType> {
        self.types.iter()
    }

    pub fn id(&self, name: &str) -> TypeId {
        self.by_name[name]
    }

    pub fn try_id(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: TypeId) -> &str {
        &self.types[id].name
    }

    pub fn empty(&self) -> TypeId {
        self.id("EMPTY")
    }

    pub fn hash(&self) -> [u8; 32] {
        self.hash
    }

    /// First 8 bytes of the table digest, as stored in checkpoints.
    pub fn short_hash(&self) -> u64 {
        u64::from_le_bytes(self.hash[..8].try_into().unwrap())
    }

    pub fn hash_hex(&self) -> String {
        self.hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// The non-verbal type whose category is `cat`, used to name derivation roots.
    pub fn id_of_category(&self, cat: &Category) -> Option<TypeId> {
        self.types
            .iter()
            .find(|t| &t.category == cat && t.frame().is_none() && t.lexical != Lexical::Preposition)
            .or_else(|| self.types.iter().find(|t| &t.category == cat))
            .map(|t| t.id)
    }

    pub fn names(&self, ids: &[TypeId]) -> Vec<String> {
        ids.iter().map(|&i| self.name(i).to_string()).collect()
    }

    pub fn verb_types(&self) -> impl Iterator<Item = (&CcgType, &Frame)> {
        self.types.iter().filter_map(|t| t.frame().map(|f| (t, f)))
    }
}
