//! Supervision targets: initial lexical types and head-surviving final types.

use serde::Serialize;

use crate::ccg::cky::{cky_parse, Derivation};
use crate::ccg::derive::derive_types;
use crate::ccg::edges::extract_edges;
use crate::ccg::strip::FunctionWords;
use crate::ccg::types::{Category, TypeId, TypeTable};
use crate::error::{Error, Result};
use crate::lexical::tokenize;
use crate::lf::{lf_to_edges, parse_lf, EdgeSet};

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub tokens: Vec<String>,
    pub content_tokens: Vec<String>,
    pub alignment: Vec<usize>,
    pub initial_types: Vec<TypeId>,
    pub final_types: Vec<TypeId>,
    pub derivation: Derivation,
    #[serde(skip)]
    pub gold_edges: EdgeSet,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.initial_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial_types.is_empty()
    }

    pub fn head(&self) -> usize {
        self.derivation.root_node().head
    }
}

/// Derives types, parses and computes the head-surviving final sequence.
#[derive(Debug, Clone)]
pub struct Supervisor {
    pub table: TypeTable,
    pub function_words: FunctionWords,
}

impl Default for Supervisor {
    fn default() -> Self {
        Supervisor {
            table: TypeTable::builtin(),
            function_words: FunctionWords::default(),
        }
    }
}

impl Supervisor {
    pub fn new(table: TypeTable, function_words: FunctionWords) -> Self {
        Supervisor { table, function_words }
    }

    /// `lf_text` of a bare proper name (the benchmark's name primitives) is the name itself.
    pub fn build_trajectory(&self, sentence: &str, lf_text: &str) -> Result<Trajectory> {
        let tokens = tokenize(sentence);
        let stripped = self.function_words.strip(&tokens);
        if stripped.content.is_empty() {
            return Err(Error::NoParse(String::new()));
        }
        let (initial_types, gold_edges) = if stripped.content.len() == 1 && lf_text.trim() == stripped.content[0] {
            (vec![self.table.id("NP")], EdgeSet::from_edges([], &tokens))
        } else {
            let lf = parse_lf(lf_text)?;
            let types = derive_types(&lf, &tokens, &stripped, &self.function_words, &self.table)?;
            (types, lf_to_edges(&lf, &tokens)?)
        };
        let derivation = self.parse(&initial_types)?;
        let final_types = final_types(&derivation, &self.table)?;
        Ok(Trajectory {
            tokens,
            content_tokens: stripped.content,
            alignment: stripped.alignment,
            initial_types,
            final_types,
            derivation,
            gold_edges,
        })
    }

    /// Parses a full type sequence; multi-token sequences must derive `S`.
    pub fn parse(&self, types: &[TypeId]) -> Result<Derivation> {
        let d = cky_parse(types, &self.table)?;
        if types.len() > 1 && d.root_node().category != Category::s() {
            return Err(Error::NoParse(self.table.names(types).join(" ")));
        }
        Ok(d)
    }

    /// Parses `types` and extracts edges over the trajectory's sentence.
    pub fn edges_for(&self, types: &[TypeId], traj: &Trajectory) -> Result<EdgeSet> {
        let d = self.parse(types)?;
        extract_edges(&d, &self.table, &traj.tokens, &traj.alignment)
    }
}

/// Root type at the root's head position, EMPTY elsewhere.
pub fn final_types(d: &Derivation, table: &TypeTable) -> Result<Vec<TypeId>> {
    let root = d.root_node();
    let root_type = if d.len() == 1 {
        d.leaf_types[0]
    } else {
        table
            .id_of_category(&root.category)
            .ok_or_else(|| Error::TypeTable(format!("no type for root category {}", root.category)))?
    };
    let mut out = vec![table.empty(); d.len()];
    out[root.head] = root_type;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn np_iv_final() {
        let t = TypeTable::builtin();
        let d = cky_parse(&[t.id("NP"), t.id("IV")], &t).unwrap();
        assert_eq!(t.names(&final_types(&d, &t).unwrap()), ["EMPTY", "S"]);
    }

    #[test]
    fn primitive_root_is_leaf() {
        let sup = Supervisor::default();
        let tr = sup.build_trajectory("shark", "LAMBDA a . shark ( a )").unwrap();
        assert_eq!(sup.table.names(&tr.final_types), ["NP"]);
        let tr = sup.build_trajectory("Emma", "Emma").unwrap();
        assert_eq!(sup.table.names(&tr.final_types), ["NP"]);
    }

    #[test]
    fn one_surviving_head() {
        let sup = Supervisor::default();
        let tr = sup
            .build_trajectory(
                "Who chased the cat ?",
                "* cat ( x _ 3 ) ; chase . agent ( x _ 1 , ? ) AND chase . theme ( x _ 1 , x _ 3 )",
            )
            .unwrap();
        let empty = sup.table.empty();
        let live: Vec<_> = tr.final_types.iter().filter(|&&x| x != empty).collect();
        assert_eq!(live.len(), 1);
        assert_eq!(*live[0], sup.table.id("S"));
        assert_eq!(tr.head(), 0);
        let edges = extract_edges(&tr.derivation, &sup.table, &tr.tokens, &tr.alignment).unwrap();
        assert_eq!(edges, tr.gold_edges);
    }
}
