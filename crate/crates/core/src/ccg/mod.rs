//! Simplified CCG: type table, stripping, type derivation, CKY and edge extraction.

pub mod cky;
pub mod derive;
pub mod edges;
pub mod strip;
pub mod trajectory;
pub mod types;

pub use cky::{cky_parse, combine, Derivation, Node, Rule, Side};
pub use derive::derive_types;
pub use edges::extract_edges;
pub use strip::{strip_function_words, FunctionWords, Stripped};
pub use trajectory::{final_types, Supervisor, Trajectory};
pub use types::{Category, CcgType, TypeId, TypeTable};
