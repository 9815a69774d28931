pub mod analysis;
pub mod ccg;
pub mod cli;
pub mod data;
pub mod desk;
pub mod error;
pub mod eval;
pub mod lexical;
pub mod lf;
pub mod neural;
pub mod training;

pub use error::{Error, Result};
