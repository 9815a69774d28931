//! Dataset ingestion, encoder inputs and the synthetic corpus.

pub mod embeddings;
pub mod synth;
pub mod tsv;

pub use embeddings::{EmbeddingFile, EmbeddingStore, EmbeddingWriter, Input, Vocab};
pub use synth::{gen_synthetic, SynthConfig};
pub use tsv::{load_tsv, locate_data, DataFiles, Example, Split};
