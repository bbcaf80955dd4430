//! Word-vector spaces for emotion class names.

mod skipgram;
mod space;

pub use skipgram::{train_skipgram, CorpusStream, SkipGramModel};
pub use space::{normalize_label, EmbeddingSpace};
