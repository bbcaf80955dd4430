//! Emotion recognition, zero-shot transfer and summarization for videos
//! represented as sequences of frame features.

pub mod attribution;
pub mod dictionary;
pub mod embedding;
pub mod encoding;
pub mod error;
pub mod io;
pub mod numeric;
pub mod pipeline;
pub mod svm;
pub mod synth;
pub mod zsl;

pub use error::{Error, Result};
