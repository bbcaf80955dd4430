use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, DenseVector};

/// Vocabulary with one `K`-dimensional vector per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    vectors: DenseMatrix,
}

impl EmbeddingSpace {
    pub fn new(vocab: Vec<String>, vectors: DenseMatrix) -> Result<Self> {
        if vocab.len() != vectors.rows() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: vectors.rows(),
            });
        }
        if vectors.cols() < 2 {
            return Err(Error::invalid("embedding dimension must be at least 2"));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, tok) in vocab.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("invalid token {tok:?}")));
            }
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate token `{tok}`")));
            }
        }
        Ok(EmbeddingSpace {
            vocab,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    /// Vector for an emotion label. Multi-word labels map to the mean of their tokens.
    pub fn lookup(&self, label: &str) -> Result<DenseVector> {
        let tokens = normalize_label(label);
        if tokens.is_empty() {
            return Err(Error::invalid(format!("label {label:?} has no tokens")));
        }
        let mut acc = vec![0.0; self.dim()];
        for tok in &tokens {
            let row = self.vector(tok).ok_or_else(|| Error::OutOfVocabulary {
                token: tok.clone(),
                suggestions: self.suggest(tok, 3),
            })?;
            acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        }
        let n = tokens.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(DenseVector::from_trusted(acc))
    }

    /// Closest vocabulary entries by edit distance, ties in vocabulary order.
    fn suggest(&self, token: &str, n: usize) -> Vec<String> {
        let mut scored: Vec<(usize, usize)> = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, v)| (strsim::levenshtein(token, v), i))
            .collect();
        scored.sort_unstable();
        scored
            .into_iter()
            .take(n)
            .map(|(_, i)| self.vocab[i].clone())
            .collect()
    }
}

/// Lowercases, trims and splits a class name on whitespace and hyphens.
pub fn normalize_label(label: &str) -> Vec<String> {
    label
        .trim()
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
