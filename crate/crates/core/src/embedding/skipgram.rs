//! Skip-gram word vectors trained with negative sampling.
//!
//! Meant for small corpora (tests, self-contained demos). Real deployments load
//! externally trained vectors through [`crate::io::load_embeddings_text`].

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::numeric::{dot, DenseMatrix};

/// A tokenised corpus plus the training schedule applied to it.
#[derive(Debug, Clone)]
pub struct CorpusStream {
    pub tokens: Vec<String>,
    /// Context half-width `c`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly towards zero.
    pub learning_rate: f64,
    pub seed: u64,
}

impl CorpusStream {
    pub fn new(tokens: Vec<String>) -> Self {
        CorpusStream {
            tokens,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }

    /// Whitespace tokenisation; tokens are lowercased to match label lookup.
    pub fn from_text(text: &str) -> Self {
        CorpusStream::new(text.split_whitespace().map(str::to_lowercase).collect())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(CorpusStream::from_text(&text))
    }
}

/// Trained input (word) and output (context) vectors.
#[derive(Debug, Clone)]
pub struct SkipGramModel {
    pub space: EmbeddingSpace,
    pub context: DenseMatrix,
    /// Mean negative-sampling loss per (center, context) pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    noise: Vec<f64>,
}

fn log_sigmoid(x: f64) -> f64 {
    // -softplus(-x), stable for large |x|
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) struct Trainer {
    pub(crate) input: DenseMatrix,
    pub(crate) output: DenseMatrix,
    grad: Vec<f64>,
}

impl Trainer {
    fn new(vocab: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let half = 0.5 / dim as f64;
        let data = (0..vocab * dim).map(|_| rng.random_range(-half..half)).collect();
        Trainer {
            input: DenseMatrix::from_trusted(vocab, dim, data),
            output: DenseMatrix::zeros(vocab, dim),
            grad: vec![0.0; dim],
        }
    }

    /// One SGD update for a (center, context) pair. Touches only the center's
    /// input row and the output rows of `context` and `negatives`.
    pub(crate) fn step(
        &mut self,
        center: usize,
        context: usize,
        negatives: &[usize],
        lr: f64,
    ) -> Result<f64> {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let targets = std::iter::once((context, 1.0)).chain(
            negatives
                .iter()
                .filter(|&&n| n != context)
                .map(|&n| (n, 0.0)),
        );
        for (target, label) in targets {
            let score = dot(self.input.row(center), self.output.row(target));
            loss -= if label > 0.0 {
                log_sigmoid(score)
            } else {
                log_sigmoid(-score)
            };
            let g = (label - sigmoid(score)) * lr;
            if !g.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite skip-gram gradient at center {center}"
                )));
            }
            let v = self.input.row(center);
            for (acc, u) in self.grad.iter_mut().zip(self.output.row(target)) {
                *acc += g * u;
            }
            let v: Vec<f64> = v.to_vec();
            for (u, x) in self.output.row_mut(target).iter_mut().zip(&v) {
                *u += g * x;
            }
        }
        for (x, g) in self.input.row_mut(center).iter_mut().zip(&self.grad) {
            *x += g;
        }
        Ok(loss)
    }
}

/// Trains `dim`-dimensional skip-gram vectors on `corpus`.
pub fn train_skipgram(corpus: &CorpusStream, dim: usize) -> Result<SkipGramModel> {
    if corpus.tokens.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    if dim < 2 {
        return Err(Error::invalid("embedding dimension must be at least 2"));
    }
    if corpus.window == 0 || corpus.epochs == 0 {
        return Err(Error::invalid("window and epochs must be positive"));
    }
    if corpus.tokens.len() < 2 * corpus.window + 1 {
        return Err(Error::invalid(format!(
            "corpus of {} tokens is shorter than one full window (2c+1 = {})",
            corpus.tokens.len(),
            2 * corpus.window + 1
        )));
    }
    if !(corpus.learning_rate > 0.0 && corpus.learning_rate.is_finite()) {
        return Err(Error::invalid("learning rate must be positive"));
    }

    let mut vocab: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut counts: Vec<f64> = Vec::new();
    let ids: Vec<usize> = corpus
        .tokens
        .iter()
        .map(|t| {
            let id = *index.entry(t.as_str()).or_insert_with(|| {
                vocab.push(t.clone());
                counts.push(0.0);
                vocab.len() - 1
            });
            counts[id] += 1.0;
            id
        })
        .collect();
    if vocab.len() < 2 {
        return Err(Error::invalid("vocabulary needs at least two distinct tokens"));
    }
    let noise: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let sampler = WeightedIndex::new(&noise).map_err(|e| Error::Numerical(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(corpus.seed);
    let mut trainer = Trainer::new(vocab.len(), dim, &mut rng);
    let total = (corpus.epochs * ids.len()) as f64;
    let mut negs = vec![0usize; corpus.negatives];
    let mut epoch_losses = Vec::with_capacity(corpus.epochs);

    for epoch in 0..corpus.epochs {
        let mut loss = 0.0;
        let mut pairs = 0usize;
        for (t, &center) in ids.iter().enumerate() {
            let progress = (epoch * ids.len() + t) as f64 / total;
            let lr = corpus.learning_rate * (1.0 - progress).max(1e-4);
            let lo = t.saturating_sub(corpus.window);
            let hi = (t + corpus.window).min(ids.len() - 1);
            for pos in lo..=hi {
                if pos == t {
                    continue;
                }
                negs.iter_mut().for_each(|n| *n = sampler.sample(&mut rng));
                loss += trainer.step(center, ids[pos], &negs, lr)?;
                pairs += 1;
            }
        }
        epoch_losses.push(loss / pairs.max(1) as f64);
    }

    let space = EmbeddingSpace::new(vocab, trainer.input)?;
    Ok(SkipGramModel {
        space,
        context: trainer.output,
        epoch_losses,
        noise,
    })
}

impl SkipGramModel {
    /// Mean negative-sampling loss of the current parameters on `tokens`, without
    /// updating anything. Out-of-vocabulary tokens are skipped.
    pub fn evaluate_loss(&self, tokens: &[String], window: usize, negatives: usize, seed: u64) -> f64 {
        let ids: Vec<usize> = tokens
            .iter()
            .filter_map(|t| self.space.index_of(t))
            .collect();
        let sampler = WeightedIndex::new(&self.noise).expect("noise weights validated at training");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut loss = 0.0;
        let mut pairs = 0usize;
        for (t, &center) in ids.iter().enumerate() {
            let lo = t.saturating_sub(window);
            let hi = (t + window).min(ids.len().saturating_sub(1));
            for pos in lo..=hi {
                if pos == t {
                    continue;
                }
                let context = ids[pos];
                let v = self.space.row(center);
                loss -= log_sigmoid(dot(v, self.context.row(context)));
                for _ in 0..negatives {
                    let n = sampler.sample(&mut rng);
                    if n != context {
                        loss -= log_sigmoid(-dot(v, self.context.row(n)));
                    }
                }
                pairs += 1;
            }
        }
        loss / pairs.max(1) as f64
    }
}
