//! Image transfer encoding of a frame bag.
//!
//! Each frame votes for its `K` most similar dictionary centers, contributing
//! its full cosine to every selected bin. The video vector is the sum of these
//! per-frame score vectors.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::EmotionDictionary;
use crate::error::{Error, Result};
use crate::numeric::{top_k, DenseVector, FrameFeatureMatrix};

/// `ceil(0.1 * D)`, at least 1.
pub fn default_neighbors(clusters: usize) -> usize {
    clusters.div_ceil(10).max(1)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeOptions {
    /// Divide `s` by its L1 norm (bags differ in length).
    pub normalize_l1: bool,
    /// Replace negative components of `s` by zero.
    pub clamp_negative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedVideo {
    pub s: DenseVector,
    /// Neighbours per frame used to build `s`.
    pub neighbors: usize,
    pub source_video_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameScoreVector {
    pub h: DenseVector,
    pub frame_index: usize,
}

fn check_inputs(features: &FrameFeatureMatrix, dict: &EmotionDictionary, k: usize) -> Result<()> {
    if features.cols() != dict.dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.dim(),
            found: features.cols(),
        });
    }
    if features.rows() == 0 {
        return Err(Error::invalid("video has no frames"));
    }
    if k == 0 || k > dict.len() {
        return Err(Error::invalid(format!(
            "K = {k} must lie in [1, D = {}]",
            dict.len()
        )));
    }
    Ok(())
}

/// Sparse `(bin, cosine)` votes of every frame, in frame order.
fn frame_votes(
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
) -> Vec<Vec<(usize, f64)>> {
    (0..features.rows())
        .into_par_iter()
        .map(|j| top_k(&dict.similarities(features.row(j)), k))
        .collect()
}

fn accumulate<'a>(dim: usize, votes: impl Iterator<Item = &'a Vec<(usize, f64)>>) -> Vec<f64> {
    let mut s = vec![0.0; dim];
    for frame in votes {
        for &(d, c) in frame {
            s[d] += c;
        }
    }
    s
}

/// Bag-level vector `s_d = sum_j nu_{j,d} cos(x_j, phi_d)`.
pub fn encode_video(
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
) -> Result<EncodedVideo> {
    check_inputs(features, dict, k)?;
    let votes = frame_votes(features, dict, k);
    Ok(EncodedVideo {
        s: DenseVector::from_trusted(accumulate(dict.len(), votes.iter())),
        neighbors: k,
        source_video_id: String::new(),
    })
}

/// Encodes a video and applies the optional post-processing flags.
pub fn encode_with_options(
    video_id: &str,
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
    options: EncodeOptions,
) -> Result<EncodedVideo> {
    let mut enc = encode_video(features, dict, k)?;
    enc.source_video_id = video_id.to_string();
    let mut s = enc.s.into_inner();
    apply_options(&mut s, options);
    enc.s = DenseVector::from_trusted(s);
    Ok(enc)
}

pub(crate) fn apply_options(s: &mut [f64], options: EncodeOptions) {
    if options.clamp_negative {
        s.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    if options.normalize_l1 {
        let n = crate::numeric::l1_norm(s);
        if n > 0.0 {
            s.iter_mut().for_each(|v| *v /= n);
        }
    }
}

/// Per-frame similarity score vectors `h_j`; they sum to the video encoding.
pub fn frame_scores(
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
) -> Result<Vec<FrameScoreVector>> {
    check_inputs(features, dict, k)?;
    Ok(frame_votes(features, dict, k)
        .iter()
        .enumerate()
        .map(|(frame_index, v)| FrameScoreVector {
            h: DenseVector::from_trusted(accumulate(dict.len(), std::iter::once(v))),
            frame_index,
        })
        .collect())
}

/// Score vector of each clip: the sum of its frames' score vectors.
pub fn clip_scores(
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
    clips: &[Range<usize>],
) -> Result<Vec<DenseVector>> {
    check_inputs(features, dict, k)?;
    for c in clips {
        if c.start >= c.end || c.end > features.rows() {
            return Err(Error::invalid(format!(
                "clip {}..{} is empty or exceeds {} frames",
                c.start,
                c.end,
                features.rows()
            )));
        }
    }
    let votes = frame_votes(features, dict, k);
    Ok(clips
        .iter()
        .map(|c| DenseVector::from_trusted(accumulate(dict.len(), votes[c.clone()].iter())))
        .collect())
}

/// Average-pooled frame features, the AvgP baseline representation.
pub fn encode_avgp(features: &FrameFeatureMatrix) -> Result<DenseVector> {
    if features.rows() == 0 {
        return Err(Error::invalid("video has no frames"));
    }
    let mut mean = vec![0.0; features.cols()];
    for row in features.row_iter() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    let n = features.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    DenseVector::new(mean)
}
