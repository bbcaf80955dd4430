//! Which frames carry a video's emotion, and which frames summarise it.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dictionary::EmotionDictionary;
use crate::encoding::{clip_scores, frame_scores};
use crate::error::{Error, Result};
use crate::numeric::{argmax, cosine_unchecked, FrameFeatureMatrix};

/// Default length of an attributed or summary clip, in seconds.
pub const DEFAULT_CLIP_SECONDS: f64 = 2.0;
pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    /// `cos(s, h_j)` for every frame, in frame order.
    pub frame_scores: Vec<f64>,
    pub best_frame: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_clip: Option<usize>,
}

fn scores_against_sum<'a>(parts: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> Vec<f64> {
    let mut s = vec![0.0; dim];
    for p in parts.clone() {
        s.iter_mut().zip(p).for_each(|(a, v)| *a += v);
    }
    parts.map(|p| cosine_unchecked(&s, p)).collect()
}

/// Frame attribution: the frame whose score vector best matches the whole
/// video's encoding. Ties go to the earliest frame.
pub fn attribute_frames(
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
) -> Result<AttributionResult> {
    let h = frame_scores(features, dict, k)?;
    let scores = scores_against_sum(h.iter().map(|f| f.h.as_slice()), dict.len());
    Ok(AttributionResult {
        best_frame: argmax(&scores).expect("at least one frame"),
        frame_scores: scores,
        clip_scores: None,
        best_clip: None,
    })
}

/// Frame attribution plus the best of the given clips (frame ranges).
pub fn attribute_clips(
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
    clips: &[Range<usize>],
) -> Result<AttributionResult> {
    if clips.is_empty() {
        return Err(Error::invalid("no clips given"));
    }
    let mut result = attribute_frames(features, dict, k)?;
    let h_clips = clip_scores(features, dict, k, clips)?;
    // the video vector is the sum over all frames, not over the clips
    let s: Vec<f64> = {
        let h = frame_scores(features, dict, k)?;
        let mut s = vec![0.0; dict.len()];
        for f in &h {
            s.iter_mut().zip(f.h.iter()).for_each(|(a, v)| *a += v);
        }
        s
    };
    let scores: Vec<f64> = h_clips.iter().map(|c| cosine_unchecked(&s, c)).collect();
    result.best_clip = argmax(&scores);
    result.clip_scores = Some(scores);
    Ok(result)
}

/// How the representativeness term sums frame similarities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representativeness {
    /// `r_j = (1/n) sum_k cos(x_j, x_k)`, so lambda means the same for any length.
    #[default]
    Mean,
    /// The raw sum, without the `1/n`.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySelection {
    /// Selected frames, strictly increasing.
    pub indices: Vec<usize>,
    /// The same frames in the order greedy picked them.
    pub pick_order: Vec<usize>,
    pub lambda: f64,
    pub objective: f64,
    pub budget: usize,
    pub representativeness: Representativeness,
}

/// Per-frame representativeness `r_j`.
pub fn representativeness(features: &FrameFeatureMatrix, mode: Representativeness) -> Vec<f64> {
    let n = features.rows();
    let scale = match mode {
        Representativeness::Mean => 1.0 / n as f64,
        Representativeness::Sum => 1.0,
    };
    (0..n)
        .map(|j| {
            let xj = features.row(j);
            features.row_iter().map(|xk| cosine_unchecked(xj, xk)).sum::<f64>() * scale
        })
        .collect()
}

/// `max_{j in S} a_j + lambda * sum_{j in S} r_j`.
pub fn summary_objective(a: &[f64], r: &[f64], lambda: f64, selection: &[usize]) -> f64 {
    let first = selection
        .iter()
        .map(|&j| a[j])
        .fold(f64::NEG_INFINITY, f64::max);
    first + lambda * selection.iter().map(|&j| r[j]).sum::<f64>()
}

/// Greedy marginal-gain selection over precomputed attribution scores `a`
/// and representativeness `r`. Returns frames in pick order; equal gains go
/// to the lower index.
pub fn greedy_select(a: &[f64], r: &[f64], lambda: f64, budget: usize) -> Result<Vec<usize>> {
    let n = a.len();
    if r.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r.len(),
        });
    }
    if budget == 0 || budget > n {
        return Err(Error::invalid(format!(
            "summary budget {budget} must lie in [1, {n}]"
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda must be finite and non-negative"));
    }
    let mut taken = vec![false; n];
    let mut picks = Vec::with_capacity(budget);
    let mut current_max = f64::NEG_INFINITY;
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| !taken[j]) {
            let lift = if current_max.is_finite() {
                (a[j] - current_max).max(0.0)
            } else {
                a[j]
            };
            let gain = lift + lambda * r[j];
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        let (j, _) = best.expect("budget <= n leaves a candidate");
        taken[j] = true;
        current_max = current_max.max(a[j]);
        picks.push(j);
    }
    Ok(picks)
}

/// Emotion-oriented key-frame summary of `budget` frames.
pub fn summarize(
    features: &FrameFeatureMatrix,
    dict: &EmotionDictionary,
    k: usize,
    lambda: f64,
    budget: usize,
    mode: Representativeness,
) -> Result<SummarySelection> {
    if budget > features.rows() {
        return Err(Error::invalid(format!(
            "summary budget {budget} exceeds {} frames",
            features.rows()
        )));
    }
    let a = attribute_frames(features, dict, k)?.frame_scores;
    let r = representativeness(features, mode);
    let pick_order = greedy_select(&a, &r, lambda, budget)?;
    let mut indices = pick_order.clone();
    indices.sort_unstable();
    Ok(SummarySelection {
        objective: summary_objective(&a, &r, lambda, &indices),
        indices,
        pick_order,
        lambda,
        budget,
        representativeness: mode,
    })
}

/// Summary length rule: 6 s for videos over a minute, else 10% of the video.
pub fn summary_budget_seconds(duration: f64) -> f64 {
    if duration > 60.0 {
        6.0
    } else {
        0.1 * duration
    }
}

fn covered(ranges: &[(f64, f64)]) -> f64 {
    ranges.iter().map(|(a, b)| b - a).sum()
}

fn merge(mut ranges: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    ranges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(ranges.len());
    for (a, b) in ranges {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Turns key frames into merged time ranges (seconds).
///
/// Each key frame sits at `index / fps` and expands to a centred clip of
/// `clip_seconds`, clamped to the video. Clips are added in greedy pick
/// order; the last one is shortened so the total never exceeds
/// [`summary_budget_seconds`].
pub fn select_summary_clips(
    selection: &SummarySelection,
    clip_seconds: f64,
    fps: f64,
    duration: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(clip_seconds > 0.0 && fps > 0.0 && duration > 0.0) {
        return Err(Error::invalid(
            "clip length, frame rate and duration must be positive",
        ));
    }
    let budget = summary_budget_seconds(duration);
    let mut ranges: Vec<(f64, f64)> = Vec::new();
    for &j in &selection.pick_order {
        let remaining = budget - covered(&ranges);
        if remaining <= 1e-12 {
            break;
        }
        let t = (j as f64 / fps).min(duration);
        let half = clip_seconds.min(remaining) / 2.0;
        let clip = ((t - half).max(0.0), (t + half).min(duration));
        if clip.1 > clip.0 {
            let mut next = ranges.clone();
            next.push(clip);
            ranges = merge(next);
        }
    }
    Ok(ranges)
}
