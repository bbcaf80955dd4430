//! Unseen-class prototypes, one-step transductive smoothing and prediction.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{cosine_unchecked, top_k, DenseVector};

/// The word vector of an unseen class, as looked up in the embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPrototype {
    pub class: String,
    pub vector: DenseVector,
}

impl RawPrototype {
    pub fn new(class: impl Into<String>, vector: DenseVector) -> Self {
        RawPrototype {
            class: class.into(),
            vector,
        }
    }
}

/// A prototype after exactly one smoothing pass.
///
/// Only [`t1s_smooth`] builds these from raw vectors, and it does not accept
/// already-smoothed prototypes, so a second pass cannot happen by accident.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassPrototype {
    class: String,
    raw: DenseVector,
    smoothed: DenseVector,
    k_t1s: usize,
}

impl ClassPrototype {
    pub fn class(&self) -> &str {
        &self.class
    }

    pub fn raw(&self) -> &DenseVector {
        &self.raw
    }

    pub fn smoothed(&self) -> &DenseVector {
        &self.smoothed
    }

    pub fn k_t1s(&self) -> usize {
        self.k_t1s
    }
}

/// `max(3, ceil(n / 10))`, capped at the number of test videos.
pub fn default_t1s_neighbors(n_test: usize) -> usize {
    n_test.div_ceil(10).max(3).min(n_test)
}

fn check_dims(dim: usize, vectors: impl IntoIterator<Item = usize>) -> Result<()> {
    for found in vectors {
        if found != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found,
            });
        }
    }
    Ok(())
}

fn smooth_one(raw: &[f64], projections: &[DenseVector], k: usize) -> DenseVector {
    let sims: Vec<f64> = projections
        .iter()
        .map(|p| cosine_unchecked(raw, p))
        .collect();
    let mut mean = vec![0.0; raw.len()];
    for (i, _) in top_k(&sims, k) {
        mean.iter_mut()
            .zip(projections[i].iter())
            .for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    DenseVector::from_trusted(mean)
}

/// Replaces each raw prototype by the mean of its `k` nearest projected test
/// vectors (cosine). Neighbour pools of different classes may overlap.
pub fn t1s_smooth(
    prototypes: &[RawPrototype],
    projections: &[DenseVector],
    k: usize,
) -> Result<Vec<ClassPrototype>> {
    if prototypes.is_empty() {
        return Err(Error::invalid("no unseen-class prototypes to smooth"));
    }
    if k == 0 {
        return Err(Error::invalid("K_t1s must be at least 1"));
    }
    if k > projections.len() {
        return Err(Error::invalid(format!(
            "K_t1s = {k} exceeds the {} test videos",
            projections.len()
        )));
    }
    let dim = prototypes[0].vector.len();
    check_dims(dim, prototypes.iter().map(|p| p.vector.len()))?;
    check_dims(dim, projections.iter().map(|p| p.len()))?;
    Ok(prototypes
        .iter()
        .map(|p| ClassPrototype {
            class: p.class.clone(),
            raw: p.vector.clone(),
            smoothed: smooth_one(&p.vector, projections, k),
            k_t1s: k,
        })
        .collect())
}

/// A second smoothing pass. Exists only so tests can show it differs from
/// the single pass the pipeline performs.
#[cfg(test)]
pub(crate) fn resmooth_for_tests(
    prototypes: &[ClassPrototype],
    projections: &[DenseVector],
    k: usize,
) -> Vec<ClassPrototype> {
    prototypes
        .iter()
        .map(|p| ClassPrototype {
            smoothed: smooth_one(&p.smoothed, projections, k),
            ..p.clone()
        })
        .collect()
}

const TIE_EPS: f64 = 1e-12;

fn nearest<'a>(
    candidates: impl Iterator<Item = (&'a str, &'a [f64])>,
    projected: &[f64],
) -> Result<String> {
    let mut best: Option<(&str, f64)> = None;
    for (class, v) in candidates {
        if v.len() != projected.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                found: projected.len(),
            });
        }
        let s = cosine_unchecked(projected, v);
        // cosines this close are rounding noise; treat them as ties
        best = match best {
            Some((c, b)) if b > s + TIE_EPS || ((b - s).abs() <= TIE_EPS && c <= class) => {
                Some((c, b.max(s)))
            }
            _ => Some((class, s)),
        };
    }
    best.map(|(c, _)| c.to_string())
        .ok_or_else(|| Error::invalid("no prototypes to predict against"))
}

/// Cosine nearest smoothed prototype; ties (within 1e-12) go to the smallest
/// class name.
pub fn zsl_predict(prototypes: &[ClassPrototype], projected: &[f64]) -> Result<String> {
    nearest(
        prototypes
            .iter()
            .map(|p| (p.class.as_str(), p.smoothed.as_slice())),
        projected,
    )
}

/// Same rule against the unsmoothed word vectors.
pub fn dap_predict(prototypes: &[RawPrototype], projected: &[f64]) -> Result<String> {
    nearest(
        prototypes
            .iter()
            .map(|p| (p.class.as_str(), p.vector.as_slice())),
        projected,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrototypeTag {
    Raw,
    Smoothed,
}

impl PrototypeTag {
    fn as_str(self) -> &'static str {
        match self {
            PrototypeTag::Raw => "raw",
            PrototypeTag::Smoothed => "smoothed",
        }
    }
}

// class names may contain spaces; keep the token column whitespace-free
fn escape_class(c: &str) -> String {
    c.replace('%', "%25").replace(' ', "%20").replace('\t', "%09")
}

fn unescape_class(c: &str) -> String {
    c.replace("%20", " ").replace("%09", "\t").replace("%25", "%")
}

/// Writes `class tag v1 v2 ...` lines, raw then smoothed for each class,
/// after a `#k_t1s=N` header.
pub fn save_prototypes(path: impl AsRef<Path>, prototypes: &[ClassPrototype]) -> Result<()> {
    let k = prototypes.first().map_or(0, |p| p.k_t1s);
    let mut out = format!("#k_t1s={k}\n");
    for p in prototypes {
        for (tag, v) in [
            (PrototypeTag::Raw, &p.raw),
            (PrototypeTag::Smoothed, &p.smoothed),
        ] {
            let _ = write!(out, "{} {}", escape_class(&p.class), tag.as_str());
            for x in v.iter() {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
    }
    crate::io::write_atomic(path.as_ref(), out.as_bytes())
}

pub fn load_prototypes(path: impl AsRef<Path>) -> Result<Vec<ClassPrototype>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::EmbeddingParse { line, message };
    let mut lines = text.lines().enumerate();
    let k_t1s: usize = match lines.next() {
        Some((_, h)) => h
            .strip_prefix("#k_t1s=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(1, "expected `#k_t1s=N` header".into()))?,
        None => return Err(bad(1, "empty prototype file".into())),
    };
    let mut raw: Vec<(String, DenseVector)> = Vec::new();
    let mut smoothed: Vec<(String, DenseVector)> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let class = unescape_class(parts.next().unwrap_or_default());
        let tag = parts.next().ok_or_else(|| bad(n, "missing tag".into()))?;
        let values = parts
            .map(|t| t.parse::<f64>().map_err(|e| bad(n, format!("`{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let v = DenseVector::new(values).map_err(|e| bad(n, e.to_string()))?;
        match tag {
            "raw" => raw.push((class, v)),
            "smoothed" => smoothed.push((class, v)),
            other => return Err(bad(n, format!("unknown tag `{other}`"))),
        }
    }
    if raw.len() != smoothed.len() {
        return Err(Error::invalid("every class needs one raw and one smoothed row"));
    }
    raw.into_iter()
        .map(|(class, raw)| {
            let pos = smoothed
                .iter()
                .position(|(c, _)| *c == class)
                .ok_or_else(|| Error::invalid(format!("no smoothed row for `{class}`")))?;
            let (_, smoothed) = smoothed.swap_remove(pos);
            if smoothed.len() != raw.len() {
                return Err(Error::DimensionMismatch {
                    expected: raw.len(),
                    found: smoothed.len(),
                });
            }
            Ok(ClassPrototype {
                class,
                raw,
                smoothed,
                k_t1s,
            })
        })
        .collect()
}
