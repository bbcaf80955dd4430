//! One-vs-rest kernel SVM over encoded videos.

mod metrics;
mod smo;

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_feature_file, write_feature_file};
use crate::numeric::{
    argmax, check_nonnegative, chi_square_unchecked, dot, symmetric_eigenvalues, DenseMatrix,
};

pub use metrics::{compute_metrics, Metrics};
pub use smo::{max_kkt_violation, solve_smo, BinarySolution, SmoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    ChiSquare,
    Linear,
}

impl Kernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::ChiSquare => chi_square_unchecked(a, b),
            Kernel::Linear => dot(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    /// Seed for the sampled PSD check.
    pub seed: u64,
    /// Scale C per class by inverse class frequency.
    pub class_weighting: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            kernel: Kernel::ChiSquare,
            c: 1.0,
            tol: 1e-3,
            seed: 0,
            class_weighting: false,
        }
    }
}

/// Per-class binary machines sharing one set of support vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedModel {
    /// Sorted class names; machine `k` separates `classes[k]` from the rest.
    pub classes: Vec<String>,
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub class_weighting: bool,
    /// `(C_pos, C_neg)` used for each class.
    pub bounds: Vec<(f64, f64)>,
    pub bias: Vec<f64>,
    /// Training indices of the stored support vectors.
    pub support_indices: Vec<usize>,
    pub support_vectors: DenseMatrix,
    /// `alpha_i * y_i` for each support vector (rows) and class (columns).
    pub coef: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    /// Decision value per class, in `SupervisedModel::classes` order.
    pub scores: Vec<f64>,
}

fn gram_matrix<R: AsRef<[f64]> + Sync>(kernel: Kernel, rows: &[R]) -> DenseMatrix {
    let n = rows.len();
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (0..n).map(move |j| kernel.eval(rows[i].as_ref(), rows[j].as_ref())))
        .collect();
    DenseMatrix::from_trusted(n, n, data)
}

/// Checks that a random principal submatrix (at most 20 rows) of `gram` has no
/// eigenvalue below `-1e-8` relative to its largest.
pub fn sampled_psd_check(gram: &DenseMatrix, seed: u64) -> Result<f64> {
    let n = gram.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, n.min(20)).into_vec();
    idx.sort_unstable();
    let mut sub = DenseMatrix::zeros(idx.len(), idx.len());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            sub.set(a, b, gram.get(i, j));
        }
    }
    let eig = symmetric_eigenvalues(&sub)?;
    let min = eig[0];
    let scale = eig.last().copied().unwrap_or(1.0).abs().max(1.0);
    if min < -1e-8 * scale {
        return Err(Error::Numerical(format!(
            "kernel matrix is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(min)
}

/// Trains one binary SVM per class.
pub fn train<R: AsRef<[f64]> + Sync>(
    features: &[R],
    labels: &[String],
    params: &TrainParams,
) -> Result<SupervisedModel> {
    let n = features.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::invalid("need at least two training examples"));
    }
    let dim = features[0].as_ref().len();
    for f in features {
        if f.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: f.as_ref().len(),
            });
        }
        if params.kernel == Kernel::ChiSquare {
            check_nonnegative(f.as_ref())?;
        }
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("need at least two classes"));
    }

    let gram = gram_matrix(params.kernel, features);
    if params.kernel == Kernel::ChiSquare {
        sampled_psd_check(&gram, params.seed)?;
    }

    let solutions: Vec<(BinarySolution, (f64, f64))> = classes
        .par_iter()
        .map(|class| {
            let y: Vec<f64> = labels
                .iter()
                .map(|l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let n_pos = y.iter().filter(|v| **v > 0.0).count();
            let n_neg = n - n_pos;
            let (c_pos, c_neg) = if params.class_weighting {
                (
                    params.c * n as f64 / (2.0 * n_pos as f64),
                    params.c * n as f64 / (2.0 * n_neg as f64),
                )
            } else {
                (params.c, params.c)
            };
            let smo = SmoParams {
                c_pos,
                c_neg,
                ..SmoParams::new(params.c, params.tol)
            };
            solve_smo(&gram, &y, &smo).map(|s| (s, (c_pos, c_neg)))
        })
        .collect::<Result<_>>()?;

    let support_indices: Vec<usize> = (0..n)
        .filter(|&i| solutions.iter().any(|(s, _)| s.alpha[i] > 0.0))
        .collect();
    let mut coef = DenseMatrix::zeros(support_indices.len(), classes.len());
    for (k, (sol, _)) in solutions.iter().enumerate() {
        for (row, &i) in support_indices.iter().enumerate() {
            let y = if labels[i] == classes[k] { 1.0 } else { -1.0 };
            coef.set(row, k, sol.alpha[i] * y);
        }
    }
    let sv_rows: Vec<&[f64]> = support_indices.iter().map(|&i| features[i].as_ref()).collect();

    Ok(SupervisedModel {
        bias: solutions.iter().map(|(s, _)| s.bias).collect(),
        bounds: solutions.iter().map(|(_, b)| *b).collect(),
        classes,
        kernel: params.kernel,
        c: params.c,
        tol: params.tol,
        class_weighting: params.class_weighting,
        support_indices,
        support_vectors: DenseMatrix::from_rows(&sv_rows)?,
        coef,
    })
}

impl SupervisedModel {
    pub fn feature_dim(&self) -> usize {
        self.support_vectors.cols()
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                found: x.len(),
            });
        }
        if self.kernel == Kernel::ChiSquare {
            check_nonnegative(x)?;
        }
        let k: Vec<f64> = self
            .support_vectors
            .row_iter()
            .map(|sv| self.kernel.eval(sv, x))
            .collect();
        Ok((0..self.classes.len())
            .map(|c| {
                (0..k.len()).map(|r| self.coef.get(r, c) * k[r]).sum::<f64>() + self.bias[c]
            })
            .collect())
    }

    /// Class with the largest decision value; ties go to the lexicographically smallest name.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let scores = self.decision_values(x)?;
        let best = argmax(&scores).expect("model has classes");
        Ok(Prediction {
            label: self.classes[best].clone(),
            scores,
        })
    }

    pub fn predict_batch<R: AsRef<[f64]> + Sync>(&self, xs: &[R]) -> Result<Vec<Prediction>> {
        xs.par_iter().map(|x| self.predict(x.as_ref())).collect()
    }

    /// Checks the dual constraints of every machine.
    pub fn check_invariants(&self, eq_tol: f64) -> Result<()> {
        for (c, &(c_pos, c_neg)) in self.bounds.iter().enumerate() {
            let mut sum = 0.0;
            for r in 0..self.coef.rows() {
                let v = self.coef.get(r, c);
                let bound = if v > 0.0 { c_pos } else { c_neg };
                if v.abs() > bound * (1.0 + 1e-12) {
                    return Err(Error::Numerical(format!(
                        "class `{}`: |alpha| = {} exceeds C = {bound}",
                        self.classes[c],
                        v.abs()
                    )));
                }
                sum += v;
            }
            if sum.abs() > eq_tol {
                return Err(Error::Numerical(format!(
                    "class `{}`: sum alpha_i y_i = {sum:e}",
                    self.classes[c]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    schema_version: u32,
    kind: String,
    classes: Vec<String>,
    kernel: Kernel,
    c: f64,
    tol: f64,
    class_weighting: bool,
    bounds: Vec<(f64, f64)>,
    bias: Vec<f64>,
    feature_dim: usize,
    support_indices: Vec<usize>,
    /// Relative path of the VEF1 block: one row per support vector holding the
    /// per-class coefficients followed by the support vector itself.
    block: String,
}

fn block_path(header_path: &Path) -> PathBuf {
    header_path.with_extension("vef")
}

/// Writes `<path>` (JSON header) and `<path>.vef` (coefficients and support vectors).
pub fn save_model(path: impl AsRef<Path>, model: &SupervisedModel) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "vef") {
        return Err(Error::invalid("model header path must not end in .vef"));
    }
    let block = block_path(path);
    let n_classes = model.classes.len();
    let cols = n_classes + model.feature_dim();
    let mut data = Vec::with_capacity(model.support_indices.len() * cols);
    for r in 0..model.support_indices.len() {
        data.extend((0..n_classes).map(|c| model.coef.get(r, c)));
        data.extend_from_slice(model.support_vectors.row(r));
    }
    write_feature_file(
        &block,
        &DenseMatrix::from_trusted(model.support_indices.len(), cols, data),
    )?;
    let header = ModelHeader {
        schema_version: 1,
        kind: "supervised".into(),
        classes: model.classes.clone(),
        kernel: model.kernel,
        c: model.c,
        tol: model.tol,
        class_weighting: model.class_weighting,
        bounds: model.bounds.clone(),
        bias: model.bias.clone(),
        feature_dim: model.feature_dim(),
        support_indices: model.support_indices.clone(),
        block: block
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    crate::io::write_json(path, &header)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SupervisedModel> {
    let path = path.as_ref();
    let h: ModelHeader = crate::io::read_json(path)?;
    if h.kind != "supervised" {
        return Err(Error::invalid(format!("{} is not a supervised model", path.display())));
    }
    let block_file = path.parent().unwrap_or(Path::new("")).join(&h.block);
    let block = read_feature_file(&block_file)?;
    let n_classes = h.classes.len();
    if block.rows() != h.support_indices.len() || block.cols() != n_classes + h.feature_dim {
        return Err(Error::invalid(format!(
            "model block is {}x{}, header expects {}x{}",
            block.rows(),
            block.cols(),
            h.support_indices.len(),
            n_classes + h.feature_dim
        )));
    }
    if h.bias.len() != n_classes || h.bounds.len() != n_classes {
        return Err(Error::invalid("model header has inconsistent class counts"));
    }
    let mut coef = DenseMatrix::zeros(block.rows(), n_classes);
    let mut sv = DenseMatrix::zeros(block.rows(), h.feature_dim);
    for r in 0..block.rows() {
        let row = block.row(r);
        coef.row_mut(r).copy_from_slice(&row[..n_classes]);
        sv.row_mut(r).copy_from_slice(&row[n_classes..]);
    }
    Ok(SupervisedModel {
        classes: h.classes,
        kernel: h.kernel,
        c: h.c,
        tol: h.tol,
        class_weighting: h.class_weighting,
        bounds: h.bounds,
        bias: h.bias,
        support_indices: h.support_indices,
        support_vectors: sv,
        coef,
    })
}
