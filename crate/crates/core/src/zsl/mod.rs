//! Zero-shot recognition through a word-vector space.
//!
//! A bank of per-dimension linear regressors maps video encodings into the
//! embedding space. Unseen-class prototypes are optionally smoothed once
//! towards their nearest projected test videos (T1S) before cosine
//! nearest-prototype prediction; without smoothing this is the DAP baseline.

mod prototypes;
mod svr;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_feature_file, write_feature_file};
use crate::numeric::{dot, Cholesky, DenseMatrix, DenseVector};

pub use prototypes::{
    dap_predict, default_t1s_neighbors, load_prototypes, save_prototypes, t1s_smooth,
    zsl_predict, ClassPrototype, PrototypeTag, RawPrototype,
};
pub use svr::SvrSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    /// Linear epsilon-SVR per output dimension.
    Svr,
    /// Closed-form ridge regression with an unpenalised intercept.
    Ridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorParams {
    pub kind: RegressorKind,
    pub c: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for RegressorParams {
    fn default() -> Self {
        RegressorParams {
            kind: RegressorKind::Svr,
            c: 1.0,
            epsilon: 0.1,
            lambda: 1.0,
            tol: 1e-3,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

/// Maps a `D`-dimensional encoding to a `K`-dimensional word vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotRegressor {
    pub params: RegressorParams,
    /// One row per output coordinate.
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
}

impl ZeroShotRegressor {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn project(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let out: Vec<f64> = self
            .weights
            .row_iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, x) + b)
            .collect();
        DenseVector::new(out).map_err(|_| Error::Numerical("projection is not finite".into()))
    }

    pub fn project_batch<R: AsRef<[f64]> + Sync>(&self, xs: &[R]) -> Result<Vec<DenseVector>> {
        xs.par_iter().map(|x| self.project(x.as_ref())).collect()
    }
}

fn column_means<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for r in rows {
        m.iter_mut().zip(r.as_ref()).for_each(|(a, v)| *a += v);
    }
    let n = rows.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

fn mse(pred: impl Iterator<Item = f64>, y: &[f64]) -> f64 {
    pred.zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64
}

/// Fits one regressor per embedding coordinate.
pub fn fit_regressor<R, T>(
    inputs: &[R],
    targets: &[T],
    params: &RegressorParams,
) -> Result<ZeroShotRegressor>
where
    R: AsRef<[f64]> + Sync,
    T: AsRef<[f64]> + Sync,
{
    let n = inputs.len();
    if n < 2 {
        return Err(Error::invalid("need at least two training videos"));
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: targets.len(),
        });
    }
    let dim = inputs[0].as_ref().len();
    let out_dim = targets[0].as_ref().len();
    if dim == 0 || out_dim == 0 {
        return Err(Error::invalid("empty input or target vectors"));
    }
    for r in inputs {
        if r.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.as_ref().len(),
            });
        }
    }
    for t in targets {
        if t.as_ref().len() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                found: t.as_ref().len(),
            });
        }
    }
    match params.kind {
        RegressorKind::Svr => {
            if !(params.c > 0.0 && params.epsilon >= 0.0 && params.tol > 0.0) {
                return Err(Error::invalid("SVR needs C > 0, epsilon >= 0, tol > 0"));
            }
        }
        RegressorKind::Ridge => {
            if !(params.lambda > 0.0) {
                return Err(Error::invalid("ridge needs lambda > 0"));
            }
        }
    }

    let x_mean = column_means(inputs, dim);
    let y_mean = column_means(targets, out_dim);
    let xc: Vec<Vec<f64>> = inputs
        .iter()
        .map(|r| r.as_ref().iter().zip(&x_mean).map(|(v, m)| v - m).collect())
        .collect();
    let columns: Vec<Vec<f64>> = (0..out_dim)
        .map(|k| targets.iter().map(|t| t.as_ref()[k] - y_mean[k]).collect())
        .collect();

    let degenerate = xc.iter().all(|r| r.iter().all(|v| *v == 0.0));
    if degenerate {
        log::warn!("all training inputs are identical; using mean predictors");
    }

    let coord_weights: Vec<Vec<f64>> = if degenerate {
        vec![vec![0.0; dim]; out_dim]
    } else {
        match params.kind {
            RegressorKind::Ridge => ridge_weights(&xc, &columns, params.lambda)?,
            RegressorKind::Svr => columns
                .par_iter()
                .enumerate()
                .map(|(k, y)| {
                    let s = SvrSettings {
                        c: params.c,
                        epsilon: params.epsilon,
                        tol: params.tol,
                        max_epochs: params.max_epochs,
                        seed: params.seed.wrapping_add(k as u64),
                    };
                    let fit = svr::fit_centered(&xc, y, &s);
                    if !fit.converged {
                        log::debug!("SVR coordinate {k} stopped after {} epochs", fit.epochs);
                    }
                    let mut w = fit.weights;
                    let mut b = fit.bias;
                    // never do worse on the training set than the mean predictor
                    let train_mse = mse(xc.iter().map(|r| dot(&w, r) + b), y);
                    let floor = mse(std::iter::repeat(0.0), y);
                    if train_mse > floor {
                        log::warn!("SVR coordinate {k} is worse than its mean; using the mean");
                        w.iter_mut().for_each(|v| *v = 0.0);
                        b = 0.0;
                    }
                    w.push(b);
                    w
                })
                .collect(),
        }
    };

    let mut weights = DenseMatrix::zeros(out_dim, dim);
    let mut bias = Vec::with_capacity(out_dim);
    for (k, mut w) in coord_weights.into_iter().enumerate() {
        let extra = if w.len() > dim { w.pop().unwrap() } else { 0.0 };
        // undo centring: f(x) = w'(x - x_mean) + extra + y_mean
        bias.push(y_mean[k] + extra - dot(&w, &x_mean));
        weights.row_mut(k).copy_from_slice(&w);
    }
    if weights.data().iter().chain(&bias).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("regressor weights are not finite".into()));
    }
    Ok(ZeroShotRegressor {
        params: params.clone(),
        weights,
        bias,
    })
}

/// Ridge weights for every target column, using whichever of the primal
/// (`D x D`) or dual (`n x n`) systems is smaller.
fn ridge_weights(xc: &[Vec<f64>], columns: &[Vec<f64>], lambda: f64) -> Result<Vec<Vec<f64>>> {
    let n = xc.len();
    let dim = xc[0].len();
    if dim <= n {
        let mut a = DenseMatrix::zeros(dim, dim);
        for r in xc {
            for i in 0..dim {
                for j in 0..dim {
                    a.set(i, j, a.get(i, j) + r[i] * r[j]);
                }
            }
        }
        for i in 0..dim {
            a.set(i, i, a.get(i, i) + lambda);
        }
        let chol = Cholesky::new(&a)?;
        columns
            .iter()
            .map(|y| {
                let mut rhs = vec![0.0; dim];
                for (r, t) in xc.iter().zip(y) {
                    rhs.iter_mut().zip(r).for_each(|(acc, v)| *acc += v * t);
                }
                chol.solve(&rhs)
            })
            .collect()
    } else {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, dot(&xc[i], &xc[j]) + if i == j { lambda } else { 0.0 });
            }
        }
        let chol = Cholesky::new(&a)?;
        columns
            .iter()
            .map(|y| {
                let coef = chol.solve(y)?;
                let mut w = vec![0.0; dim];
                for (r, c) in xc.iter().zip(&coef) {
                    w.iter_mut().zip(r).for_each(|(acc, v)| *acc += c * v);
                }
                Ok(w)
            })
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RegressorHeader {
    schema_version: u32,
    kind: String,
    params: RegressorParams,
    input_dim: usize,
    output_dim: usize,
    /// VEF1 block with one row per output coordinate: weights then bias.
    block: String,
}

fn block_path(path: &Path) -> PathBuf {
    path.with_extension("vef")
}

pub fn save_regressor(path: impl AsRef<Path>, reg: &ZeroShotRegressor) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "vef") {
        return Err(Error::invalid("regressor header path must not end in .vef"));
    }
    let block = block_path(path);
    let cols = reg.input_dim() + 1;
    let mut data = Vec::with_capacity(reg.output_dim() * cols);
    for (w, b) in reg.weights.row_iter().zip(&reg.bias) {
        data.extend_from_slice(w);
        data.push(*b);
    }
    write_feature_file(&block, &DenseMatrix::from_trusted(reg.output_dim(), cols, data))?;
    crate::io::write_json(
        path,
        &RegressorHeader {
            schema_version: 1,
            kind: "zero-shot-regressor".into(),
            params: reg.params.clone(),
            input_dim: reg.input_dim(),
            output_dim: reg.output_dim(),
            block: block
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
        },
    )
}

pub fn load_regressor(path: impl AsRef<Path>) -> Result<ZeroShotRegressor> {
    let path = path.as_ref();
    let h: RegressorHeader = crate::io::read_json(path)?;
    if h.kind != "zero-shot-regressor" {
        return Err(Error::invalid(format!("{} is not a regressor bank", path.display())));
    }
    let block = read_feature_file(path.parent().unwrap_or(Path::new("")).join(&h.block))?;
    if block.rows() != h.output_dim || block.cols() != h.input_dim + 1 {
        return Err(Error::invalid("regressor block does not match its header"));
    }
    let mut weights = DenseMatrix::zeros(h.output_dim, h.input_dim);
    let mut bias = Vec::with_capacity(h.output_dim);
    for k in 0..h.output_dim {
        let row = block.row(k);
        weights.row_mut(k).copy_from_slice(&row[..h.input_dim]);
        bias.push(row[h.input_dim]);
    }
    Ok(ZeroShotRegressor {
        params: h.params,
        weights,
        bias,
    })
}
