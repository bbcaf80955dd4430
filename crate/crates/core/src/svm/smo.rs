//! Two-variable working-set SMO for the soft-margin SVM dual over a
//! precomputed kernel matrix.
//!
//! Solves `min_a 1/2 a'Qa - e'a` subject to `y'a = 0` and `0 <= a_i <= C_i`, with
//! `Q_ij = y_i y_j K_ij`. Working pairs are chosen with second-order
//! information; ties go to the lowest index.

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SmoParams {
    /// Per-sample box bound for positive labels.
    pub c_pos: f64,
    /// Per-sample box bound for negative labels.
    pub c_neg: f64,
    /// Stopping tolerance on the maximal violating pair gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every update.
    pub record_trace: bool,
}

impl SmoParams {
    pub fn new(c: f64, tol: f64) -> Self {
        SmoParams {
            c_pos: c,
            c_neg: c,
            tol,
            max_iter: 10_000_000,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_j alpha_j y_j K(x_j, x) + bias`.
    pub bias: f64,
    /// Dual objective `e'a - 1/2 a'Qa` (the maximised form).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // with G = Qa - e:  e'a - 1/2 a'Qa = -1/2 sum_i a_i (G_i - 1)
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

/// Solves one binary problem. `y` must hold only `+1.0` / `-1.0`.
pub fn solve_smo(gram: &DenseMatrix, y: &[f64], params: &SmoParams) -> Result<BinarySolution> {
    let n = y.len();
    if gram.rows() != n || gram.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gram.rows(),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::invalid("binary labels must be +1 or -1"));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::invalid(
            "binary problem needs at least one positive and one negative example",
        ));
    }
    if !(params.c_pos > 0.0 && params.c_neg > 0.0) || !(params.tol > 0.0) {
        return Err(Error::invalid("C and tol must be positive"));
    }

    let bound = |i: usize| if y[i] > 0.0 { params.c_pos } else { params.c_neg };
    let q = |i: usize, j: usize| y[i] * y[j] * gram.get(i, j);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    if params.record_trace {
        trace.push(0.0);
    }

    let is_upper = |a: &[f64], i: usize| a[i] >= bound(i);
    let is_lower = |a: &[f64], i: usize| a[i] <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let v = if y[t] > 0.0 {
                (!is_upper(&alpha, t)).then(|| -grad[t])
            } else {
                (!is_lower(&alpha, t)).then(|| grad[t])
            };
            if let Some(v) = v {
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };

        // j: best second-order gain in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            let (v, grad_diff, quad) = if y[t] > 0.0 {
                if is_lower(&alpha, t) {
                    continue;
                }
                (
                    grad[t],
                    gmax + grad[t],
                    gram.get(i, i) + gram.get(t, t) - 2.0 * y[i] * q(i, t),
                )
            } else {
                if is_upper(&alpha, t) {
                    continue;
                }
                (
                    -grad[t],
                    gmax - grad[t],
                    gram.get(i, i) + gram.get(t, t) + 2.0 * y[i] * q(i, t),
                )
            };
            if v > gmax2 {
                gmax2 = v;
            }
            if grad_diff > 0.0 {
                let quad = if quad > 0.0 { quad } else { TAU };
                let gain = -(grad_diff * grad_diff) / quad;
                if gain < best_gain {
                    best_gain = gain;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < params.tol {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };

        let (ci, cj) = (bound(i), bound(j));
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = gram.get(i, i) + gram.get(j, j) + 2.0 * q(i, j);
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = gram.get(i, i) + gram.get(j, j) - 2.0 * q(i, j);
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical("SMO gradient became non-finite".into()));
        }
        iterations += 1;
        if params.record_trace {
            trace.push(dual_objective(&alpha, &grad));
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tol {}", params.tol);
    }

    let bias = -compute_rho(&alpha, &grad, y, &bound);
    Ok(BinarySolution {
        objective: dual_objective(&alpha, &grad),
        alpha,
        bias,
        iterations,
        converged,
        objective_trace: trace,
    })
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], bound: &dyn Fn(usize) -> f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for i in 0..alpha.len() {
        let yg = y[i] * grad[i];
        if alpha[i] >= bound(i) {
            if y[i] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[i] <= 0.0 {
            if y[i] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    }
}

/// Largest violation of the KKT conditions by `(alpha, bias)`:
/// `y_i f(x_i) >= 1` at the lower bound, `<= 1` at the upper bound, `= 1` in between.
pub fn max_kkt_violation(
    gram: &DenseMatrix,
    y: &[f64],
    alpha: &[f64],
    bias: f64,
    c_pos: f64,
    c_neg: f64,
) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alpha[j] * y[j] * gram.get(i, j)).sum::<f64>() + bias;
        let margin = y[i] * f - 1.0;
        let c = if y[i] > 0.0 { c_pos } else { c_neg };
        let v = if alpha[i] <= 0.0 {
            (-margin).max(0.0)
        } else if alpha[i] >= c {
            margin.max(0.0)
        } else {
            margin.abs()
        };
        worst = worst.max(v);
    }
    worst
}
