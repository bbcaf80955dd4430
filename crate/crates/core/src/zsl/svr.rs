//! Linear epsilon-insensitive SVR solved by dual coordinate descent.
//!
//! Dual: `min_b 1/2 b'XX'b - y'b + eps |b|_1` with `-C <= b_i <= C` and
//! `w = X'b`. Inputs and targets are centred first and a constant feature
//! carries the residual intercept.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numeric::dot;

#[derive(Debug, Clone, Copy)]
pub struct SvrSettings {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    pub converged: bool,
}

/// Fits one output coordinate. `x` holds centred rows; `y` centred targets.
pub(crate) fn fit_centered(x: &[Vec<f64>], y: &[f64], s: &SvrSettings) -> LinearFit {
    let n = x.len();
    let dim = x[0].len();
    // last weight multiplies the constant feature 1
    let mut w = vec![0.0; dim + 1];
    let mut beta = vec![0.0; n];
    let qd: Vec<f64> = x.iter().map(|r| dot(r, r) + 1.0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let upper = s.c;

    let mut epochs = 0;
    let mut converged = false;
    while epochs < s.max_epochs {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let xi = &x[i];
            let g = dot(&w[..dim], xi) + w[dim] - y[i];
            let gp = g + s.epsilon;
            let gn = g - s.epsilon;
            let b = beta[i];

            let violation = if b == 0.0 {
                if gp < 0.0 {
                    -gp
                } else if gn > 0.0 {
                    gn
                } else {
                    0.0
                }
            } else if b >= upper {
                gp.max(0.0)
            } else if b <= -upper {
                (-gn).max(0.0)
            } else if b > 0.0 {
                gp.abs()
            } else {
                gn.abs()
            };
            max_violation = max_violation.max(violation);

            let h = qd[i];
            let d = if gp < h * b {
                -gp / h
            } else if gn > h * b {
                -gn / h
            } else {
                -b
            };
            let new_b = (b + d).clamp(-upper, upper);
            let d = new_b - b;
            if d != 0.0 {
                beta[i] = new_b;
                for (wj, xj) in w[..dim].iter_mut().zip(xi) {
                    *wj += d * xj;
                }
                w[dim] += d;
            }
        }
        epochs += 1;
        if max_violation <= s.tol {
            converged = true;
            break;
        }
    }
    let bias = w.pop().expect("bias slot");
    LinearFit {
        weights: w,
        bias,
        epochs,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(c: f64, epsilon: f64) -> SvrSettings {
        SvrSettings {
            c,
            epsilon,
            tol: 1e-8,
            max_epochs: 20_000,
            seed: 0,
        }
    }

    #[test]
    fn recovers_exact_line() {
        // y = 2x on centred inputs
        let xs = [-1.5, -0.5, 0.5, 1.5];
        let x: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v]).collect();
        let y: Vec<f64> = xs.iter().map(|v| 2.0 * v).collect();
        let fit = fit_centered(&x, &y, &settings(100.0, 0.0));
        assert!(fit.converged);
        assert!((fit.weights[0] - 2.0).abs() < 1e-6, "{:?}", fit.weights);
        assert!(fit.bias.abs() < 1e-6);
    }

    #[test]
    fn epsilon_tube_leaves_small_targets_unfit() {
        let x: Vec<Vec<f64>> = vec![vec![-1.0], vec![1.0]];
        let y = vec![-0.05, 0.05];
        let fit = fit_centered(&x, &y, &settings(1.0, 0.1));
        assert_eq!(fit.weights[0], 0.0);
        assert_eq!(fit.bias, 0.0);
    }

    #[test]
    fn box_constraint_limits_weights() {
        let x: Vec<Vec<f64>> = vec![vec![-1.0], vec![1.0]];
        let y = vec![-100.0, 100.0];
        let fit = fit_centered(&x, &y, &settings(0.5, 0.0));
        // w = sum beta_i x_i with |beta_i| <= 0.5
        assert!(fit.weights[0] <= 1.0 + 1e-12);
    }
}
