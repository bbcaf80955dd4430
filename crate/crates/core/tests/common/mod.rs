//! Independent reference implementations used by the integration tests.
//! Everything here is written from the definitions with plain loops and
//! shares no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// Per-frame score vectors: frame `j` puts its cosine to each of its `k`
/// nearest centers into that center's bin. Nearest are found by repeated
/// linear scans, ties to the lower index.
pub fn frame_scores(frames: &[Vec<f64>], centers: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for x in frames {
        let sims: Vec<f64> = centers.iter().map(|c| cos(x, c)).collect();
        let mut taken = vec![false; centers.len()];
        let mut h = vec![0.0; centers.len()];
        for _ in 0..k {
            let mut best = usize::MAX;
            for d in 0..centers.len() {
                if !taken[d] && (best == usize::MAX || sims[d] > sims[best]) {
                    best = d;
                }
            }
            taken[best] = true;
            h[best] = sims[best];
        }
        out.push(h);
    }
    out
}

/// Bag encoding: the sum over frames of their score vectors.
pub fn ite(frames: &[Vec<f64>], centers: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut s = vec![0.0; centers.len()];
    for h in frame_scores(frames, centers, k) {
        for d in 0..s.len() {
            s[d] += h[d];
        }
    }
    s
}

/// Attribution score of every frame: cosine between its score vector and the bag encoding.
pub fn attribution(frames: &[Vec<f64>], centers: &[Vec<f64>], k: usize) -> Vec<f64> {
    let s = ite(frames, centers, k);
    frame_scores(frames, centers, k)
        .iter()
        .map(|h| cos(&s, h))
        .collect()
}

/// `sum_i (1 - max_d cos(x_i, c_d))`.
pub fn kmeans_objective(images: &[Vec<f64>], centers: &[Vec<f64>]) -> f64 {
    images
        .iter()
        .map(|x| {
            let best = centers
                .iter()
                .map(|c| cos(x, c))
                .fold(f64::NEG_INFINITY, f64::max);
            1.0 - best
        })
        .sum()
}

/// Fraction of points whose cluster's majority label matches their own.
pub fn purity(assignment: &[usize], labels: &[usize], clusters: usize, classes: usize) -> f64 {
    let mut counts = vec![vec![0usize; classes]; clusters];
    for (&a, &l) in assignment.iter().zip(labels) {
        counts[a][l] += 1;
    }
    let agree: usize = counts.iter().map(|c| *c.iter().max().unwrap()).sum();
    agree as f64 / labels.len() as f64
}

/// `r_j = (1/n) sum_k cos(x_j, x_k)`.
pub fn representativeness(frames: &[Vec<f64>]) -> Vec<f64> {
    let n = frames.len() as f64;
    frames
        .iter()
        .map(|x| frames.iter().map(|y| cos(x, y)).sum::<f64>() / n)
        .collect()
}

pub fn summary_objective(a: &[f64], r: &[f64], lambda: f64, set: &[usize]) -> f64 {
    let first = set.iter().map(|&j| a[j]).fold(f64::NEG_INFINITY, f64::max);
    first + lambda * set.iter().map(|&j| r[j]).sum::<f64>()
}

/// Best objective over every subset of exactly three frames.
pub fn best_triple(a: &[f64], r: &[f64], lambda: f64) -> f64 {
    let n = a.len();
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                best = best.max(summary_objective(a, r, lambda, &[i, j, k]));
            }
        }
    }
    best
}

/// Euclidean projection onto `{0 <= a_i <= c, sum_i y_i a_i = 0}` by
/// bisection on the multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64, out: &mut [f64]) {
    let residual = |mu: f64| -> f64 {
        (0..v.len())
            .map(|i| y[i] * (v[i] - mu * y[i]).clamp(0.0, c))
            .sum()
    };
    // residual is nonincreasing in mu
    let span = v.iter().fold(0.0_f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    for i in 0..v.len() {
        out[i] = (v[i] - mu * y[i]).clamp(0.0, c);
    }
}

fn dual(q: &[Vec<f64>], a: &[f64]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * q[i][j] * a[j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Maximum of the SVM dual `e'a - 1/2 a'Qa` with `Q_ij = y_i y_j K_ij`,
/// by accelerated projected gradient ascent with adaptive restart. Stops
/// after `max_iters` or once 100 iterations gain less than 1e-13.
pub fn projected_gradient_dual(gram: &[Vec<f64>], y: &[f64], c: f64, max_iters: usize) -> f64 {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * gram[i][j]).collect())
        .collect();
    // step 1/L with L bounded by the largest absolute row sum
    let l = q
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut step = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut t: f64 = 1.0;
    let mut current = dual(&q, &a);
    let mut checkpoint = current;
    for it in 1..=max_iters {
        if it % 100 == 0 {
            if current - checkpoint < 1e-13 && it > 100 {
                break;
            }
            checkpoint = current;
        }
        for i in 0..n {
            let g = 1.0 - (0..n).map(|j| q[i][j] * z[j]).sum::<f64>();
            step[i] = z[i] + g / l;
        }
        project(&step, y, c, &mut next);
        let value = dual(&q, &next);
        if value < current {
            // restart momentum
            t = 1.0;
            z.copy_from_slice(&a);
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        for i in 0..n {
            z[i] = next[i] + (t - 1.0) / t_next * (next[i] - a[i]);
        }
        a.copy_from_slice(&next);
        t = t_next;
        current = value;
    }
    current
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
