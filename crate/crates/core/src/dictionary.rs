//! Spherical k-means dictionary over auxiliary image features.
//!
//! Inputs are L2-normalised once, so cosine similarity reduces to a dot
//! product against the unit-norm centers.

use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_feature_file, write_feature_file, AuxiliaryImageSet};
use crate::numeric::{dot, normalize_in_place, DenseMatrix};

pub const DEFAULT_CLUSTERS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub clusters: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    /// Threads used by the assignment step. Results do not depend on it.
    pub workers: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            clusters: DEFAULT_CLUSTERS,
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    /// Final value of `sum_i (1 - max_d cos(image_i, center_d))`.
    pub objective: f64,
    pub seed: u64,
    /// Objective after the initial assignment and after every update step.
    pub objective_trace: Vec<f64>,
}

/// `D` unit-norm cluster centers.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionDictionary {
    centers: DenseMatrix,
    pub meta: TrainingMeta,
}

impl EmotionDictionary {
    /// Wraps given centers, normalising each row. Zero rows are rejected.
    pub fn from_centers(mut centers: DenseMatrix, meta: TrainingMeta) -> Result<Self> {
        if centers.rows() == 0 || centers.cols() == 0 {
            return Err(Error::invalid("dictionary needs at least one center"));
        }
        for d in 0..centers.rows() {
            if !normalize_in_place(centers.row_mut(d)) {
                return Err(Error::invalid(format!("center {d} is the zero vector")));
            }
        }
        Ok(EmotionDictionary { centers, meta })
    }

    pub fn centers(&self) -> &DenseMatrix {
        &self.centers
    }

    /// Number of centers `D`.
    pub fn len(&self) -> usize {
        self.centers.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.rows() == 0
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.centers.cols()
    }

    pub fn center(&self, d: usize) -> &[f64] {
        self.centers.row(d)
    }

    /// Cosine of `x` to every center. All zeros when `x` is the zero vector.
    pub(crate) fn similarities(&self, x: &[f64]) -> Vec<f64> {
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            return vec![0.0; self.len()];
        }
        self.centers
            .row_iter()
            .map(|c| (dot(x, c) / norm).clamp(-1.0, 1.0))
            .collect()
    }
}

fn normalized_rows(m: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        if !normalize_in_place(out.row_mut(i)) {
            return Err(Error::invalid(format!("auxiliary image {i} is the zero vector")));
        }
    }
    Ok(out)
}

/// Best center per row of unit-norm `x`, ties to the lowest index.
fn assign_unit(x: &DenseMatrix, centers: &DenseMatrix, workers: usize) -> Vec<(usize, f64)> {
    let best = |i: usize| {
        let xi = x.row(i);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (d, c) in centers.row_iter().enumerate() {
            let s = dot(xi, c);
            if s > best.1 {
                best = (d, s);
            }
        }
        best
    };
    if workers <= 1 {
        return (0..x.rows()).map(best).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..x.rows()).into_par_iter().map(best).collect()),
        Err(_) => (0..x.rows()).map(best).collect(),
    }
}

fn objective(assignment: &[(usize, f64)]) -> f64 {
    assignment.iter().map(|&(_, s)| 1.0 - s).sum()
}

/// Seeding with probability proportional to `1 - max existing cosine`.
fn seed_centers(x: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = x.rows();
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    picks.push(first);
    chosen[first] = true;
    let mut best: Vec<f64> = (0..n).map(|i| dot(x.row(i), x.row(first))).collect();

    while picks.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|i| if chosen[i] { 0.0 } else { (1.0 - best[i]).max(0.0) })
            .collect();
        let next = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(rng),
            // every remaining point duplicates a chosen direction
            Err(_) => (0..n).find(|&i| !chosen[i]).expect("n >= k"),
        };
        picks.push(next);
        chosen[next] = true;
        for i in 0..n {
            best[i] = best[i].max(dot(x.row(i), x.row(next)));
        }
    }
    x.select_rows(&picks)
}

/// Recomputes centers as normalised sums of their members. Clusters left empty
/// (or whose members cancel out) are re-seeded from the worst-served images.
fn update_centers(x: &DenseMatrix, assignment: &[(usize, f64)], k: usize) -> DenseMatrix {
    let d = x.cols();
    let mut centers = DenseMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &(c, _)) in assignment.iter().enumerate() {
        counts[c] += 1;
        for (acc, v) in centers.row_mut(c).iter_mut().zip(x.row(i)) {
            *acc += v;
        }
    }
    let mut empty = Vec::new();
    for c in 0..k {
        if counts[c] == 0 || !normalize_in_place(centers.row_mut(c)) {
            empty.push(c);
        }
    }
    if !empty.is_empty() {
        let mut order: Vec<usize> = (0..x.rows()).collect();
        order.sort_by(|&a, &b| assignment[a].1.total_cmp(&assignment[b].1).then(a.cmp(&b)));
        for (c, &i) in empty.iter().zip(&order) {
            centers.row_mut(*c).copy_from_slice(x.row(i));
        }
    }
    centers
}

/// Fits `config.clusters` spherical k-means centers to the auxiliary images.
pub fn fit_spherical_kmeans(
    images: &AuxiliaryImageSet,
    config: &KMeansConfig,
) -> Result<EmotionDictionary> {
    let k = config.clusters;
    if k == 0 {
        return Err(Error::invalid("number of clusters must be positive"));
    }
    if k > images.len() {
        return Err(Error::invalid(format!(
            "cannot fit {k} clusters to {} images",
            images.len()
        )));
    }
    if !(config.tol >= 0.0) {
        return Err(Error::invalid("tol must be nonnegative"));
    }
    let x = normalized_rows(&images.features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centers = seed_centers(&x, k, &mut rng);

    let mut assignment = assign_unit(&x, &centers, config.workers);
    let mut obj = objective(&assignment);
    let mut trace = vec![obj];
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        let next = update_centers(&x, &assignment, k);
        let next_assignment = assign_unit(&x, &next, config.workers);
        let next_obj = objective(&next_assignment);
        iterations += 1;
        centers = next;
        assignment = next_assignment;
        let improvement = obj - next_obj;
        obj = next_obj;
        trace.push(obj);
        if improvement < config.tol {
            break;
        }
    }
    log::debug!("spherical k-means: {iterations} iterations, objective {obj}");

    Ok(EmotionDictionary {
        centers,
        meta: TrainingMeta {
            iterations,
            objective: obj,
            seed: config.seed,
            objective_trace: trace,
        },
    })
}

/// Index of the most similar center for every image, ties to the lowest index.
pub fn assign(images: &AuxiliaryImageSet, dict: &EmotionDictionary) -> Result<Vec<usize>> {
    if images.features.cols() != dict.dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.dim(),
            found: images.features.cols(),
        });
    }
    Ok(images
        .features
        .row_iter()
        .map(|x| {
            let sims = dict.similarities(x);
            crate::numeric::argmax(&sims).unwrap_or(0)
        })
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct DictionarySidecar {
    clusters: usize,
    dim: usize,
    seed: u64,
    iterations: usize,
    objective: f64,
    #[serde(default)]
    objective_trace: Vec<f64>,
}

/// Path of the JSON sidecar that accompanies a dictionary's VEF1 file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn save_dictionary(path: impl AsRef<Path>, dict: &EmotionDictionary) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        return Err(Error::invalid("dictionary path must not end in .json"));
    }
    write_feature_file(path, &dict.centers)?;
    let sidecar = DictionarySidecar {
        clusters: dict.len(),
        dim: dict.dim(),
        seed: dict.meta.seed,
        iterations: dict.meta.iterations,
        objective: dict.meta.objective,
        objective_trace: dict.meta.objective_trace.clone(),
    };
    crate::io::write_json(&sidecar_path(path), &sidecar)
}

/// Loads a dictionary. Centers are re-normalised after widening from `f32`.
pub fn load_dictionary(path: impl AsRef<Path>) -> Result<EmotionDictionary> {
    let path = path.as_ref();
    let centers = read_feature_file(path)?;
    let side: DictionarySidecar = crate::io::read_json(&sidecar_path(path))?;
    if side.clusters != centers.rows() || side.dim != centers.cols() {
        return Err(Error::invalid(format!(
            "dictionary sidecar declares {}x{}, payload is {}x{}",
            side.clusters,
            side.dim,
            centers.rows(),
            centers.cols()
        )));
    }
    EmotionDictionary::from_centers(
        centers,
        TrainingMeta {
            iterations: side.iterations,
            objective: side.objective,
            seed: side.seed,
            objective_trace: side.objective_trace,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::l2_norm;
    use rand_distr::StandardNormal;

    fn random_images(n: usize, d: usize, seed: u64) -> AuxiliaryImageSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        AuxiliaryImageSet::new(DenseMatrix::new(n, d, data).unwrap())
    }

    fn cfg(clusters: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            clusters,
            seed,
            ..KMeansConfig::default()
        }
    }

    #[test]
    fn single_cluster_is_normalized_mean() {
        let images = random_images(40, 5, 1);
        let dict = fit_spherical_kmeans(&images, &cfg(1, 3)).unwrap();
        let mut mean = vec![0.0; 5];
        for row in images.features.row_iter() {
            let n = l2_norm(row);
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        normalize_in_place(&mut mean);
        for (a, b) in dict.center(0).iter().zip(&mean) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(dict.meta.iterations <= 2);
    }

    #[test]
    fn objective_is_monotone_and_centers_unit() {
        for seed in 0..5 {
            let dict = fit_spherical_kmeans(&random_images(120, 6, seed), &cfg(9, seed)).unwrap();
            let t = &dict.meta.objective_trace;
            assert!(t.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{t:?}");
            for c in dict.centers().row_iter() {
                assert!((l2_norm(c) - 1.0).abs() < 1e-9);
            }
            assert_eq!(dict.len(), 9);
        }
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let images = random_images(200, 8, 4);
        let a = fit_spherical_kmeans(&images, &cfg(12, 9)).unwrap();
        let b = fit_spherical_kmeans(&images, &cfg(12, 9)).unwrap();
        let c = fit_spherical_kmeans(&images, &KMeansConfig { workers: 4, ..cfg(12, 9) }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn duplicate_points_still_yield_d_centers() {
        // 3 distinct directions repeated; ask for 3 clusters over 30 rows
        let mut rows = Vec::new();
        for i in 0..30 {
            let mut r = vec![0.0; 3];
            r[i % 3] = 1.0;
            rows.push(r);
        }
        let images = AuxiliaryImageSet::new(DenseMatrix::from_rows(&rows).unwrap());
        let dict = fit_spherical_kmeans(&images, &cfg(3, 0)).unwrap();
        assert_eq!(dict.len(), 3);
        assert!(dict.meta.objective < 1e-12);
    }

    #[test]
    fn rejects_bad_requests() {
        let images = random_images(5, 3, 0);
        assert!(fit_spherical_kmeans(&images, &cfg(6, 0)).is_err());
        let zero = AuxiliaryImageSet::new(DenseMatrix::zeros(4, 3));
        assert!(fit_spherical_kmeans(&zero, &cfg(2, 0)).is_err());
    }

    #[test]
    fn assign_examples() {
        let images = random_images(60, 6, 2);
        let dict = fit_spherical_kmeans(&images, &cfg(8, 1)).unwrap();

        let probe = AuxiliaryImageSet::new(DenseMatrix::from_rows(&[dict.center(7)]).unwrap());
        assert_eq!(assign(&probe, &dict).unwrap(), vec![7]);

        let batch = random_images(50, 6, 77);
        let got = assign(&batch, &dict).unwrap();
        for (i, row) in batch.features.row_iter().enumerate() {
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for d in 0..dict.len() {
                let s = crate::numeric::cosine(row, dict.center(d)).unwrap();
                if s > best_sim {
                    best = d;
                    best_sim = s;
                }
            }
            assert_eq!(got[i], best);
        }
    }

    #[test]
    fn assign_orthogonal_case() {
        let centers = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            .unwrap();
        let dict = EmotionDictionary::from_centers(
            centers,
            TrainingMeta {
                iterations: 0,
                objective: 0.0,
                seed: 0,
                objective_trace: vec![],
            },
        )
        .unwrap();
        let probe = AuxiliaryImageSet::new(DenseMatrix::from_rows(&[[0.0, 0.0, 2.0]]).unwrap());
        assert_eq!(assign(&probe, &dict).unwrap(), vec![2]);
    }

    #[test]
    fn save_load_round_trip() {
        let dict = fit_spherical_kmeans(&random_images(50, 4, 5), &cfg(5, 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.vef");
        save_dictionary(&path, &dict).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = load_dictionary(&path).unwrap();
        assert_eq!(back.meta, dict.meta);
        for (a, b) in back.centers().data().iter().zip(dict.centers().data()) {
            assert!((a - b).abs() < 1e-6);
        }
        for c in back.centers().row_iter() {
            assert!((l2_norm(c) - 1.0).abs() < 1e-9);
        }
    }
}
