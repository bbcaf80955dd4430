//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with
//! `cargo test -p emokit-core --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use emokit::attribution::{summarize, Representativeness};
use emokit::dictionary::{assign, fit_spherical_kmeans, EmotionDictionary, KMeansConfig, TrainingMeta};
use emokit::encoding::{default_neighbors, encode_video};
use emokit::io::{load_embeddings_text, load_manifest, read_feature_file, AuxiliaryImageSet, Split};
use emokit::numeric::{DenseMatrix, DenseVector};
use emokit::pipeline::{EncodingKind, Pipeline, PipelineConfig, SynthKind, ZslMethod};
use emokit::svm::{compute_metrics, sampled_psd_check, solve_smo, Kernel, SmoParams};
use emokit::zsl::{dap_predict, t1s_smooth, zsl_predict, RawPrototype};
use nalgebra::DMatrix;
use rand::Rng;
use serde_json::Value;

use common::{gaussian, mean, rng, unit};

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn random_dictionary(rng: &mut impl Rng, clusters: usize, dim: usize) -> (EmotionDictionary, Vec<Vec<f64>>) {
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| unit(gaussian(rng, dim))).collect();
    let meta = TrainingMeta {
        iterations: 0,
        objective: 0.0,
        seed: 0,
        objective_trace: Vec::new(),
    };
    let dict = EmotionDictionary::from_centers(DenseMatrix::from_rows(&centers).unwrap(), meta).unwrap();
    let stored = dict.centers().row_iter().map(<[f64]>::to_vec).collect();
    (dict, stored)
}

fn rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

fn encoding_oracle() -> Check {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for v in 0..200 {
        let k = [1, 4, 16][v % 3];
        let n = r.random_range(1..=30);
        let (dict, centers) = random_dictionary(&mut r, 16, 16);
        let frames: Vec<Vec<f64>> = (0..n).map(|_| gaussian(&mut r, 16)).collect();
        let s = encode_video(&DenseMatrix::from_rows(&frames).unwrap(), &dict, k)
            .map_err(|e| e.to_string())?
            .s;
        let oracle = common::ite(&frames, &centers, k);
        for (a, b) in s.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    let msg = format!("max |s - oracle| = {worst:.1e} over 200 videos (tolerance 1e-9)");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn blob_images(rng: &mut impl Rng, dirs: &[Vec<f64>], per: usize, spread: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (l, d) in dirs.iter().enumerate() {
        for _ in 0..per {
            let noise = gaussian(rng, d.len());
            images.push(unit(d.iter().zip(&noise).map(|(a, b)| a + spread * b).collect()));
            labels.push(l);
        }
    }
    (images, labels)
}

fn kmeans_correctness() -> Check {
    // monotone objective, and the reported objective matches a recomputation
    let mut worst_rise: f64 = 0.0;
    let mut worst_obj: f64 = 0.0;
    for seed in 0..50u64 {
        let mut r = rng(100 + seed);
        let blobs = r.random_range(2..=6);
        let dirs: Vec<Vec<f64>> = (0..blobs).map(|_| unit(gaussian(&mut r, 8))).collect();
        let (images, _) = blob_images(&mut r, &dirs, 25, 0.6);
        let clusters = r.random_range(2..=8);
        let aux = AuxiliaryImageSet::new(DenseMatrix::from_rows(&images).unwrap());
        let cfg = KMeansConfig {
            clusters,
            seed,
            max_iters: 100,
            tol: 0.0,
            workers: 1,
        };
        let dict = fit_spherical_kmeans(&aux, &cfg).map_err(|e| e.to_string())?;
        for w in dict.meta.objective_trace.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        let oracle = common::kmeans_objective(&images, &rows(dict.centers()));
        worst_obj = worst_obj.max((oracle - dict.meta.objective).abs());
    }

    // one cluster: the center is the normalized sum of the unit images
    let mut worst_d1: f64 = 0.0;
    for seed in 0..10u64 {
        let mut r = rng(200 + seed);
        let images: Vec<Vec<f64>> = (0..40)
            .map(|_| gaussian(&mut r, 5).into_iter().map(|x| x + 1.5).collect())
            .collect();
        let aux = AuxiliaryImageSet::new(DenseMatrix::from_rows(&images).unwrap());
        let cfg = KMeansConfig {
            clusters: 1,
            seed,
            ..KMeansConfig::default()
        };
        let dict = fit_spherical_kmeans(&aux, &cfg).map_err(|e| e.to_string())?;
        let mut sum = vec![0.0; 5];
        for x in &images {
            for (s, u) in sum.iter_mut().zip(unit(x.clone())) {
                *s += u;
            }
        }
        let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
        let closed_objective = images.len() as f64 - norm;
        let closed = unit(sum);
        for (a, b) in dict.center(0).iter().zip(&closed) {
            worst_d1 = worst_d1.max((a - b).abs());
        }
        worst_d1 = worst_d1.max((dict.meta.objective - closed_objective).abs());
    }

    // two well-separated blobs are recovered
    let mut worst_purity: f64 = 1.0;
    for seed in 0..10u64 {
        let mut r = rng(300 + seed);
        let a = unit(gaussian(&mut r, 10));
        let b = unit(gaussian(&mut r, 10));
        let (images, labels) = blob_images(&mut r, &[a, b], 100, 0.15);
        let aux = AuxiliaryImageSet::new(DenseMatrix::from_rows(&images).unwrap());
        let cfg = KMeansConfig {
            clusters: 2,
            seed,
            ..KMeansConfig::default()
        };
        let dict = fit_spherical_kmeans(&aux, &cfg).map_err(|e| e.to_string())?;
        let got = assign(&aux, &dict).map_err(|e| e.to_string())?;
        worst_purity = worst_purity.min(common::purity(&got, &labels, 2, 2));
    }

    let msg = format!(
        "max objective rise {worst_rise:.1e}, objective vs recomputation {worst_obj:.1e}, \
         D=1 closed form {worst_d1:.1e} (tolerance 1e-9), two-blob purity {worst_purity:.3} (>= 0.99)"
    );
    if worst_rise <= 0.0 && worst_obj <= 1e-9 && worst_d1 <= 1e-9 && worst_purity >= 0.99 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn svm_validity() -> Check {
    const TOL: f64 = 1e-5;
    let mut worst_gap: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut worst_eig: f64 = f64::INFINITY;
    for p in 0..20u64 {
        let mut r = rng(400 + p);
        let dim = 6;
        let w = gaussian(&mut r, dim);
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..dim).map(|_| r.random::<f64>()).collect())
            .collect();
        let mut y: Vec<f64> = xs
            .iter()
            .map(|x| {
                let score: f64 = x.iter().zip(&w).map(|(a, b)| (a - 0.5) * b).sum();
                let noise: f64 = 0.3 * r.sample::<f64, _>(rand_distr::StandardNormal);
                if score + noise > 0.0 { 1.0 } else { -1.0 }
            })
            .collect();
        // both classes present
        y[0] = 1.0;
        y[1] = -1.0;
        let c = if p % 2 == 0 { 1.0 } else { 10.0 };
        let gram: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| Kernel::ChiSquare.eval(a, b)).collect())
            .collect();
        let g = DenseMatrix::from_rows(&gram).unwrap();

        sampled_psd_check(&g, p).map_err(|e| format!("problem {p}: {e}"))?;
        let eig = DMatrix::from_fn(40, 40, |i, j| gram[i][j]).symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        worst_eig = worst_eig.min(eig.min() / scale);

        let sol = solve_smo(&g, &y, &SmoParams::new(c, TOL)).map_err(|e| e.to_string())?;
        let reference = common::projected_gradient_dual(&gram, &y, c, 20_000);
        worst_gap = worst_gap.max((sol.objective - reference).abs());

        for i in 0..40 {
            let f: f64 = (0..40).map(|j| sol.alpha[j] * y[j] * gram[i][j]).sum::<f64>() + sol.bias;
            let margin = y[i] * f - 1.0;
            let at_upper = sol.alpha[i] >= c * (1.0 - 1e-12);
            let v = if sol.alpha[i] <= 0.0 {
                (-margin).max(0.0)
            } else if at_upper {
                margin.max(0.0)
            } else {
                margin.abs()
            };
            worst_kkt = worst_kkt.max(v);
        }
    }
    let msg = format!(
        "max |dual - projected-gradient reference| = {worst_gap:.1e} (<= 1e-4), \
         max KKT violation {worst_kkt:.1e} (<= tol {TOL:.0e}), min relative Gram eigenvalue {worst_eig:.1e}"
    );
    if worst_gap <= 1e-4 && worst_kkt <= TOL && worst_eig >= -1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Config for a supervised synthetic run rooted at a temporary directory.
/// Paths are relative, so two roots produce identical reports.
fn supervised_config(seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    c.dictionary.clusters = 64;
    c
}

fn run(p: &Pipeline, commands: &[&str]) -> Result<Value, String> {
    let mut last = Value::Null;
    for cmd in commands {
        let out = match *cmd {
            "synth" => p.cmd_synth(),
            "build-dict" => p.cmd_build_dict(),
            "encode" => p.cmd_encode(),
            "train" => p.cmd_train(),
            "eval" => p.cmd_eval(),
            "zsl" => p.cmd_zsl(),
            other => panic!("unknown command {other}"),
        }
        .map_err(|e| format!("{cmd}: {e}"))?;
        last = out.summary;
    }
    Ok(last)
}

fn mean_accuracy(summary: &Value) -> f64 {
    summary["mean_accuracy"].as_f64().expect("mean_accuracy")
}

fn supervised_accuracy(root: &Path, seed: u64, kind: EncodingKind, clusters: usize) -> Result<f64, String> {
    let mut c = supervised_config(seed);
    c.encoding.kind = kind;
    c.dictionary.clusters = clusters;
    c.output_dir = PathBuf::from(format!("out_{}_{clusters}", kind.as_str()));
    let p = Pipeline::new(c, root).map_err(|e| e.to_string())?;
    let commands: &[&str] = match kind {
        EncodingKind::Ite => &["build-dict", "encode", "train", "eval"],
        EncodingKind::Avgp => &["encode", "train", "eval"],
    };
    Ok(mean_accuracy(&run(&p, commands)?))
}

fn synth_supervised(root: &Path, seed: u64) -> Result<(), String> {
    let p = Pipeline::new(supervised_config(seed), root).map_err(|e| e.to_string())?;
    run(&p, &["synth"]).map(|_| ())
}

fn ite_beats_avgp() -> Check {
    let mut ite = Vec::new();
    let mut avgp = Vec::new();
    for seed in 0..5u64 {
        let dir = tempfile::tempdir().unwrap();
        synth_supervised(dir.path(), seed)?;
        ite.push(supervised_accuracy(dir.path(), seed, EncodingKind::Ite, 64)?);
        avgp.push(supervised_accuracy(dir.path(), seed, EncodingKind::Avgp, 64)?);
    }
    let (i, a) = (mean(&ite), mean(&avgp));
    let msg = format!(
        "ITE (D=64) {:.1}% vs AvgP {:.1}%, margin {:+.1} points (>= 5); per seed ITE {:?} AvgP {:?}",
        100.0 * i,
        100.0 * a,
        100.0 * (i - a),
        pct(&ite),
        pct(&avgp)
    );
    if i - a >= 0.05 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn pct(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|x| format!("{:.1}", 100.0 * x)).collect()
}

fn zero_shot_config(seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    c.dictionary.clusters = 64;
    c.synth.kind = SynthKind::ZeroShot;
    c.data.embeddings = Some(PathBuf::from("data/embeddings.txt"));
    c.zsl.method = ZslMethod::T1s;
    c.zsl.encoding = EncodingKind::Ite;
    c
}

fn class_mean_accuracy(classes: &[String], truth: &[String], predicted: &[String]) -> f64 {
    compute_metrics(classes, truth, predicted).unwrap().mean_accuracy
}

fn zero_shot() -> Check {
    let mut t1s = Vec::new();
    let mut chance = 0.0;
    let mut drift_wins = 0;
    let mut drift_detail = Vec::new();
    for seed in 0..5u64 {
        let dir = tempfile::tempdir().unwrap();
        let p = Pipeline::new(zero_shot_config(seed), dir.path()).map_err(|e| e.to_string())?;
        let summary = run(&p, &["synth", "build-dict", "zsl"])?;
        t1s.push(mean_accuracy(&summary));
        chance = summary["chance"].as_f64().unwrap();

        // drifted variant: a systematic offset added to every test projection
        let report: Value =
            serde_json::from_slice(&fs::read(p.out("zsl/t1s_ite/metrics.json")).unwrap()).unwrap();
        let k = report["k_t1s"].as_u64().unwrap() as usize;
        let proj = read_feature_file(p.out("zsl/t1s_ite/projections.vef")).map_err(|e| e.to_string())?;
        let test = load_manifest(dir.path().join("data/test.json")).map_err(|e| e.to_string())?;
        let truth = test.labels().unwrap();
        let space = load_embeddings_text(dir.path().join("data/embeddings.txt")).map_err(|e| e.to_string())?;
        let raw: Vec<RawPrototype> = test
            .class_set
            .iter()
            .map(|c| RawPrototype::new(c.clone(), space.lookup(c).unwrap()))
            .collect();
        let mean_norm = mean(
            &proj
                .row_iter()
                .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
                .collect::<Vec<_>>(),
        );
        let mut r = rng(500 + seed);
        let direction = unit(gaussian(&mut r, proj.cols()));
        let drifted: Vec<DenseVector> = proj
            .row_iter()
            .map(|row| {
                DenseVector::new(
                    row.iter()
                        .zip(&direction)
                        .map(|(x, d)| x + 2.0 * mean_norm * d)
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let smoothed = t1s_smooth(&raw, &drifted, k).map_err(|e| e.to_string())?;
        let by_t1s: Vec<String> = drifted.iter().map(|x| zsl_predict(&smoothed, x).unwrap()).collect();
        let by_dap: Vec<String> = drifted.iter().map(|x| dap_predict(&raw, x).unwrap()).collect();
        let (at, ad) = (
            class_mean_accuracy(&test.class_set, &truth, &by_t1s),
            class_mean_accuracy(&test.class_set, &truth, &by_dap),
        );
        if at >= ad {
            drift_wins += 1;
        }
        drift_detail.push(format!("{:.0}/{:.0}", 100.0 * at, 100.0 * ad));
    }
    let m = mean(&t1s);
    let msg = format!(
        "ITE+T1S {:.1}% vs chance {:.1}% ({:+.1} points, need >= 20), per seed {:?}; \
         drifted T1S >= DAP in {drift_wins}/5 seeds (T1S/DAP {:?})",
        100.0 * m,
        100.0 * chance,
        100.0 * (m - chance),
        pct(&t1s),
        drift_detail
    );
    if m - chance >= 0.20 && drift_wins >= 4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn t1s_fixed_point() -> Check {
    let mut total = 0;
    let mut agree = 0;
    for trial in 0..200u64 {
        let mut r = rng(600 + trial);
        let classes = r.random_range(2..=8);
        let copies = r.random_range(1..=5);
        let dim = 16;
        let raw: Vec<RawPrototype> = (0..classes)
            .map(|c| RawPrototype::new(format!("class{c:02}"), DenseVector::new(gaussian(&mut r, dim)).unwrap()))
            .collect();
        let proj: Vec<DenseVector> = raw
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.vector.clone(), copies))
            .collect();
        let k = r.random_range(1..=copies);
        let smoothed = t1s_smooth(&raw, &proj, k).map_err(|e| e.to_string())?;
        for x in &proj {
            total += 1;
            if zsl_predict(&smoothed, x).unwrap() == dap_predict(&raw, x).unwrap() {
                agree += 1;
            }
        }
    }
    let msg = format!("T1S and DAP agree on {agree}/{total} projections");
    if agree == total {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn top3(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(3);
    idx
}

fn attribution_recall() -> Check {
    let mut recalls = Vec::new();
    let mut videos = 0;
    for seed in 0..3u64 {
        let dir = tempfile::tempdir().unwrap();
        let mut c = supervised_config(seed);
        c.synth.supervised.frames_per_video = 30;
        c.synth.supervised.videos_per_class = 25;
        let p = Pipeline::new(c, dir.path()).map_err(|e| e.to_string())?;
        run(&p, &["synth", "build-dict"])?;
        let planted: Value =
            serde_json::from_slice(&fs::read(dir.path().join("data/planted.json")).unwrap()).unwrap();
        let truth: BTreeMap<String, Vec<u64>> = planted
            .as_array()
            .unwrap()
            .iter()
            .map(|v| {
                let frames = v["emotional_frames"].as_array().unwrap().iter().map(|f| f.as_u64().unwrap()).collect();
                (v["video_id"].as_str().unwrap().to_string(), frames)
            })
            .collect();
        let mut hits = 0;
        let mut planted_total = 0;
        for split in [Split::Train, Split::Test] {
            p.cmd_attribute(split).map_err(|e| e.to_string())?;
            let name = if split == Split::Train { "train" } else { "test" };
            let report: Value =
                serde_json::from_slice(&fs::read(p.out(&format!("attribution/{name}.json"))).unwrap()).unwrap();
            for v in report["videos"].as_array().unwrap() {
                let scores: Vec<f64> = v["frame_scores"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
                let want = &truth[v["video_id"].as_str().unwrap()];
                if scores.len() != 30 || want.len() != 3 {
                    return Err(format!("expected 3 planted frames of 30, got {} of {}", want.len(), scores.len()));
                }
                let got = top3(&scores);
                hits += want.iter().filter(|f| got.contains(&(**f as usize))).count();
                planted_total += want.len();
                videos += 1;
            }
        }
        recalls.push(hits as f64 / planted_total as f64);
    }
    let m = mean(&recalls);
    let msg = format!(
        "top-3 recall {m:.3} (>= 0.9) over {videos} videos in 3 seeds, per seed {:?}",
        recalls.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
    );
    if m >= 0.9 && videos == 300 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn summary_optimality() -> Check {
    let mut worst_ratio: f64 = 1.0;
    let mut worst_reeval: f64 = 0.0;
    let mut limit_failures = Vec::new();
    for v in 0..50u64 {
        let mut r = rng(700 + v);
        let (dict, centers) = random_dictionary(&mut r, 32, 16);
        let frames: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..16).map(|_| r.random::<f64>()).collect())
            .collect();
        let f = DenseMatrix::from_rows(&frames).unwrap();
        let k = default_neighbors(32);
        let a = common::attribution(&frames, &centers, k);
        let rep = common::representativeness(&frames);
        for lambda in [0.0, 0.5, 2.0] {
            let sel = summarize(&f, &dict, k, lambda, 3, Representativeness::Mean).map_err(|e| e.to_string())?;
            let value = common::summary_objective(&a, &rep, lambda, &sel.indices);
            worst_reeval = worst_reeval.max((value - sel.objective).abs());
            let best = common::best_triple(&a, &rep, lambda);
            worst_ratio = worst_ratio.min(value / best);
        }

        let argmax = |xs: &[f64]| {
            (0..xs.len()).fold(0, |b, i| if xs[i] > xs[b] { i } else { b })
        };
        let pick = |lambda: f64, budget: usize| {
            summarize(&f, &dict, k, lambda, budget, Representativeness::Mean).unwrap()
        };
        if pick(0.0, 1).indices != vec![argmax(&a)] {
            limit_failures.push(format!("video {v}: lambda=0 budget=1"));
        }
        if !pick(0.0, 3).indices.contains(&argmax(&a)) {
            limit_failures.push(format!("video {v}: lambda=0 budget=3"));
        }
        if pick(1e6, 1).indices != vec![argmax(&rep)] {
            limit_failures.push(format!("video {v}: lambda=1e6 budget=1"));
        }
        let mut by_r = top3(&rep);
        by_r.sort_unstable();
        if pick(1e6, 3).indices != by_r {
            limit_failures.push(format!("video {v}: lambda=1e6 budget=3"));
        }
    }
    let msg = format!(
        "worst greedy/exhaustive ratio {worst_ratio:.4} (>= 0.95) over 50 videos x 3 lambdas, \
         objective re-evaluation error {worst_reeval:.1e}, limit-case mismatches {}",
        limit_failures.len()
    );
    if worst_ratio >= 0.95 && worst_reeval <= 1e-9 && limit_failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}: {limit_failures:?}"))
    }
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let commands = ["synth", "build-dict", "encode", "train", "eval"];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let p = Pipeline::new(supervised_config(11), dir.path()).map_err(|e| e.to_string())?;
        run(&p, &commands)?;
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<String> = fa
        .iter()
        .filter(|(k, v)| fb.get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let bytes: usize = fa.values().map(Vec::len).sum();
    let msg = format!(
        "{} files ({bytes} bytes) compared across two runs, {} differ",
        fa.len(),
        differing.len()
    );
    if differing.is_empty() && fa.len() == fb.len() && fa.keys().any(|k| k.ends_with("metrics.json")) {
        Ok(msg)
    } else {
        Err(format!("{msg}: {differing:?}"))
    }
}

fn cluster_trend() -> Check {
    let mut wins = 0;
    let mut detail = Vec::new();
    for seed in 0..5u64 {
        let dir = tempfile::tempdir().unwrap();
        synth_supervised(dir.path(), seed)?;
        let small = supervised_accuracy(dir.path(), seed, EncodingKind::Ite, 16)?;
        let large = supervised_accuracy(dir.path(), seed, EncodingKind::Ite, 256)?;
        if large >= small {
            wins += 1;
        }
        detail.push(format!("{:.1}/{:.1}", 100.0 * large, 100.0 * small));
    }
    let msg = format!("D=256 >= D=16 in {wins}/5 seeds (need 4), accuracy D256/D16 {detail:?}");
    if wins >= 4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "encoding matches brute-force oracle", limit: Some(Duration::from_secs(10)), run: encoding_oracle },
        Criterion { id: 2, name: "spherical k-means correctness", limit: Some(Duration::from_secs(30)), run: kmeans_correctness },
        Criterion { id: 3, name: "SVM solver validity", limit: Some(Duration::from_secs(60)), run: svm_validity },
        Criterion { id: 4, name: "ITE beats AvgP under sparsity", limit: Some(Duration::from_secs(180)), run: ite_beats_avgp },
        Criterion { id: 5, name: "zero-shot beats chance, T1S robust to drift", limit: Some(Duration::from_secs(120)), run: zero_shot },
        Criterion { id: 6, name: "T1S fixed point equals DAP", limit: None, run: t1s_fixed_point },
        Criterion { id: 7, name: "attribution recovers planted frames", limit: Some(Duration::from_secs(20)), run: attribution_recall },
        Criterion { id: 8, name: "summarization optimality gap", limit: Some(Duration::from_secs(30)), run: summary_optimality },
        Criterion { id: 9, name: "end-to-end determinism", limit: None, run: determinism },
        Criterion { id: 10, name: "cluster-count trend", limit: None, run: cluster_trend },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let over = c.limit.is_some_and(|l| elapsed > l);
        let (ok, detail) = match result {
            Ok(d) => (!over, d),
            Err(d) => (false, d),
        };
        let timing = match c.limit {
            Some(l) => format!("{:.1} s, limit {} s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.1} s", elapsed.as_secs_f64()),
        };
        println!(
            "criterion {:>2} {}: {} - {detail} [{timing}]",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name
        );
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
