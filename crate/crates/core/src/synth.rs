//! Planted-structure synthetic datasets.
//!
//! Supervised sets: each class owns a family of emotional "concepts", each a
//! shared appearance mode tilted towards a class direction. Videos are mostly
//! neutral scene frames (larger norm, unrelated directions) with a sparse set
//! of emotional frames. The auxiliary image set samples the concepts.
//!
//! Zero-shot sets: class word vectors live in a small embedding space and a
//! fixed linear map turns a word vector into frame features. Unseen classes
//! are mixtures of seen ones, so the regression from seen classes transfers.
//!
//! Values are rounded to `f32` on generation so the in-memory dataset equals
//! what the VEF1 files hold.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::io::{save_embeddings_text, save_manifest, write_feature_file};
use crate::io::{ManifestFile, RecordEntry, Split, SCHEMA_VERSION};
use crate::numeric::{normalize_in_place, DenseMatrix};

const CLASS_NAMES: [&str; 8] = [
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "sadness",
    "surprise",
    "trust",
];

fn class_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match CLASS_NAMES.get(i) {
            Some(name) => name.to_string(),
            None => format!("emotion{i}"),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub videos_per_class: usize,
    pub frames_per_video: usize,
    pub feature_dim: usize,
    /// Fraction of frames carrying emotional content.
    pub sparsity: f64,
    /// Appearance modes shared by all classes; each class has one concept per mode.
    pub appearances: usize,
    /// Weight of the class direction inside each concept.
    pub class_weight: f64,
    pub aux_per_concept: usize,
    pub neutral_topics: usize,
    /// Share of feature coordinates used by emotional content.
    pub emotion_fraction: f64,
    /// Weight of a scene topic's component on the emotional coordinates.
    pub scene_leak: f64,
    /// Norm of neutral frames relative to emotional ones.
    pub neutral_scale: f64,
    pub noise: f64,
    pub test_fraction: f64,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 4,
            videos_per_class: 60,
            frames_per_video: 30,
            feature_dim: 64,
            sparsity: 0.1,
            appearances: 8,
            class_weight: 1.0,
            aux_per_concept: 30,
            neutral_topics: 24,
            emotion_fraction: 0.5,
            scene_leak: 0.1,
            neutral_scale: 3.0,
            noise: 0.01,
            test_fraction: 0.5,
            fps: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.classes < 2 {
            return bad("synth.classes must be at least 2");
        }
        if self.videos_per_class < 2 || self.frames_per_video == 0 {
            return bad("synth needs at least 2 videos per class and 1 frame per video");
        }
        if self.feature_dim < 8 {
            return bad("synth.feature_dim must be at least 8");
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return bad("synth.sparsity must lie in (0, 1]");
        }
        if self.appearances == 0 || self.aux_per_concept == 0 || self.neutral_topics < 2 {
            return bad("synth needs appearances, aux images and at least 2 neutral topics");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("synth.test_fraction must lie in (0, 1)");
        }
        if !(self.emotion_fraction > 0.0 && self.emotion_fraction < 1.0) {
            return bad("synth.emotion_fraction must lie in (0, 1)");
        }
        for (name, v) in [
            ("class_weight", self.class_weight),
            ("neutral_scale", self.neutral_scale),
            ("scene_leak", self.scene_leak),
            ("noise", self.noise),
            ("fps", self.fps),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("synth.{name} must be finite and >= 0")));
            }
        }
        if self.fps == 0.0 {
            return bad("synth.fps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    pub video_id: String,
    pub label: String,
    pub features: DenseMatrix,
    /// Indices of the planted emotional frames, increasing.
    pub emotional_frames: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub train_classes: Vec<String>,
    pub test_classes: Vec<String>,
    pub auxiliary: DenseMatrix,
    pub train: Vec<SynthVideo>,
    pub test: Vec<SynthVideo>,
    pub fps: f64,
    /// Class word vectors, for zero-shot sets.
    pub embeddings: Option<EmbeddingSpace>,
}

fn round32(v: f64) -> f64 {
    v as f32 as f64
}

/// A unit vector with `support` random positive coordinates inside `coords`.
fn sparse_direction(
    rng: &mut ChaCha8Rng,
    dim: usize,
    coords: std::ops::Range<usize>,
    support: usize,
) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for i in sample(rng, coords.len(), support.min(coords.len())) {
        v[coords.start + i] = rng.random_range(0.5..1.5);
    }
    normalize_in_place(&mut v);
    v
}

fn jittered(
    rng: &mut ChaCha8Rng,
    base: &[f64],
    scale: f64,
    noise: &Normal<f64>,
) -> impl Iterator<Item = f64> + use<> {
    let s = scale * rng.random_range(0.8..1.2);
    let out: Vec<f64> = base
        .iter()
        .map(|b| round32(b * s + noise.sample(rng).abs()))
        .collect();
    out.into_iter()
}

/// Generates a supervised dataset; class sets of both splits are equal.
pub fn generate_supervised(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = config.feature_dim;
    let support = (d / 10).max(3);
    // emotional and scene content mostly occupy different feature coordinates;
    // the additive noise is what they share
    let split = ((config.emotion_fraction * d as f64).round() as usize).clamp(1, d - 1);
    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::Config(e.to_string()))?;
    let classes = class_names(config.classes);

    let shared: Vec<Vec<f64>> = (0..config.appearances)
        .map(|_| sparse_direction(&mut rng, d, 0..split, support))
        .collect();
    let class_dirs: Vec<Vec<f64>> = (0..config.classes)
        .map(|_| sparse_direction(&mut rng, d, 0..split, support))
        .collect();
    let concepts: Vec<Vec<Vec<f64>>> = class_dirs
        .iter()
        .map(|u| {
            shared
                .iter()
                .map(|m| {
                    let mut c: Vec<f64> = m
                        .iter()
                        .zip(u)
                        .map(|(a, b)| a + config.class_weight * b)
                        .collect();
                    normalize_in_place(&mut c);
                    c
                })
                .collect()
        })
        .collect();
    let topics: Vec<Vec<f64>> = (0..config.neutral_topics)
        .map(|_| {
            let own = sparse_direction(&mut rng, d, split..d, support + 2);
            let leak = sparse_direction(&mut rng, d, 0..split, support);
            let mut t: Vec<f64> = own
                .iter()
                .zip(&leak)
                .map(|(a, b)| a + config.scene_leak * b)
                .collect();
            normalize_in_place(&mut t);
            t
        })
        .collect();

    let mut aux = Vec::new();
    for family in &concepts {
        for c in family {
            for _ in 0..config.aux_per_concept {
                aux.extend(jittered(&mut rng, c, 1.0, &noise));
            }
        }
    }
    let n_aux = aux.len() / d;
    let auxiliary = DenseMatrix::new(n_aux, d, aux)?;

    let n_frames = config.frames_per_video;
    let n_emotional = ((config.sparsity * n_frames as f64).round() as usize).clamp(1, n_frames);
    let n_test = ((config.test_fraction * config.videos_per_class as f64).round() as usize)
        .clamp(1, config.videos_per_class - 1);

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (ci, class) in classes.iter().enumerate() {
        for v in 0..config.videos_per_class {
            let mut emotional: Vec<usize> = sample(&mut rng, n_frames, n_emotional).into_vec();
            emotional.sort_unstable();
            // one appearance mode per video
            let m = rng.random_range(0..config.appearances);
            let t1 = rng.random_range(0..topics.len());
            let t2 = (t1 + rng.random_range(1..topics.len())) % topics.len();
            let mut data = Vec::with_capacity(n_frames * d);
            for j in 0..n_frames {
                if emotional.binary_search(&j).is_ok() {
                    data.extend(jittered(&mut rng, &concepts[ci][m], 1.0, &noise));
                } else {
                    let w = rng.random_range(0.0..1.0);
                    let mut scene: Vec<f64> = topics[t1]
                        .iter()
                        .zip(&topics[t2])
                        .map(|(a, b)| w * a + (1.0 - w) * b)
                        .collect();
                    normalize_in_place(&mut scene);
                    data.extend(jittered(&mut rng, &scene, config.neutral_scale, &noise));
                }
            }
            let video = SynthVideo {
                video_id: format!("{class}_{v:03}"),
                label: class.clone(),
                features: DenseMatrix::new(n_frames, d, data)?,
                emotional_frames: emotional,
            };
            if v < config.videos_per_class - n_test {
                train.push(video);
            } else {
                test.push(video);
            }
        }
    }
    Ok(SynthDataset {
        train_classes: classes.clone(),
        test_classes: classes,
        auxiliary,
        train,
        test,
        fps: config.fps,
        embeddings: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroShotSynthConfig {
    pub seen_classes: usize,
    pub unseen_classes: usize,
    pub embedding_dim: usize,
    pub videos_per_class: usize,
    pub frames_per_video: usize,
    pub feature_dim: usize,
    pub sparsity: f64,
    pub aux_images: usize,
    /// Spread of frame word vectors around their class vector.
    pub class_spread: f64,
    /// Constant added to every feature coordinate.
    pub feature_offset: f64,
    pub neutral_scale: f64,
    pub noise: f64,
    pub fps: f64,
    pub seed: u64,
}

impl Default for ZeroShotSynthConfig {
    fn default() -> Self {
        ZeroShotSynthConfig {
            seen_classes: 4,
            unseen_classes: 2,
            embedding_dim: 16,
            videos_per_class: 40,
            frames_per_video: 20,
            feature_dim: 48,
            sparsity: 0.3,
            aux_images: 1200,
            class_spread: 0.15,
            feature_offset: 0.5,
            neutral_scale: 1.0,
            noise: 0.02,
            fps: 1.0,
            seed: 0,
        }
    }
}

impl ZeroShotSynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.seen_classes < 2 || self.unseen_classes < 1 {
            return bad("zero-shot synth needs >= 2 seen and >= 1 unseen class");
        }
        if self.seen_classes + self.unseen_classes > CLASS_NAMES.len() {
            return bad("zero-shot synth supports at most 8 classes in total");
        }
        if self.embedding_dim < 2 || self.feature_dim < 4 {
            return bad("zero-shot synth needs embedding_dim >= 2 and feature_dim >= 4");
        }
        if self.videos_per_class < 2 || self.frames_per_video == 0 || self.aux_images == 0 {
            return bad("zero-shot synth needs videos, frames and auxiliary images");
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return bad("synth.sparsity must lie in (0, 1]");
        }
        for (name, v) in [
            ("class_spread", self.class_spread),
            ("feature_offset", self.feature_offset),
            ("neutral_scale", self.neutral_scale),
            ("noise", self.noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("synth.{name} must be finite and >= 0")));
            }
        }
        if !(self.fps > 0.0) {
            return bad("synth.fps must be positive");
        }
        Ok(())
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Generates a zero-shot dataset: seen classes for training, unseen classes
/// for testing, plus word vectors for all of them.
pub fn generate_zero_shot(config: &ZeroShotSynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.embedding_dim;
    let d = config.feature_dim;
    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::Config(e.to_string()))?;
    let names = class_names(config.seen_classes + config.unseen_classes);
    let (seen, unseen) = names.split_at(config.seen_classes);

    let mut psi: Vec<Vec<f64>> = (0..config.seen_classes)
        .map(|_| {
            let mut v = gaussian_vec(&mut rng, k);
            normalize_in_place(&mut v);
            v
        })
        .collect();
    // unseen class u mixes seen classes 2u and 2u+1 (cyclically), so
    // different unseen classes draw on different seen classes where possible
    for u in 0..config.unseen_classes {
        let a = (2 * u) % config.seen_classes;
        let b = (2 * u + 1) % config.seen_classes;
        let w = rng.random_range(0.4..0.6);
        let jitter = gaussian_vec(&mut rng, k);
        let mut v: Vec<f64> = (0..k)
            .map(|i| w * psi[a][i] + (1.0 - w) * psi[b][i] + 0.1 * jitter[i])
            .collect();
        normalize_in_place(&mut v);
        psi.push(v);
    }

    // feature = A psi + offset
    let a_map: Vec<Vec<f64>> = (0..d).map(|_| gaussian_vec(&mut rng, k)).collect();
    let offset: Vec<f64> = (0..d)
        .map(|_| config.feature_offset * rng.random_range(0.8..1.2))
        .collect();
    let neutral_map: Vec<Vec<f64>> = (0..d).map(|_| gaussian_vec(&mut rng, k)).collect();
    let render = |rng: &mut ChaCha8Rng, map: &[Vec<f64>], z: &[f64], scale: f64| -> Vec<f64> {
        map.iter()
            .zip(&offset)
            .map(|(row, o)| {
                let lin: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
                round32(scale * lin + o + noise.sample(rng))
            })
            .collect()
    };

    // auxiliary images spread over the whole word-vector sphere
    let mut aux = Vec::with_capacity(config.aux_images * d);
    for _ in 0..config.aux_images {
        let mut z = gaussian_vec(&mut rng, k);
        normalize_in_place(&mut z);
        aux.extend(render(&mut rng, &a_map, &z, 1.0));
    }
    let auxiliary = DenseMatrix::new(config.aux_images, d, aux)?;

    let n_frames = config.frames_per_video;
    let n_emotional = ((config.sparsity * n_frames as f64).round() as usize).clamp(1, n_frames);
    let mut make_videos = |classes: &[String], offset_idx: usize| -> Result<Vec<SynthVideo>> {
        let mut out = Vec::new();
        for (ci, class) in classes.iter().enumerate() {
            let center = &psi[offset_idx + ci];
            for v in 0..config.videos_per_class {
                let mut emotional: Vec<usize> = sample(&mut rng, n_frames, n_emotional).into_vec();
                emotional.sort_unstable();
                let mut data = Vec::with_capacity(n_frames * d);
                for j in 0..n_frames {
                    let z = gaussian_vec(&mut rng, k);
                    if emotional.binary_search(&j).is_ok() {
                        let mut w: Vec<f64> = center
                            .iter()
                            .zip(&z)
                            .map(|(c, e)| c + config.class_spread * e)
                            .collect();
                        normalize_in_place(&mut w);
                        data.extend(render(&mut rng, &a_map, &w, 1.0));
                    } else {
                        let mut w = z;
                        normalize_in_place(&mut w);
                        data.extend(render(&mut rng, &neutral_map, &w, config.neutral_scale));
                    }
                }
                out.push(SynthVideo {
                    video_id: format!("{class}_{v:03}"),
                    label: class.clone(),
                    features: DenseMatrix::new(n_frames, d, data)?,
                    emotional_frames: emotional,
                });
            }
        }
        Ok(out)
    };
    let train = make_videos(seen, 0)?;
    let test = make_videos(unseen, config.seen_classes)?;

    // a few distractor words keep the vocabulary from being just the labels
    let mut vocab = names.clone();
    let mut rows: Vec<Vec<f64>> = psi.clone();
    for i in 0..4 {
        vocab.push(format!("word{i}"));
        let mut v = gaussian_vec(&mut rng, k);
        normalize_in_place(&mut v);
        rows.push(v);
    }
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(round32).collect())
        .collect();
    let embeddings = EmbeddingSpace::new(vocab, DenseMatrix::from_rows(&rows)?)?;

    Ok(SynthDataset {
        train_classes: seen.to_vec(),
        test_classes: unseen.to_vec(),
        auxiliary,
        train,
        test,
        fps: config.fps,
        embeddings: Some(embeddings),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct PlantedFrames {
    video_id: String,
    emotional_frames: Vec<usize>,
}

/// File names written by [`write_dataset`], relative to its directory.
pub const AUXILIARY_FILE: &str = "auxiliary.vef";
pub const TRAIN_MANIFEST: &str = "train.json";
pub const TEST_MANIFEST: &str = "test.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const PLANTED_FILE: &str = "planted.json";

/// Writes the dataset as VEF1 files plus train/test manifests.
pub fn write_dataset(dir: impl AsRef<Path>, data: &SynthDataset) -> Result<()> {
    let dir = dir.as_ref();
    write_feature_file(dir.join(AUXILIARY_FILE), &data.auxiliary)?;
    let dim = data.auxiliary.cols();
    let mut planted = Vec::new();
    for (split, videos, classes, name) in [
        (Split::Train, &data.train, &data.train_classes, TRAIN_MANIFEST),
        (Split::Test, &data.test, &data.test_classes, TEST_MANIFEST),
    ] {
        let mut records = Vec::with_capacity(videos.len());
        for v in videos {
            let rel = format!("videos/{}.vef", v.video_id);
            write_feature_file(dir.join(&rel), &v.features)?;
            records.push(RecordEntry {
                video_id: v.video_id.clone(),
                features: rel,
                label: Some(v.label.clone()),
                clips: None,
            });
            planted.push(PlantedFrames {
                video_id: v.video_id.clone(),
                emotional_frames: v.emotional_frames.clone(),
            });
        }
        save_manifest(
            dir.join(name),
            &ManifestFile {
                schema_version: SCHEMA_VERSION,
                split,
                class_set: classes.clone(),
                feature_dim: dim,
                frame_stride: None,
                fps: Some(data.fps),
                records,
            },
        )?;
    }
    crate::io::write_json(&dir.join(PLANTED_FILE), &planted)?;
    if let Some(space) = &data.embeddings {
        save_embeddings_text(dir.join(EMBEDDINGS_FILE), space)?;
    }
    Ok(())
}
