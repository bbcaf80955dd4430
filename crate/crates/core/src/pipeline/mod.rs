//! End-to-end commands over files: each reads its inputs, computes, and only
//! then writes its artifacts under the output directory.

mod config;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{
    attribute_clips, attribute_frames, select_summary_clips, summarize, summary_budget_seconds,
    AttributionResult, Representativeness,
};
use crate::dictionary::{
    fit_spherical_kmeans, load_dictionary, save_dictionary, sidecar_path, EmotionDictionary,
    KMeansConfig,
};
use crate::embedding::{train_skipgram, CorpusStream, EmbeddingSpace};
use crate::encoding::{apply_options, encode_avgp, encode_video, EncodeOptions};
use crate::error::{Error, Result};
use crate::io::{
    check_zero_shot_split, load_embeddings_text, load_manifest, read_feature_file,
    write_feature_file, AuxiliaryImageSet, DatasetManifest, Split,
};
use crate::numeric::{DenseMatrix, DenseVector};
use crate::svm::{compute_metrics, load_model, save_model, train, Metrics, TrainParams};
use crate::synth::{generate_supervised, generate_zero_shot, write_dataset};
use crate::zsl::{
    dap_predict, default_t1s_neighbors, fit_regressor, save_prototypes, save_regressor,
    t1s_smooth, zsl_predict, RawPrototype, RegressorParams,
};

pub use config::{
    DataPaths, DictionarySettings, EncodingKind, EncodingSettings, PipelineConfig,
    SummarySettings, SvmSettings, SynthKind, SynthSettings, ZslMethod, ZslSettings, WORKERS_ENV,
};

pub const DICTIONARY_FILE: &str = "dictionary.vef";
pub const MODEL_FILE: &str = "model.json";
pub const PREDICTIONS_FILE: &str = "predictions.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const REPORT_FILE: &str = "report.json";

/// Derives a per-stage seed from the master seed (FNV-1a of the stage name,
/// mixed with splitmix64).
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Test => "test",
    }
}

/// Encoded videos of one split, as stored next to the VEF1 block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingIndex {
    pub schema_version: u32,
    pub encoding: EncodingKind,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<usize>,
    pub options: EncodeOptions,
    pub class_set: Vec<String>,
    pub video_ids: Vec<String>,
    pub labels: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPrediction {
    pub video_id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub config: PipelineConfig,
    pub encoding: EncodingKind,
    pub classes: Vec<String>,
    pub predictions: Vec<VideoPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: PipelineConfig,
    pub encoding: EncodingKind,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZslReport {
    pub config: PipelineConfig,
    pub method: ZslMethod,
    pub encoding: EncodingKind,
    pub train_classes: Vec<String>,
    pub test_classes: Vec<String>,
    pub k_t1s: Option<usize>,
    /// How many times prototypes were smoothed: 1 for T1S, 0 for DAP.
    pub smoothing_passes: usize,
    pub chance: f64,
    pub metrics: Metrics,
    pub predictions: Vec<VideoPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAttribution {
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub best_frame_seconds: f64,
    #[serde(flatten)]
    pub result: AttributionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub config: PipelineConfig,
    pub split: Split,
    pub neighbors: usize,
    pub videos: Vec<VideoAttribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSummary {
    pub video_id: String,
    pub indices: Vec<usize>,
    pub pick_order: Vec<usize>,
    pub objective: f64,
    pub duration_seconds: f64,
    pub ranges: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub config: PipelineConfig,
    pub split: Split,
    pub lambda: f64,
    pub representativeness: Representativeness,
    pub videos: Vec<VideoSummary>,
}

/// What a command produced, for printing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandOutput {
    pub command: String,
    /// Files written, relative to the output directory (or synth directory).
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

/// A configuration bound to the directory its relative paths start from.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    base: PathBuf,
    workers: usize,
}

impl Pipeline {
    /// Validates the configuration. `base` anchors relative paths.
    pub fn new(config: PipelineConfig, base: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let workers = config.resolved_workers()?;
        Ok(Pipeline {
            config,
            base: base.into(),
            workers,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let (config, base) = PipelineConfig::load(path)?;
        Pipeline::new(config, base)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.output_dir().join(rel)
    }

    fn seed(&self, stage: &str) -> u64 {
        stage_seed(self.config.seed, stage)
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))?;
        pool.install(f)
    }

    fn require(&self, path: &Path, what: &str) -> Result<()> {
        if path.exists() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{what} not found at {}",
                path.display()
            )))
        }
    }

    fn manifest(&self, split: Split) -> Result<DatasetManifest> {
        let path = match split {
            Split::Train => &self.config.data.train_manifest,
            Split::Test => &self.config.data.test_manifest,
        };
        let path = self.resolve(path);
        self.require(&path, &format!("{} manifest", split_name(split)))?;
        let m = load_manifest(&path)?;
        if m.split != split {
            return Err(Error::Manifest {
                path,
                message: format!("declares split {:?}, expected {split:?}", m.split),
            });
        }
        Ok(m)
    }

    fn dictionary(&self) -> Result<EmotionDictionary> {
        let path = self.out(DICTIONARY_FILE);
        self.require(&path, "dictionary (run build-dict first)")?;
        let dict = load_dictionary(&path)?;
        if dict.len() != self.config.dictionary.clusters {
            return Err(Error::Config(format!(
                "dictionary has {} centers but dictionary.clusters = {}",
                dict.len(),
                self.config.dictionary.clusters
            )));
        }
        Ok(dict)
    }

    fn encode_options(&self) -> EncodeOptions {
        EncodeOptions {
            normalize_l1: self.config.encoding.normalize_s,
            clamp_negative: self.config.encoding.clamp_negative,
        }
    }

    fn encode_manifest(
        &self,
        manifest: &DatasetManifest,
        kind: EncodingKind,
        dict: Option<&EmotionDictionary>,
    ) -> Result<Vec<Vec<f64>>> {
        let k = self.config.neighbors();
        let options = self.encode_options();
        manifest
            .records
            .par_iter()
            .map(|r| {
                let mut s = match (kind, dict) {
                    (EncodingKind::Ite, Some(d)) => encode_video(&r.features, d, k)?.s.into_inner(),
                    (EncodingKind::Ite, None) => unreachable!("ITE needs a dictionary"),
                    (EncodingKind::Avgp, _) => encode_avgp(&r.features)?.into_inner(),
                };
                apply_options(&mut s, options);
                Ok(s)
            })
            .collect()
    }

    fn encoding_paths(&self, split: Split, kind: EncodingKind) -> (PathBuf, PathBuf) {
        let stem = format!("encodings/{}_{}", split_name(split), kind.as_str());
        (self.out(&format!("{stem}.vef")), self.out(&format!("{stem}.json")))
    }

    fn load_encodings(
        &self,
        split: Split,
        kind: EncodingKind,
    ) -> Result<(EncodingIndex, Vec<Vec<f64>>)> {
        let (vef, json) = self.encoding_paths(split, kind);
        self.require(&json, "encodings (run encode first)")?;
        let index: EncodingIndex = crate::io::read_json(&json)?;
        let block = read_feature_file(&vef)?;
        if block.rows() != index.video_ids.len() {
            return Err(Error::invalid(format!(
                "{} holds {} rows for {} videos",
                vef.display(),
                block.rows(),
                index.video_ids.len()
            )));
        }
        if index.encoding != kind || index.split != split {
            return Err(Error::invalid(format!(
                "{} does not hold {} encodings",
                json.display(),
                kind.as_str()
            )));
        }
        let rows = block.row_iter().map(<[f64]>::to_vec).collect();
        Ok((index, rows))
    }

    fn rel(&self, path: &Path) -> String {
        path.strip_prefix(self.output_dir())
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned()
    }

    /// Writes a synthetic dataset.
    pub fn cmd_synth(&self) -> Result<CommandOutput> {
        let s = &self.config.synth;
        let dir = match &s.output {
            Some(p) => self.resolve(p),
            None => self
                .resolve(&self.config.data.train_manifest)
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| self.base.clone()),
        };
        let seed = self.seed("synth");
        let data = match s.kind {
            SynthKind::Supervised => generate_supervised(&crate::synth::SynthConfig {
                seed,
                ..s.supervised.clone()
            })?,
            SynthKind::ZeroShot => generate_zero_shot(&crate::synth::ZeroShotSynthConfig {
                seed,
                ..s.zero_shot.clone()
            })?,
        };
        write_dataset(&dir, &data)?;
        let mut artifacts = vec![
            crate::synth::AUXILIARY_FILE.to_string(),
            crate::synth::TRAIN_MANIFEST.to_string(),
            crate::synth::TEST_MANIFEST.to_string(),
            crate::synth::PLANTED_FILE.to_string(),
        ];
        if data.embeddings.is_some() {
            artifacts.push(crate::synth::EMBEDDINGS_FILE.to_string());
        }
        Ok(CommandOutput {
            command: "synth".into(),
            artifacts,
            summary: serde_json::json!({
                "directory": dir.to_string_lossy(),
                "train_videos": data.train.len(),
                "test_videos": data.test.len(),
                "auxiliary_images": data.auxiliary.rows(),
            }),
        })
    }

    /// Fits the spherical k-means dictionary on the auxiliary images.
    pub fn cmd_build_dict(&self) -> Result<CommandOutput> {
        let aux_path = self.resolve(&self.config.data.auxiliary);
        self.require(&aux_path, "auxiliary image features")?;
        let images = AuxiliaryImageSet::load(&aux_path)?;
        let d = &self.config.dictionary;
        let kcfg = KMeansConfig {
            clusters: d.clusters,
            seed: self.seed("dictionary"),
            max_iters: d.max_iters,
            tol: d.tol,
            workers: self.workers,
        };
        let dict = self.install(|| fit_spherical_kmeans(&images, &kcfg))?;
        let path = self.out(DICTIONARY_FILE);
        save_dictionary(&path, &dict)?;
        Ok(CommandOutput {
            command: "build-dict".into(),
            artifacts: vec![self.rel(&path), self.rel(&sidecar_path(&path))],
            summary: serde_json::json!({
                "clusters": dict.len(),
                "iterations": dict.meta.iterations,
                "objective": dict.meta.objective,
            }),
        })
    }

    /// Encodes both splits with the configured encoding.
    pub fn cmd_encode(&self) -> Result<CommandOutput> {
        let kind = self.config.encoding.kind;
        let manifests = [self.manifest(Split::Train)?, self.manifest(Split::Test)?];
        let dict = match kind {
            EncodingKind::Ite => Some(self.dictionary()?),
            EncodingKind::Avgp => None,
        };
        let encoded = self.install(|| {
            manifests
                .iter()
                .map(|m| self.encode_manifest(m, kind, dict.as_ref()))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut artifacts = Vec::new();
        for (m, rows) in manifests.iter().zip(encoded) {
            let (vef, json) = self.encoding_paths(m.split, kind);
            write_feature_file(&vef, &DenseMatrix::from_rows(&rows)?)?;
            let index = EncodingIndex {
                schema_version: 1,
                encoding: kind,
                split: m.split,
                clusters: dict.as_ref().map(EmotionDictionary::len),
                neighbors: dict.as_ref().map(|_| self.config.neighbors()),
                options: self.encode_options(),
                class_set: m.class_set.clone(),
                video_ids: m.records.iter().map(|r| r.video_id.clone()).collect(),
                labels: m.records.iter().map(|r| r.label.clone()).collect(),
            };
            crate::io::write_json(&json, &index)?;
            artifacts.push(self.rel(&vef));
            artifacts.push(self.rel(&json));
        }
        Ok(CommandOutput {
            command: "encode".into(),
            artifacts,
            summary: serde_json::json!({ "encoding": kind.as_str() }),
        })
    }

    fn train_params(&self) -> TrainParams {
        let s = &self.config.svm;
        TrainParams {
            kernel: s.kernel,
            c: s.c,
            tol: s.tol,
            seed: self.seed("svm"),
            class_weighting: s.class_weighting,
        }
    }

    /// Trains the one-vs-rest SVM on the training encodings.
    pub fn cmd_train(&self) -> Result<CommandOutput> {
        let kind = self.config.encoding.kind;
        let (index, rows) = self.load_encodings(Split::Train, kind)?;
        let labels = index
            .labels
            .iter()
            .zip(&index.video_ids)
            .map(|(l, id)| {
                l.clone()
                    .ok_or_else(|| Error::invalid(format!("training video `{id}` has no label")))
            })
            .collect::<Result<Vec<_>>>()?;
        let params = self.train_params();
        let model = self.install(|| train(&rows, &labels, &params))?;
        let path = self.out(MODEL_FILE);
        save_model(&path, &model)?;
        Ok(CommandOutput {
            command: "train".into(),
            artifacts: vec![self.rel(&path), self.rel(&path.with_extension("vef"))],
            summary: serde_json::json!({
                "classes": model.classes,
                "support_vectors": model.support_indices.len(),
            }),
        })
    }

    fn predictions(&self) -> Result<(EncodingIndex, PredictionReport)> {
        let kind = self.config.encoding.kind;
        let model_path = self.out(MODEL_FILE);
        self.require(&model_path, "model (run train first)")?;
        let model = load_model(&model_path)?;
        let (index, rows) = self.load_encodings(Split::Test, kind)?;
        let preds = self.install(|| model.predict_batch(&rows))?;
        let report = PredictionReport {
            config: self.config.clone(),
            encoding: kind,
            classes: model.classes.clone(),
            predictions: index
                .video_ids
                .iter()
                .zip(preds)
                .map(|(id, p)| VideoPrediction {
                    video_id: id.clone(),
                    label: p.label,
                    scores: p.scores,
                })
                .collect(),
        };
        Ok((index, report))
    }

    /// Predicts labels for the test encodings.
    pub fn cmd_predict(&self) -> Result<CommandOutput> {
        let (_, report) = self.predictions()?;
        let path = self.out(PREDICTIONS_FILE);
        crate::io::write_json(&path, &report)?;
        Ok(CommandOutput {
            command: "predict".into(),
            artifacts: vec![self.rel(&path)],
            summary: serde_json::json!({ "videos": report.predictions.len() }),
        })
    }

    /// Predicts the test split and scores it against its labels.
    pub fn cmd_eval(&self) -> Result<CommandOutput> {
        let (index, report) = self.predictions()?;
        let truth = index
            .labels
            .iter()
            .zip(&index.video_ids)
            .map(|(l, id)| {
                l.clone()
                    .ok_or_else(|| Error::invalid(format!("test video `{id}` has no label")))
            })
            .collect::<Result<Vec<_>>>()?;
        let predicted: Vec<String> = report.predictions.iter().map(|p| p.label.clone()).collect();
        let metrics = compute_metrics(&index.class_set, &truth, &predicted)?;
        let eval = EvalReport {
            config: self.config.clone(),
            encoding: report.encoding,
            metrics,
        };
        let pred_path = self.out(PREDICTIONS_FILE);
        let path = self.out(METRICS_FILE);
        crate::io::write_json(&pred_path, &report)?;
        crate::io::write_json(&path, &eval)?;
        Ok(CommandOutput {
            command: "eval".into(),
            artifacts: vec![self.rel(&pred_path), self.rel(&path)],
            summary: serde_json::json!({
                "accuracy": eval.metrics.accuracy,
                "mean_accuracy": eval.metrics.mean_accuracy,
            }),
        })
    }

    fn embedding_space(&self) -> Result<EmbeddingSpace> {
        let data = &self.config.data;
        if let Some(p) = &data.embeddings {
            let p = self.resolve(p);
            self.require(&p, "embeddings")?;
            return load_embeddings_text(&p);
        }
        if let Some(p) = &data.corpus {
            let p = self.resolve(p);
            self.require(&p, "corpus")?;
            let z = &self.config.zsl;
            let mut corpus = CorpusStream::from_file(&p)?;
            corpus.window = z.window;
            corpus.negatives = z.negatives;
            corpus.epochs = z.epochs;
            corpus.learning_rate = z.learning_rate;
            corpus.seed = self.seed("embedding");
            return Ok(train_skipgram(&corpus, z.embedding_dim)?.space);
        }
        Err(Error::Config(
            "zero-shot runs need data.embeddings or data.corpus".into(),
        ))
    }

    /// Zero-shot recognition of the test classes from the training classes.
    pub fn cmd_zsl(&self) -> Result<CommandOutput> {
        let z = &self.config.zsl;
        let train_m = self.manifest(Split::Train)?;
        let test_m = self.manifest(Split::Test)?;
        check_zero_shot_split(&train_m, &test_m)?;
        let space = self.embedding_space()?;
        let train_labels = train_m.labels()?;
        let test_labels = test_m.labels()?;
        let targets = train_labels
            .iter()
            .map(|l| space.lookup(l))
            .collect::<Result<Vec<_>>>()?;
        let raw = test_m
            .class_set
            .iter()
            .map(|c| Ok(RawPrototype::new(c.clone(), space.lookup(c)?)))
            .collect::<Result<Vec<_>>>()?;
        let k_t1s = match z.method {
            ZslMethod::T1s => {
                let n = test_m.records.len();
                let k = z.k_t1s.unwrap_or_else(|| default_t1s_neighbors(n));
                if k > n {
                    return Err(Error::Config(format!(
                        "zsl.k_t1s = {k} exceeds the {n} test videos"
                    )));
                }
                Some(k)
            }
            ZslMethod::Dap => None,
        };
        let dict = match z.encoding {
            EncodingKind::Ite => Some(self.dictionary()?),
            EncodingKind::Avgp => None,
        };
        let params = RegressorParams {
            kind: z.regressor,
            c: z.c,
            epsilon: z.epsilon,
            lambda: z.lambda,
            tol: z.tol,
            max_epochs: z.max_epochs,
            seed: self.seed("regressor"),
        };

        let (reg, projections, smoothed) = self.install(|| {
            let x_train = self.encode_manifest(&train_m, z.encoding, dict.as_ref())?;
            let x_test = self.encode_manifest(&test_m, z.encoding, dict.as_ref())?;
            let reg = fit_regressor(&x_train, &targets, &params)?;
            let projections = reg.project_batch(&x_test)?;
            // the only smoothing call: raw prototypes in, smoothed out
            let smoothed = match k_t1s {
                Some(k) => Some(t1s_smooth(&raw, &projections, k)?),
                None => None,
            };
            Ok((reg, projections, smoothed))
        })?;

        let predicted = projections
            .iter()
            .map(|p| match &smoothed {
                Some(s) => zsl_predict(s, p),
                None => dap_predict(&raw, p),
            })
            .collect::<Result<Vec<_>>>()?;
        let metrics = compute_metrics(&test_m.class_set, &test_labels, &predicted)?;

        let dir = format!("zsl/{}_{}", z.method.as_str(), z.encoding.as_str());
        let reg_path = self.out(&format!("{dir}/regressor.json"));
        let proj_path = self.out(&format!("{dir}/projections.vef"));
        let report_path = self.out(&format!("{dir}/{METRICS_FILE}"));
        save_regressor(&reg_path, &reg)?;
        write_feature_file(&proj_path, &DenseMatrix::from_rows(&projections)?)?;
        let mut artifacts = vec![
            self.rel(&reg_path),
            self.rel(&reg_path.with_extension("vef")),
            self.rel(&proj_path),
        ];
        if let Some(s) = &smoothed {
            let p = self.out(&format!("{dir}/prototypes.txt"));
            save_prototypes(&p, s)?;
            artifacts.push(self.rel(&p));
        }
        let report = ZslReport {
            config: self.config.clone(),
            method: z.method,
            encoding: z.encoding,
            train_classes: train_m.class_set.clone(),
            test_classes: test_m.class_set.clone(),
            k_t1s,
            smoothing_passes: usize::from(smoothed.is_some()),
            chance: 1.0 / test_m.class_set.len() as f64,
            predictions: test_m
                .records
                .iter()
                .zip(predicted)
                .map(|(r, label)| VideoPrediction {
                    video_id: r.video_id.clone(),
                    label,
                    scores: Vec::new(),
                })
                .collect(),
            metrics,
        };
        crate::io::write_json(&report_path, &report)?;
        artifacts.push(self.rel(&report_path));
        Ok(CommandOutput {
            command: "zsl".into(),
            artifacts,
            summary: serde_json::json!({
                "method": z.method.as_str(),
                "encoding": z.encoding.as_str(),
                "mean_accuracy": report.metrics.mean_accuracy,
                "chance": report.chance,
            }),
        })
    }

    fn fps(manifest: &DatasetManifest) -> f64 {
        manifest.fps.unwrap_or(1.0)
    }

    /// Per-frame (and per-clip, when the manifest has clips) attribution.
    pub fn cmd_attribute(&self, split: Split) -> Result<CommandOutput> {
        let m = self.manifest(split)?;
        let dict = self.dictionary()?;
        let k = self.config.neighbors();
        let fps = Self::fps(&m);
        let videos = self.install(|| {
            m.records
                .par_iter()
                .map(|r| {
                    let result = match &r.clips {
                        Some(c) if !c.is_empty() => attribute_clips(&r.features, &dict, k, c)?,
                        _ => attribute_frames(&r.features, &dict, k)?,
                    };
                    Ok(VideoAttribution {
                        video_id: r.video_id.clone(),
                        label: r.label.clone(),
                        best_frame_seconds: result.best_frame as f64 / fps,
                        result,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut csv = String::from("video_id,frame,seconds,score,best\n");
        for v in &videos {
            for (j, s) in v.result.frame_scores.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{j},{},{s},{}\n",
                    v.video_id,
                    j as f64 / fps,
                    u8::from(j == v.result.best_frame)
                ));
            }
        }
        let name = split_name(split);
        let json_path = self.out(&format!("attribution/{name}.json"));
        let csv_path = self.out(&format!("attribution/{name}.csv"));
        let report = AttributionReport {
            config: self.config.clone(),
            split,
            neighbors: k,
            videos,
        };
        crate::io::write_json(&json_path, &report)?;
        crate::io::write_atomic(&csv_path, csv.as_bytes())?;
        Ok(CommandOutput {
            command: "attribute".into(),
            artifacts: vec![self.rel(&json_path), self.rel(&csv_path)],
            summary: serde_json::json!({ "videos": report.videos.len() }),
        })
    }

    /// Key-frame summaries and their time ranges.
    pub fn cmd_summarize(&self, split: Split) -> Result<CommandOutput> {
        let m = self.manifest(split)?;
        let dict = self.dictionary()?;
        let k = self.config.neighbors();
        let s = &self.config.summary;
        let mode = if s.unnormalized {
            Representativeness::Sum
        } else {
            Representativeness::Mean
        };
        let fps = Self::fps(&m);
        let videos = self.install(|| {
            m.records
                .par_iter()
                .map(|r| {
                    let n = r.features.rows();
                    let duration = n as f64 / fps;
                    let budget = s
                        .budget
                        .unwrap_or_else(|| {
                            let secs = summary_budget_seconds(duration);
                            ((secs / s.clip_seconds).ceil() as usize).max(1)
                        })
                        .min(n);
                    let sel = summarize(&r.features, &dict, k, s.lambda, budget, mode)?;
                    let ranges = select_summary_clips(&sel, s.clip_seconds, fps, duration)?;
                    Ok(VideoSummary {
                        video_id: r.video_id.clone(),
                        indices: sel.indices,
                        pick_order: sel.pick_order,
                        objective: sel.objective,
                        duration_seconds: duration,
                        ranges,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let path = self.out(&format!("summaries/{}.json", split_name(split)));
        let report = SummaryReport {
            config: self.config.clone(),
            split,
            lambda: s.lambda,
            representativeness: mode,
            videos,
        };
        crate::io::write_json(&path, &report)?;
        Ok(CommandOutput {
            command: "summarize".into(),
            artifacts: vec![self.rel(&path)],
            summary: serde_json::json!({ "videos": report.videos.len() }),
        })
    }

    /// Collects the metrics written so far into one report.
    pub fn cmd_report(&self) -> Result<CommandOutput> {
        let out = self.output_dir();
        self.require(&out, "output directory")?;
        let read = |p: PathBuf| -> Result<Option<serde_json::Value>> {
            if p.exists() {
                crate::io::read_json(&p).map(Some)
            } else {
                Ok(None)
            }
        };
        let dictionary = read(sidecar_path(&self.out(DICTIONARY_FILE)))?;
        let supervised = read(self.out(METRICS_FILE))?.map(|mut v| {
            v.as_object_mut().map(|o| o.remove("config"));
            v
        });
        let mut zero_shot = serde_json::Map::new();
        let zsl_dir = self.out("zsl");
        if zsl_dir.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&zsl_dir)
                .map_err(|e| Error::io(&zsl_dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_dir())
                .collect();
            entries.sort();
            for dir in entries {
                if let Some(mut v) = read(dir.join(METRICS_FILE))? {
                    if let Some(o) = v.as_object_mut() {
                        o.remove("config");
                        o.remove("predictions");
                    }
                    let name = dir.file_name().unwrap_or_default().to_string_lossy();
                    zero_shot.insert(name.into_owned(), v);
                }
            }
        }
        let report = serde_json::json!({
            "config": self.config,
            "workers": self.workers,
            "dictionary": dictionary,
            "supervised": supervised,
            "zero_shot": zero_shot,
        });
        let path = self.out(REPORT_FILE);
        crate::io::write_json(&path, &report)?;
        Ok(CommandOutput {
            command: "report".into(),
            artifacts: vec![self.rel(&path)],
            summary: serde_json::Value::Null,
        })
    }
}

/// Reads an encodings archive written by `encode`.
pub fn read_encodings(vef: impl AsRef<Path>) -> Result<Vec<DenseVector>> {
    let block = read_feature_file(vef)?;
    block
        .row_iter()
        .map(|r| DenseVector::new(r.to_vec()))
        .collect()
}
