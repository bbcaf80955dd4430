//! Pipeline configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svm::Kernel;
use crate::synth::{SynthConfig, ZeroShotSynthConfig};
use crate::zsl::RegressorKind;

/// Environment variable giving the default worker count.
pub const WORKERS_ENV: &str = "EMOKIT_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every stage derives its own seed from it.
    pub seed: u64,
    /// Threads per stage. `None` falls back to `EMOKIT_WORKERS`, then 1.
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
    pub data: DataPaths,
    pub dictionary: DictionarySettings,
    pub encoding: EncodingSettings,
    pub svm: SvmSettings,
    pub zsl: ZslSettings,
    pub summary: SummarySettings,
    pub synth: SynthSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            workers: None,
            output_dir: PathBuf::from("out"),
            data: DataPaths::default(),
            dictionary: DictionarySettings::default(),
            encoding: EncodingSettings::default(),
            svm: SvmSettings::default(),
            zsl: ZslSettings::default(),
            summary: SummarySettings::default(),
            synth: SynthSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub auxiliary: PathBuf,
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    /// Word vectors in text format; used by zero-shot runs.
    pub embeddings: Option<PathBuf>,
    /// Plain-text corpus to train word vectors on when no embeddings are given.
    pub corpus: Option<PathBuf>,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            auxiliary: PathBuf::from("data/auxiliary.vef"),
            train_manifest: PathBuf::from("data/train.json"),
            test_manifest: PathBuf::from("data/test.json"),
            embeddings: None,
            corpus: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionarySettings {
    pub clusters: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for DictionarySettings {
    fn default() -> Self {
        DictionarySettings {
            clusters: crate::dictionary::DEFAULT_CLUSTERS,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    #[default]
    Ite,
    Avgp,
}

impl EncodingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EncodingKind::Ite => "ite",
            EncodingKind::Avgp => "avgp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ite" => Ok(EncodingKind::Ite),
            "avgp" => Ok(EncodingKind::Avgp),
            other => Err(Error::Config(format!(
                "unknown encoding `{other}` (expected ite or avgp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingSettings {
    pub kind: EncodingKind,
    /// Neighbours per frame; `None` means `ceil(D / 10)`.
    pub neighbors: Option<usize>,
    pub normalize_s: bool,
    pub clamp_negative: bool,
}

impl Default for EncodingSettings {
    fn default() -> Self {
        EncodingSettings {
            kind: EncodingKind::Ite,
            neighbors: None,
            normalize_s: false,
            clamp_negative: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSettings {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub class_weighting: bool,
}

impl Default for SvmSettings {
    fn default() -> Self {
        SvmSettings {
            kernel: Kernel::ChiSquare,
            c: 1.0,
            tol: 1e-3,
            class_weighting: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ZslMethod {
    #[default]
    T1s,
    Dap,
}

impl ZslMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ZslMethod::T1s => "t1s",
            ZslMethod::Dap => "dap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "t1s" => Ok(ZslMethod::T1s),
            "dap" => Ok(ZslMethod::Dap),
            other => Err(Error::Config(format!(
                "unknown zero-shot method `{other}` (expected t1s or dap)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZslSettings {
    pub method: ZslMethod,
    pub encoding: EncodingKind,
    pub regressor: RegressorKind,
    pub c: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub tol: f64,
    pub max_epochs: usize,
    /// Test neighbours averaged per prototype; `None` means `max(3, ceil(n / 10))`.
    pub k_t1s: Option<usize>,
    /// Word-vector size when training on a corpus.
    pub embedding_dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ZslSettings {
    fn default() -> Self {
        ZslSettings {
            method: ZslMethod::T1s,
            encoding: EncodingKind::Ite,
            regressor: RegressorKind::Svr,
            c: 1.0,
            epsilon: 0.1,
            lambda: 1.0,
            tol: 1e-3,
            max_epochs: 1000,
            k_t1s: None,
            embedding_dim: 500,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarySettings {
    pub lambda: f64,
    /// Key frames per video; `None` derives it from the summary length rule.
    pub budget: Option<usize>,
    /// Use the raw similarity sum for representativeness instead of the mean.
    pub unnormalized: bool,
    pub clip_seconds: f64,
}

impl Default for SummarySettings {
    fn default() -> Self {
        SummarySettings {
            lambda: crate::attribution::DEFAULT_LAMBDA,
            budget: None,
            unnormalized: false,
            clip_seconds: crate::attribution::DEFAULT_CLIP_SECONDS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    #[default]
    Supervised,
    ZeroShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub kind: SynthKind,
    /// Where `synth` writes; defaults to the directory of `data.train_manifest`.
    pub output: Option<PathBuf>,
    pub supervised: SynthConfig,
    pub zero_shot: ZeroShotSynthConfig,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            kind: SynthKind::Supervised,
            output: None,
            supervised: SynthConfig::default(),
            zero_shot: ZeroShotSynthConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be a positive number, got {v}")))
    }
}

impl PipelineConfig {
    /// Reads a TOML file. Relative paths inside it are taken relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((config, base))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Worker count: the config value, else `EMOKIT_WORKERS`, else 1.
    pub fn resolved_workers(&self) -> Result<usize> {
        let n = match self.workers {
            Some(n) => n,
            None => match std::env::var(WORKERS_ENV) {
                Ok(v) => v.trim().parse().map_err(|_| {
                    Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))
                })?,
                Err(_) => 1,
            },
        };
        if n == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(n)
    }

    /// Checks hyperparameter ranges. Paths are checked by each command,
    /// since different commands read different inputs.
    pub fn validate(&self) -> Result<()> {
        self.resolved_workers()?;
        let d = &self.dictionary;
        if d.clusters == 0 {
            return Err(Error::Config("dictionary.clusters must be at least 1".into()));
        }
        if d.max_iters == 0 {
            return Err(Error::Config("dictionary.max_iters must be at least 1".into()));
        }
        if !(d.tol.is_finite() && d.tol >= 0.0) {
            return Err(Error::Config("dictionary.tol must be >= 0".into()));
        }
        if let Some(k) = self.encoding.neighbors {
            if k == 0 || k > d.clusters {
                return Err(Error::Config(format!(
                    "encoding.neighbors = {k} must lie in [1, {}]",
                    d.clusters
                )));
            }
        }
        positive("svm.c", self.svm.c)?;
        positive("svm.tol", self.svm.tol)?;
        let z = &self.zsl;
        positive("zsl.c", z.c)?;
        positive("zsl.lambda", z.lambda)?;
        positive("zsl.tol", z.tol)?;
        positive("zsl.learning_rate", z.learning_rate)?;
        if !(z.epsilon.is_finite() && z.epsilon >= 0.0) {
            return Err(Error::Config("zsl.epsilon must be >= 0".into()));
        }
        if z.max_epochs == 0 {
            return Err(Error::Config("zsl.max_epochs must be at least 1".into()));
        }
        if z.k_t1s == Some(0) {
            return Err(Error::Config("zsl.k_t1s must be at least 1".into()));
        }
        if z.embedding_dim < 2 || z.window == 0 || z.negatives == 0 || z.epochs == 0 {
            return Err(Error::Config(
                "zsl.embedding_dim >= 2 and window, negatives, epochs >= 1 are required".into(),
            ));
        }
        let s = &self.summary;
        if !(s.lambda.is_finite() && s.lambda >= 0.0) {
            return Err(Error::Config("summary.lambda must be >= 0".into()));
        }
        if s.budget == Some(0) {
            return Err(Error::Config("summary.budget must be at least 1".into()));
        }
        positive("summary.clip_seconds", s.clip_seconds)?;
        match self.synth.kind {
            SynthKind::Supervised => self.synth.supervised.validate()?,
            SynthKind::ZeroShot => self.synth.zero_shot.validate()?,
        }
        Ok(())
    }

    /// Neighbours per frame after applying the default.
    pub fn neighbors(&self) -> usize {
        self.encoding
            .neighbors
            .unwrap_or_else(|| crate::encoding::default_neighbors(self.dictionary.clusters))
    }
}
