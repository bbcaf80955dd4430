//! Python bindings. Matrices cross the boundary as lists of rows of floats.

use std::ops::Range;
use std::path::PathBuf;

use emokit::attribution::{self, Representativeness};
use emokit::dictionary::{self, EmotionDictionary, KMeansConfig};
use emokit::embedding::EmbeddingSpace;
use emokit::encoding::{self, EncodeOptions};
use emokit::io::{self as eio, AuxiliaryImageSet, Split};
use emokit::numeric::{DenseMatrix, DenseVector};
use emokit::pipeline::{self, PipelineConfig};
use emokit::svm::{self, Kernel, TrainParams};
use emokit::zsl::{self, RawPrototype, RegressorKind, RegressorParams};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyModule;

create_exception!(_emokit, EmokitError, PyException, "Base class for emokit errors.");
create_exception!(_emokit, ValidationError, EmokitError, "Invalid input or configuration.");
create_exception!(_emokit, NumericalError, EmokitError, "A computation failed to produce finite results.");

fn py_err(e: emokit::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        ValidationError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for emokit::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).py()
}

fn rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

fn to_python<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| EmokitError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_split(s: &str) -> PyResult<Split> {
    match s {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        other => Err(ValidationError::new_err(format!(
            "split must be `train` or `test`, got `{other}`"
        ))),
    }
}

/// Reads a VEF1 feature file into a list of rows.
#[pyfunction]
fn read_vef(path: PathBuf) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&eio::read_feature_file(path).py()?))
}

/// Writes rows as a VEF1 feature file (values are stored as float32).
#[pyfunction]
fn write_vef(path: PathBuf, data: Vec<Vec<f64>>) -> PyResult<()> {
    eio::write_feature_file(path, &matrix(data)?).py()
}

/// Spherical k-means dictionary of emotion concepts.
#[pyclass(name = "Dictionary", module = "emokit._emokit")]
struct PyDictionary {
    inner: EmotionDictionary,
}

#[pymethods]
impl PyDictionary {
    #[staticmethod]
    #[pyo3(signature = (images, clusters, seed=0, max_iters=100, tol=1e-6, workers=1))]
    fn fit(
        py: Python<'_>,
        images: Vec<Vec<f64>>,
        clusters: usize,
        seed: u64,
        max_iters: usize,
        tol: f64,
        workers: usize,
    ) -> PyResult<Self> {
        let images = AuxiliaryImageSet::new(matrix(images)?);
        let config = KMeansConfig {
            clusters,
            seed,
            max_iters,
            tol,
            workers,
        };
        let inner = py
            .detach(|| dictionary::fit_spherical_kmeans(&images, &config))
            .py()?;
        Ok(PyDictionary { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDictionary {
            inner: dictionary::load_dictionary(path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dictionary::save_dictionary(path, &self.inner).py()
    }

    fn centers(&self) -> Vec<Vec<f64>> {
        rows(self.inner.centers())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.meta.iterations
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.meta.objective
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.meta.objective_trace.clone()
    }

    /// Index of the nearest center for each image.
    fn assign(&self, images: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        dictionary::assign(&AuxiliaryImageSet::new(matrix(images)?), &self.inner).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dictionary(clusters={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

fn neighbors(dict: &EmotionDictionary, k: Option<usize>) -> usize {
    k.unwrap_or_else(|| encoding::default_neighbors(dict.len()))
}

/// Default number of nearest centers for a dictionary of `clusters` centers.
#[pyfunction]
fn default_neighbors(clusters: usize) -> usize {
    encoding::default_neighbors(clusters)
}

/// ITE encoding of one video's frame features.
#[pyfunction]
#[pyo3(signature = (features, dictionary, k=None, normalize=false, clamp_negative=false))]
fn encode_video(
    features: Vec<Vec<f64>>,
    dictionary: &PyDictionary,
    k: Option<usize>,
    normalize: bool,
    clamp_negative: bool,
) -> PyResult<Vec<f64>> {
    let options = EncodeOptions {
        normalize_l1: normalize,
        clamp_negative,
    };
    let k = neighbors(&dictionary.inner, k);
    let enc = encoding::encode_with_options("", &matrix(features)?, &dictionary.inner, k, options)
        .py()?;
    Ok(enc.s.into_inner())
}

/// Mean of the frame features.
#[pyfunction]
fn encode_avgp(features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(encoding::encode_avgp(&matrix(features)?).py()?.into_inner())
}

/// Per-frame attribution scores, plus clip scores when `clips` is given as
/// a list of `(start, end)` frame ranges.
#[pyfunction]
#[pyo3(signature = (features, dictionary, k=None, clips=None))]
fn attribute<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    dictionary: &PyDictionary,
    k: Option<usize>,
    clips: Option<Vec<(usize, usize)>>,
) -> PyResult<Bound<'py, PyAny>> {
    let f = matrix(features)?;
    let k = neighbors(&dictionary.inner, k);
    let result = match clips {
        Some(c) => {
            let ranges: Vec<Range<usize>> = c.into_iter().map(|(a, b)| a..b).collect();
            attribution::attribute_clips(&f, &dictionary.inner, k, &ranges)
        }
        None => attribution::attribute_frames(&f, &dictionary.inner, k),
    }
    .py()?;
    to_python(py, &result)
}

/// Greedy key-frame summary. With `fps` set, the result also carries the
/// time ranges of the summary clips.
#[pyfunction]
#[pyo3(signature = (features, dictionary, budget, k=None, lam=0.5, mode="mean", fps=None, clip_seconds=2.0))]
#[allow(clippy::too_many_arguments)]
fn summarize<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    dictionary: &PyDictionary,
    budget: usize,
    k: Option<usize>,
    lam: f64,
    mode: &str,
    fps: Option<f64>,
    clip_seconds: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "mean" => Representativeness::Mean,
        "sum" => Representativeness::Sum,
        other => {
            return Err(ValidationError::new_err(format!(
                "mode must be `mean` or `sum`, got `{other}`"
            )))
        }
    };
    let f = matrix(features)?;
    let k = neighbors(&dictionary.inner, k);
    let sel = attribution::summarize(&f, &dictionary.inner, k, lam, budget, mode).py()?;
    let mut value = serde_json::to_value(&sel).map_err(|e| EmokitError::new_err(e.to_string()))?;
    if let Some(fps) = fps {
        let duration = f.rows() as f64 / fps;
        let ranges = attribution::select_summary_clips(&sel, clip_seconds, fps, duration).py()?;
        value["ranges"] = serde_json::json!(ranges);
    }
    to_python(py, &value)
}

/// One-vs-rest kernel SVM.
#[pyclass(name = "SupervisedModel", module = "emokit._emokit")]
struct PySupervisedModel {
    inner: svm::SupervisedModel,
}

#[pymethods]
impl PySupervisedModel {
    #[staticmethod]
    #[pyo3(signature = (features, labels, kernel="chi-square", c=1.0, tol=1e-3, seed=0, class_weighting=false))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        features: Vec<Vec<f64>>,
        labels: Vec<String>,
        kernel: &str,
        c: f64,
        tol: f64,
        seed: u64,
        class_weighting: bool,
    ) -> PyResult<Self> {
        let kernel = match kernel {
            "chi-square" => Kernel::ChiSquare,
            "linear" => Kernel::Linear,
            other => {
                return Err(ValidationError::new_err(format!(
                    "kernel must be `chi-square` or `linear`, got `{other}`"
                )))
            }
        };
        let params = TrainParams {
            kernel,
            c,
            tol,
            seed,
            class_weighting,
        };
        let inner = py.detach(|| svm::train(&features, &labels, &params)).py()?;
        Ok(PySupervisedModel { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PySupervisedModel {
            inner: svm::load_model(path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        svm::save_model(path, &self.inner).py()
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes.clone()
    }

    fn decision_values(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.decision_values(&x).py()
    }

    fn predict(&self, py: Python<'_>, features: Vec<Vec<f64>>) -> PyResult<Vec<String>> {
        let preds = py.detach(|| self.inner.predict_batch(&features)).py()?;
        Ok(preds.into_iter().map(|p| p.label).collect())
    }
}

/// Per-class and mean accuracy of a labelling.
#[pyfunction]
fn metrics<'py>(
    py: Python<'py>,
    classes: Vec<String>,
    truth: Vec<String>,
    predicted: Vec<String>,
) -> PyResult<Bound<'py, PyAny>> {
    to_python(py, &svm::compute_metrics(&classes, &truth, &predicted).py()?)
}

/// Linear map from video encodings to word vectors.
#[pyclass(name = "ZeroShotRegressor", module = "emokit._emokit")]
struct PyZeroShotRegressor {
    inner: zsl::ZeroShotRegressor,
}

#[pymethods]
impl PyZeroShotRegressor {
    #[staticmethod]
    #[pyo3(signature = (inputs, targets, kind="svr", c=1.0, epsilon=0.1, lam=1.0, tol=1e-3, max_epochs=1000, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        kind: &str,
        c: f64,
        epsilon: f64,
        lam: f64,
        tol: f64,
        max_epochs: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let kind = match kind {
            "svr" => RegressorKind::Svr,
            "ridge" => RegressorKind::Ridge,
            other => {
                return Err(ValidationError::new_err(format!(
                    "kind must be `svr` or `ridge`, got `{other}`"
                )))
            }
        };
        let params = RegressorParams {
            kind,
            c,
            epsilon,
            lambda: lam,
            tol,
            max_epochs,
            seed,
        };
        let inner = py
            .detach(|| zsl::fit_regressor(&inputs, &targets, &params))
            .py()?;
        Ok(PyZeroShotRegressor { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyZeroShotRegressor {
            inner: zsl::load_regressor(path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        zsl::save_regressor(path, &self.inner).py()
    }

    fn project(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let out = self.inner.project_batch(&features).py()?;
        Ok(out.into_iter().map(DenseVector::into_inner).collect())
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }
}

fn raw_prototypes(classes: Vec<String>, vectors: Vec<Vec<f64>>) -> PyResult<Vec<RawPrototype>> {
    if classes.len() != vectors.len() {
        return Err(ValidationError::new_err(format!(
            "{} class names for {} vectors",
            classes.len(),
            vectors.len()
        )));
    }
    classes
        .into_iter()
        .zip(vectors)
        .map(|(c, v)| Ok(RawPrototype::new(c, DenseVector::new(v).py()?)))
        .collect()
}

fn projected(rows: Vec<Vec<f64>>) -> PyResult<Vec<DenseVector>> {
    rows.into_iter().map(|r| DenseVector::new(r).py()).collect()
}

/// Smooths class prototypes once over the projected test videos and labels
/// every video by its most similar smoothed prototype. Returns
/// `(labels, smoothed_prototypes, k)`.
#[pyfunction]
#[pyo3(signature = (classes, prototypes, projections, k=None))]
fn t1s_predict(
    classes: Vec<String>,
    prototypes: Vec<Vec<f64>>,
    projections: Vec<Vec<f64>>,
    k: Option<usize>,
) -> PyResult<(Vec<String>, Vec<Vec<f64>>, usize)> {
    let raw = raw_prototypes(classes, prototypes)?;
    let proj = projected(projections)?;
    let k = k.unwrap_or_else(|| zsl::default_t1s_neighbors(proj.len()));
    let smoothed = zsl::t1s_smooth(&raw, &proj, k).py()?;
    let labels = proj
        .iter()
        .map(|p| zsl::zsl_predict(&smoothed, p).py())
        .collect::<PyResult<Vec<_>>>()?;
    let vectors = smoothed.iter().map(|s| s.smoothed().to_vec()).collect();
    Ok((labels, vectors, k))
}

/// Labels every projected video by its most similar unsmoothed prototype.
#[pyfunction]
fn dap_predict(
    classes: Vec<String>,
    prototypes: Vec<Vec<f64>>,
    projections: Vec<Vec<f64>>,
) -> PyResult<Vec<String>> {
    let raw = raw_prototypes(classes, prototypes)?;
    projections
        .iter()
        .map(|p| zsl::dap_predict(&raw, p).py())
        .collect()
}

/// Loads a word2vec-style text embedding file as `{word: vector}`.
#[pyfunction]
fn load_embeddings(path: PathBuf) -> PyResult<Vec<(String, Vec<f64>)>> {
    let space: EmbeddingSpace = eio::load_embeddings_text(path).py()?;
    Ok(space
        .vocab()
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), space.row(i).to_vec()))
        .collect())
}

/// Runs pipeline commands from a TOML config (or defaults).
#[pyclass(name = "Pipeline", module = "emokit._emokit")]
struct PyPipeline {
    inner: pipeline::Pipeline,
}

#[pymethods]
impl PyPipeline {
    #[new]
    #[pyo3(signature = (config=None, base_dir=None))]
    fn new(config: Option<PathBuf>, base_dir: Option<PathBuf>) -> PyResult<Self> {
        let (cfg, base) = match config {
            Some(p) => PipelineConfig::load(p).py()?,
            None => (PipelineConfig::default(), PathBuf::from(".")),
        };
        let base = base_dir.unwrap_or(base);
        Ok(PyPipeline {
            inner: pipeline::Pipeline::new(cfg, base).py()?,
        })
    }

    /// The resolved configuration as TOML.
    fn config_toml(&self) -> String {
        self.inner.config.to_toml()
    }

    #[pyo3(signature = (command, split="test"))]
    fn run<'py>(&self, py: Python<'py>, command: &str, split: &str) -> PyResult<Bound<'py, PyAny>> {
        let split = parse_split(split)?;
        let p = &self.inner;
        let out = py
            .detach(|| match command {
                "synth" => p.cmd_synth(),
                "build-dict" => p.cmd_build_dict(),
                "encode" => p.cmd_encode(),
                "train" => p.cmd_train(),
                "predict" => p.cmd_predict(),
                "eval" => p.cmd_eval(),
                "zsl" => p.cmd_zsl(),
                "attribute" => p.cmd_attribute(split),
                "summarize" => p.cmd_summarize(split),
                "report" => p.cmd_report(),
                other => Err(emokit::Error::Config(format!("unknown command `{other}`"))),
            })
            .py()?;
        to_python(py, &out)
    }
}

#[pymodule]
fn _emokit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("EmokitError", py.get_type::<EmokitError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyDictionary>()?;
    m.add_class::<PySupervisedModel>()?;
    m.add_class::<PyZeroShotRegressor>()?;
    m.add_class::<PyPipeline>()?;
    m.add_function(wrap_pyfunction!(read_vef, m)?)?;
    m.add_function(wrap_pyfunction!(write_vef, m)?)?;
    m.add_function(wrap_pyfunction!(default_neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(encode_video, m)?)?;
    m.add_function(wrap_pyfunction!(encode_avgp, m)?)?;
    m.add_function(wrap_pyfunction!(attribute, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(t1s_predict, m)?)?;
    m.add_function(wrap_pyfunction!(dap_predict, m)?)?;
    m.add_function(wrap_pyfunction!(load_embeddings, m)?)?;
    Ok(())
}
