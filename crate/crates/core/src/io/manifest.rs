use std::collections::HashSet;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::vef::read_feature_file;
use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, FrameFeatureMatrix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One record as written in the manifest JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordEntry {
    pub video_id: String,
    /// VEF1 path, relative to the manifest's directory.
    pub features: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Half-open `[start, end)` frame ranges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clips: Option<Vec<[usize; 2]>>,
}

/// The manifest JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub schema_version: u32,
    pub split: Split,
    pub class_set: Vec<String>,
    pub feature_dim: usize,
    /// Sampling stride used by the extractor; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_stride: Option<u32>,
    /// Rate of the indexed (sampled) frames, used to turn frame indices into times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    pub records: Vec<RecordEntry>,
}

#[derive(Debug, Clone)]
pub struct VideoRecord {
    pub video_id: String,
    pub features: FrameFeatureMatrix,
    pub label: Option<String>,
    pub clips: Option<Vec<Range<usize>>>,
}

impl VideoRecord {
    pub fn n_frames(&self) -> usize {
        self.features.rows()
    }
}

/// A fully validated dataset: every feature file loaded and checked.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub split: Split,
    pub class_set: Vec<String>,
    pub feature_dim: usize,
    pub frame_stride: Option<u32>,
    pub fps: Option<f64>,
    pub records: Vec<VideoRecord>,
}

impl DatasetManifest {
    /// Labels of all records; fails if any record is unlabelled.
    pub fn labels(&self) -> Result<Vec<String>> {
        self.records
            .iter()
            .map(|r| {
                r.label
                    .clone()
                    .ok_or_else(|| Error::invalid(format!("record `{}` has no label", r.video_id)))
            })
            .collect()
    }
}

/// Features of the auxiliary emotional images, one row per image.
#[derive(Debug, Clone)]
pub struct AuxiliaryImageSet {
    pub features: DenseMatrix,
}

impl AuxiliaryImageSet {
    pub fn new(features: DenseMatrix) -> Self {
        AuxiliaryImageSet { features }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(AuxiliaryImageSet::new(read_feature_file(path)?))
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }
}

fn manifest_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Loads and validates a manifest and every feature file it references.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let file: ManifestFile = super::read_json(path)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    validate(path, &root, file)
}

fn validate(path: &Path, root: &Path, file: ManifestFile) -> Result<DatasetManifest> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(manifest_err(
            path,
            format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            ),
        ));
    }
    if file.feature_dim == 0 {
        return Err(manifest_err(path, "feature_dim must be positive"));
    }
    if file.class_set.is_empty() {
        return Err(manifest_err(path, "class_set is empty"));
    }
    let classes: HashSet<&str> = file.class_set.iter().map(String::as_str).collect();
    if classes.len() != file.class_set.len() {
        return Err(manifest_err(path, "class_set contains duplicates"));
    }
    if let Some(fps) = file.fps {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(manifest_err(path, "fps must be positive"));
        }
    }

    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(file.records.len());
    for entry in file.records {
        if !seen.insert(entry.video_id.clone()) {
            return Err(manifest_err(
                path,
                format!("duplicate video_id `{}`", entry.video_id),
            ));
        }
        if let Some(label) = &entry.label {
            if !classes.contains(label.as_str()) {
                return Err(manifest_err(
                    path,
                    format!(
                        "record `{}` has label `{label}` outside class_set",
                        entry.video_id
                    ),
                ));
            }
        }
        let feature_path: PathBuf = root.join(&entry.features);
        if !feature_path.is_file() {
            return Err(manifest_err(
                path,
                format!("missing feature file {}", feature_path.display()),
            ));
        }
        let features = read_feature_file(&feature_path)?;
        if features.cols() != file.feature_dim {
            return Err(manifest_err(
                path,
                format!(
                    "record `{}` has feature dim {} but feature_dim is {}",
                    entry.video_id,
                    features.cols(),
                    file.feature_dim
                ),
            ));
        }
        let clips = match entry.clips {
            Some(raw) => Some(validate_clips(path, &entry.video_id, &raw, features.rows())?),
            None => None,
        };
        records.push(VideoRecord {
            video_id: entry.video_id,
            features,
            label: entry.label,
            clips,
        });
    }

    Ok(DatasetManifest {
        split: file.split,
        class_set: file.class_set,
        feature_dim: file.feature_dim,
        frame_stride: file.frame_stride,
        fps: file.fps,
        records,
    })
}

fn validate_clips(
    path: &Path,
    video_id: &str,
    raw: &[[usize; 2]],
    n_frames: usize,
) -> Result<Vec<Range<usize>>> {
    let mut prev_end = 0;
    let mut out = Vec::with_capacity(raw.len());
    for &[start, end] in raw {
        if start >= end || end > n_frames || start < prev_end {
            return Err(manifest_err(
                path,
                format!(
                    "record `{video_id}`: clip [{start}, {end}) must be non-empty, ordered, \
                     disjoint and within [0, {n_frames})"
                ),
            ));
        }
        prev_end = end;
        out.push(start..end);
    }
    Ok(out)
}

pub fn save_manifest(path: impl AsRef<Path>, manifest: &ManifestFile) -> Result<()> {
    super::write_json(path.as_ref(), manifest)
}

/// Zero-shot splits need disjoint label sets and a shared feature space.
pub fn check_zero_shot_split(train: &DatasetManifest, test: &DatasetManifest) -> Result<()> {
    if train.feature_dim != test.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: train.feature_dim,
            found: test.feature_dim,
        });
    }
    let seen: HashSet<&str> = train.class_set.iter().map(String::as_str).collect();
    let overlap: Vec<&str> = test
        .class_set
        .iter()
        .map(String::as_str)
        .filter(|c| seen.contains(c))
        .collect();
    if !overlap.is_empty() {
        return Err(Error::invalid(format!(
            "zero-shot split requires disjoint class sets; shared: {}",
            overlap.join(", ")
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_feature_file;

    fn write_features(dir: &Path, name: &str, rows: usize, cols: usize) {
        let m = DenseMatrix::new(rows, cols, vec![0.5; rows * cols]).unwrap();
        write_feature_file(dir.join(name), &m).unwrap();
    }

    fn manifest(records: Vec<RecordEntry>, classes: &[&str]) -> ManifestFile {
        ManifestFile {
            schema_version: SCHEMA_VERSION,
            split: Split::Train,
            class_set: classes.iter().map(|s| s.to_string()).collect(),
            feature_dim: 3,
            frame_stride: Some(5),
            fps: None,
            records,
        }
    }

    fn entry(id: &str, file: &str, label: &str) -> RecordEntry {
        RecordEntry {
            video_id: id.into(),
            features: file.into(),
            label: Some(label.into()),
            clips: None,
        }
    }

    #[test]
    fn loads_consistent_manifest() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3 {
            write_features(dir.path(), &format!("v{i}.vef"), 2 + i, 3);
        }
        let mut m = manifest(
            vec![
                entry("a", "v0.vef", "joy"),
                entry("b", "v1.vef", "fear"),
                entry("c", "v2.vef", "joy"),
            ],
            &["joy", "fear"],
        );
        m.records[2].clips = Some(vec![[0, 2], [2, 4]]);
        let path = dir.path().join("m.json");
        save_manifest(&path, &m).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.records.len(), 3);
        assert_eq!(loaded.records[2].clips.as_ref().unwrap()[1], 2..4);
        assert_eq!(loaded.frame_stride, Some(5));
    }

    #[test]
    fn rejects_unknown_label() {
        let dir = tempfile::tempdir().unwrap();
        write_features(dir.path(), "v.vef", 2, 3);
        let m = manifest(vec![entry("a", "v.vef", "anger")], &["joy"]);
        let path = dir.path().join("m.json");
        save_manifest(&path, &m).unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("outside class_set"), "{err}");
    }

    #[test]
    fn rejects_missing_file_and_dim_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_features(dir.path(), "v.vef", 2, 4);
        let path = dir.path().join("m.json");

        save_manifest(&path, &manifest(vec![entry("a", "nope.vef", "joy")], &["joy"])).unwrap();
        assert!(load_manifest(&path).unwrap_err().to_string().contains("missing"));

        save_manifest(&path, &manifest(vec![entry("a", "v.vef", "joy")], &["joy"])).unwrap();
        assert!(load_manifest(&path).unwrap_err().to_string().contains("feature dim"));
    }

    #[test]
    fn rejects_overlapping_clips() {
        let dir = tempfile::tempdir().unwrap();
        write_features(dir.path(), "v.vef", 5, 3);
        let mut m = manifest(vec![entry("a", "v.vef", "joy")], &["joy"]);
        m.records[0].clips = Some(vec![[0, 3], [2, 5]]);
        let path = dir.path().join("m.json");
        save_manifest(&path, &m).unwrap();
        assert!(load_manifest(&path).is_err());

        m.records[0].clips = Some(vec![[0, 6]]);
        save_manifest(&path, &m).unwrap();
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(
            &path,
            r#"{"schema_version":1,"split":"train","class_set":["a"],"feature_dim":3,"records":[],"extra":1}"#,
        )
        .unwrap();
        assert!(load_manifest(&path).is_err());
        std::fs::write(
            &path,
            r#"{"schema_version":9,"split":"train","class_set":["a"],"feature_dim":3,"records":[]}"#,
        )
        .unwrap();
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn zero_shot_split_must_be_disjoint() {
        let mk = |classes: &[&str]| DatasetManifest {
            split: Split::Train,
            class_set: classes.iter().map(|s| s.to_string()).collect(),
            feature_dim: 3,
            frame_stride: None,
            fps: None,
            records: vec![],
        };
        assert!(check_zero_shot_split(&mk(&["joy", "fear"]), &mk(&["anger"])).is_ok());
        let err = check_zero_shot_split(&mk(&["joy", "fear"]), &mk(&["fear", "anger"])).unwrap_err();
        assert!(err.to_string().contains("fear"));
    }
}
