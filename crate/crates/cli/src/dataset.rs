//! Dataset ingestion: a JSON manifest lists one point-set file per measure
//! with optional class labels or regression targets.
//!
//! Manifest shape:
//!
//! ```json
//! {"measures": [
//!   {"file": "m0.txt", "label": 0},
//!   {"file": "m1.txt", "label": 1, "weighted": true}
//! ]}
//! ```
//!
//! Paths are resolved relative to the manifest. `weighted` marks files
//! whose rows lead with a weight column; weights are normalized on load,
//! absent weights are uniform. Entries must either all carry `label`, all
//! carry `target`, or carry neither.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use treealign_core::error::{Error, Result};
use treealign_core::io::read_points_file;
use treealign_core::WeightedPointSet;

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    file: String,
    label: Option<i64>,
    target: Option<f64>,
    #[serde(default)]
    weighted: bool,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    measures: Vec<ManifestEntry>,
}

/// Measures plus optional per-measure supervision.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub measures: Vec<WeightedPointSet>,
    pub labels: Option<Vec<usize>>,
    pub targets: Option<Vec<f64>>,
    pub manifest_path: PathBuf,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }
}

/// Accepts either a manifest file or a directory containing
/// `manifest.json`.
pub fn resolve_manifest(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("manifest.json")
    } else {
        path.to_path_buf()
    }
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest_path = resolve_manifest(manifest_path);
    let text = std::fs::read_to_string(&manifest_path).map_err(|source| Error::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: manifest_path.clone(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if manifest.measures.is_empty() {
        return Err(Error::EmptyInput("manifest has no measures"));
    }

    let base = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut measures = Vec::with_capacity(manifest.measures.len());
    let mut labels = Vec::new();
    let mut targets = Vec::new();
    for entry in &manifest.measures {
        let file = base.join(&entry.file);
        measures.push(read_points_file(&file, entry.weighted)?);
        if let Some(l) = entry.label {
            if l < 0 {
                return Err(Error::InvalidConfig(format!(
                    "label {l} for {} must be nonnegative",
                    entry.file
                )));
            }
            labels.push(l as usize);
        }
        if let Some(t) = entry.target {
            targets.push(t);
        }
    }
    let n = measures.len();
    let labels = match labels.len() {
        0 => None,
        l if l == n => Some(labels),
        l => {
            return Err(Error::InvalidConfig(format!(
                "{l} of {n} measures carry a label; labels must be all or none"
            )))
        }
    };
    let targets = match targets.len() {
        0 => None,
        t if t == n => Some(targets),
        t => {
            return Err(Error::InvalidConfig(format!(
                "{t} of {n} measures carry a target; targets must be all or none"
            )))
        }
    };
    Ok(Dataset {
        measures,
        labels,
        targets,
        manifest_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, content).unwrap();
        p
    }

    #[test]
    fn loads_unweighted_single_point() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "m0.txt", "1.5 2.5\n");
        let manifest = write(
            dir.path(),
            "manifest.json",
            r#"{"measures":[{"file":"m0.txt"}]}"#,
        );
        let ds = load_dataset(&manifest).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.measures[0].weights(), &[1.0]);
        assert!(ds.labels.is_none() && ds.targets.is_none());
    }

    #[test]
    fn normalizes_weight_column() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "m0.txt", "2 0\n2 1\n");
        let manifest = write(
            dir.path(),
            "manifest.json",
            r#"{"measures":[{"file":"m0.txt","weighted":true,"label":3}]}"#,
        );
        let ds = load_dataset(&manifest).unwrap();
        assert_eq!(ds.measures[0].weights(), &[0.5, 0.5]);
        assert_eq!(ds.labels.as_deref(), Some(&[3usize][..]));
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write(
            dir.path(),
            "manifest.json",
            r#"{"measures":[{"file":"gone.txt"}]}"#,
        );
        let err = load_dataset(&manifest).unwrap_err().to_string();
        assert!(err.contains("gone.txt"), "got {err}");
    }

    #[test]
    fn partial_labels_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.txt", "0\n");
        write(dir.path(), "b.txt", "1\n");
        let manifest = write(
            dir.path(),
            "manifest.json",
            r#"{"measures":[{"file":"a.txt","label":0},{"file":"b.txt"}]}"#,
        );
        assert!(load_dataset(&manifest).is_err());
    }

    #[test]
    fn written_dataset_reloads_identically() {
        use treealign_core::io::points_to_text;
        let dir = tempfile::tempdir().unwrap();
        // awkward floats exercise the shortest-round-trip formatting
        let set = WeightedPointSet::new(
            vec![vec![0.125, -3.5], vec![2.0 / 3.0, 1.0e-7]],
            vec![0.3, 0.7],
        )
        .unwrap();
        write(dir.path(), "m0.txt", &points_to_text(&set, true));
        let manifest = write(
            dir.path(),
            "manifest.json",
            r#"{"measures":[{"file":"m0.txt","weighted":true}]}"#,
        );
        let ds = load_dataset(&manifest).unwrap();
        assert_eq!(ds.measures[0], set);
    }

    #[test]
    fn directory_resolves_to_manifest_json() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "m.txt", "0 0\n");
        write(
            dir.path(),
            "manifest.json",
            r#"{"measures":[{"file":"m.txt"}]}"#,
        );
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.len(), 1);
    }
}
