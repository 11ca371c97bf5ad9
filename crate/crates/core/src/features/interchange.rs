//! Tensor interchange with the model exporter: NPY v1.0 `<f4` tensors plus a
//! `manifest.json` describing each tensor.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use ndarray::ArrayD;
use ndarray_npy::{ReadNpyExt, WriteNpyExt};
use serde::{Deserialize, Serialize};

use super::Representation;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Axis order of a feature-map tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TensorLayout {
    /// Channels first: `C x ...spatial`.
    #[default]
    Channels,
    /// Transformer tokens: `T x C`.
    Tokens,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Audio file this tensor was computed from, relative to the manifest.
    pub audio: String,
    /// Tensor file, relative to the manifest.
    pub tensor: String,
    pub time_axis: Option<usize>,
    pub source_id: String,
    /// Present for feature maps that feed style embeddings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<TensorLayout>,
    /// Window (seconds) the exporter padded or truncated the audio to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_window: Option<f64>,
    /// Length (samples) the audio was zero-padded to before export, for
    /// dynamic-length evaluation of framed embeddings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padded_length: Option<usize>,
    /// Expected tensor shape, checked on load when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub entries: Vec<ManifestEntry>,
}

impl EmbeddingManifest {
    /// Read `dir/manifest.json`.
    pub fn load(dir: &Path) -> Result<EmbeddingManifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        atomic_write(&path, |w| w.write_all(text.as_bytes()))
    }
}

impl ManifestEntry {
    /// Entry with only the required fields set.
    pub fn new(
        audio: impl Into<String>,
        tensor: impl Into<String>,
        time_axis: Option<usize>,
        source_id: impl Into<String>,
    ) -> ManifestEntry {
        ManifestEntry {
            audio: audio.into(),
            tensor: tensor.into(),
            time_axis,
            source_id: source_id.into(),
            layer_id: None,
            layout: None,
            fixed_window: None,
            padded_length: None,
            shape: None,
        }
    }

    /// Load this entry's tensor, resolving paths against `base`.
    pub fn load(&self, base: &Path) -> Result<Representation> {
        let path = base.join(&self.tensor);
        let rep = load_embedding(&path, self.time_axis, &self.source_id)?;
        if let Some(expected) = &self.shape {
            let found = rep.data().shape().to_vec();
            if &found != expected {
                return Err(Error::ShapeMismatch {
                    expected: expected.clone(),
                    found,
                });
            }
        }
        Ok(rep)
    }
}

/// Read a float32 NPY tensor as a representation.
pub fn load_embedding(
    path: &Path,
    time_axis: Option<usize>,
    source_id: &str,
) -> Result<Representation> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let tensor = ArrayD::<f32>::read_npy(file).map_err(|source| Error::ReadNpy {
        path: path.to_path_buf(),
        source,
    })?;
    if tensor.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(path.display().to_string()));
    }
    Representation::new(tensor.mapv(f64::from), time_axis, source_id)
}

static TEMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Write through a temporary sibling file and rename it into place.
pub(crate) fn atomic_write(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

fn temp_sibling(path: &Path) -> PathBuf {
    let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.{n}.tmp", std::process::id()))
}

/// Write a float32 tensor as NPY (v1.0, C order, `<f4`), atomically.
pub fn write_tensor(path: &Path, tensor: &ArrayD<f32>) -> Result<()> {
    let tmp = temp_sibling(path);
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let written = tensor
        .write_npy(BufWriter::new(file))
        .map_err(|source| Error::WriteNpy {
            path: path.to_path_buf(),
            source,
        });
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
