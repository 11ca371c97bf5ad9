//! Timbre dissimilarity datasets and their JSON manifests.
//!
//! A manifest looks like
//!
//! ```json
//! {"name": "grey1977", "audio": ["01.wav", "02.wav"], "ratings": [[0, 1, 0.42]]}
//! ```
//!
//! Ratings are averaged human *dissimilarities* (larger means more
//! different), indices are 0-based and audio paths resolve relative to the
//! manifest's directory. Missing pairs are allowed.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::block::SymmetricBlock;
use crate::error::{Error, RatingError, Result};

pub use crate::block::{rescale_block, Rescaled};

/// One `[i, j, value]` entry of a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating(pub usize, pub usize, pub f64);

/// On-disk form of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub audio: Vec<String>,
    pub ratings: Vec<Rating>,
    /// Optional pitch label, shown by `summarize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<String>,
}

impl Manifest {
    pub fn from_json(path: &Path, text: &str) -> Result<Manifest> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// A validated dataset: audio references plus sparse upper-triangular ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct TimbreDataset {
    name: String,
    audio_refs: Vec<PathBuf>,
    ratings: Vec<Rating>,
    pitch: Option<String>,
}

fn validate_ratings(n: usize, ratings: &[Rating]) -> Result<(), RatingError> {
    let mut seen = HashSet::with_capacity(ratings.len());
    for (entry, &Rating(i, j, value)) in ratings.iter().enumerate() {
        for index in [i, j] {
            if index >= n {
                return Err(RatingError::IndexOutOfRange { entry, index, n });
            }
        }
        if i == j {
            return Err(RatingError::SelfPair { entry, i });
        }
        if i > j {
            return Err(RatingError::Unordered { entry, i, j });
        }
        if !value.is_finite() {
            return Err(RatingError::NonFinite { entry });
        }
        if value < 0.0 {
            return Err(RatingError::Negative { entry, value });
        }
        if !seen.insert((i, j)) {
            return Err(RatingError::DuplicatePair { entry, i, j });
        }
    }
    Ok(())
}

impl TimbreDataset {
    pub fn new(
        name: impl Into<String>,
        audio_refs: Vec<PathBuf>,
        ratings: Vec<Rating>,
    ) -> Result<TimbreDataset> {
        let name = name.into();
        validate_ratings(audio_refs.len(), &ratings).map_err(|source| Error::Dataset {
            name: name.clone(),
            source,
        })?;
        Ok(TimbreDataset {
            name,
            audio_refs,
            ratings,
            pitch: None,
        })
    }

    pub fn with_pitch(mut self, pitch: Option<String>) -> Self {
        self.pitch = pitch;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pitch(&self) -> Option<&str> {
        self.pitch.as_deref()
    }

    pub fn audio_refs(&self) -> &[PathBuf] {
        &self.audio_refs
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    /// Number of audio samples.
    pub fn len(&self) -> usize {
        self.audio_refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.audio_refs.is_empty()
    }

    pub fn ground_truth(&self) -> GroundTruthBlock {
        GroundTruthBlock {
            dataset_name: self.name.clone(),
            matrix: SymmetricBlock::from_pairs(
                self.len(),
                self.ratings.iter().map(|r| (r.0, r.1, r.2)),
            ),
            rescaled: false,
        }
    }
}

/// The human ratings of one dataset as a square block.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBlock {
    pub dataset_name: String,
    pub matrix: SymmetricBlock,
    pub rescaled: bool,
}

impl GroundTruthBlock {
    /// Min-max rescaled copy. Degenerate blocks become all zeros; the flag is
    /// returned so callers can warn.
    pub fn rescale(&self) -> Result<(GroundTruthBlock, bool)> {
        let (matrix, degenerate) = self.matrix.rescaled()?;
        Ok((
            GroundTruthBlock {
                dataset_name: self.dataset_name.clone(),
                matrix,
                rescaled: true,
            },
            degenerate,
        ))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub n_datasets: usize,
    pub n_samples: usize,
    pub n_ratings: usize,
}

pub fn corpus_stats(datasets: &[TimbreDataset]) -> CorpusStats {
    CorpusStats {
        n_datasets: datasets.len(),
        n_samples: datasets.iter().map(TimbreDataset::len).sum(),
        n_ratings: datasets.iter().map(|d| d.ratings().len()).sum(),
    }
}

/// Load and validate a manifest, requiring every audio file to exist.
pub fn load_dataset(path: &Path) -> Result<TimbreDataset> {
    load_dataset_with(path, true)
}

/// Load a manifest; `require_audio = false` skips the audio existence check
/// (useful when only precomputed embeddings are evaluated).
pub fn load_dataset_with(path: &Path, require_audio: bool) -> Result<TimbreDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = Manifest::from_json(path, &text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let audio_refs: Vec<PathBuf> = manifest.audio.iter().map(|a| base.join(a)).collect();
    if require_audio {
        for (index, audio) in audio_refs.iter().enumerate() {
            if !audio.is_file() {
                return Err(Error::MissingAudio {
                    manifest: path.to_path_buf(),
                    index,
                    audio: audio.clone(),
                });
            }
        }
    }
    validate_ratings(audio_refs.len(), &manifest.ratings).map_err(|source| Error::Ratings {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(TimbreDataset {
        name: manifest.name,
        audio_refs,
        ratings: manifest.ratings,
        pitch: manifest.pitch,
    })
}

/// Every `*.json` file directly inside `dir`, sorted by file name.
pub fn manifest_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Load every manifest in `dir` (audio must exist).
pub fn load_corpus(dir: &Path) -> Result<Vec<TimbreDataset>> {
    load_corpus_with(dir, true)
}

pub fn load_corpus_with(dir: &Path, require_audio: bool) -> Result<Vec<TimbreDataset>> {
    manifest_paths(dir)?
        .iter()
        .map(|p| load_dataset_with(p, require_audio))
        .collect()
}

/// How the values of a source matrix are oriented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Dissimilarity,
    /// Larger means more similar; converted with `v' = (max + min) - v`.
    Similarity,
}

/// Parse a square rating matrix (whitespace or comma separated) into upper
/// triangular ratings.
///
/// Empty cells, `nan` and `-` are treated as missing. The upper triangle wins;
/// the lower triangle fills gaps only.
pub fn parse_rating_matrix(text: &str, orientation: Orientation) -> Result<(usize, Vec<Rating>)> {
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(|c: char| c == ',' || c.is_whitespace()) {
            let cell = cell.trim();
            if cell.is_empty() && line.contains(',') {
                row.push(None);
                continue;
            }
            if cell.is_empty() {
                continue;
            }
            if cell == "-" || cell.eq_ignore_ascii_case("nan") || cell.eq_ignore_ascii_case("na") {
                row.push(None);
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| {
                Error::Config(format!(
                    "line {}: cannot parse '{cell}' as a number",
                    line_no + 1
                ))
            })?;
            row.push(Some(value));
        }
        rows.push(row);
    }
    let n = rows.len();
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
        return Err(Error::Config(format!(
            "matrix must be square: row {r} has {} columns, expected {n}",
            row.len()
        )));
    }

    let mut pairs = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        for j in i + 1..n {
            if let Some(v) = rows[i][j].or(rows[j][i]) {
                pairs.push((i, j, v));
            }
        }
    }
    if orientation == Orientation::Similarity && !pairs.is_empty() {
        let (lo, hi) = pairs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.2), hi.max(p.2))
            });
        for p in &mut pairs {
            p.2 = (hi + lo) - p.2;
        }
    }
    let ratings = pairs
        .into_iter()
        .map(|(i, j, v)| Rating(i, j, v))
        .collect::<Vec<_>>();
    validate_ratings(n, &ratings).map_err(|source| Error::Dataset {
        name: "<matrix>".into(),
        source,
    })?;
    Ok((n, ratings))
}
