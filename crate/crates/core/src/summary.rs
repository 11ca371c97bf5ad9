//! Per-dataset descriptive statistics: sample count, pitch, audio length
//! and integrated loudness.

use serde::Serialize;

use crate::audio::{decode_wav, integrated_loudness, is_silent, TABLE_BLOCK_SECONDS};
use crate::dataset::TimbreDataset;
use crate::exec::{map_slice, Execution};

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_sounds: usize,
    pub n_ratings: usize,
    pub pitch: Option<String>,
    /// Seconds.
    pub length: Option<MeanStd>,
    /// LUFS over non-silent samples.
    pub loudness: Option<MeanStd>,
    pub warnings: Vec<String>,
}

fn fmt_stat(s: Option<MeanStd>) -> String {
    match s {
        Some(s) if s.std < 0.005 => format!("{:.2}", s.mean),
        Some(s) => format!("{:.2} ± {:.2}", s.mean, s.std),
        None => "-".to_string(),
    }
}

impl DatasetSummary {
    /// `name  N  pitch  length  loudness` with two decimals.
    pub fn table_row(&self) -> String {
        format!(
            "{:<24} {:>3}  {:<6} {:>13}  {:>15}",
            self.name,
            self.n_sounds,
            self.pitch.as_deref().unwrap_or("-"),
            fmt_stat(self.length),
            fmt_stat(self.loudness)
        )
    }
}

pub fn table_header() -> String {
    format!(
        "{:<24} {:>3}  {:<6} {:>13}  {:>15}",
        "dataset", "N", "pitch", "length (s)", "loudness (LUFS)"
    )
}

/// Summarize one dataset. Unreadable audio and silent samples (every gating
/// block below the absolute threshold) are reported as warnings and left out
/// of the affected statistic.
pub fn summarize_dataset(dataset: &TimbreDataset, exec: Execution) -> DatasetSummary {
    let measured = map_slice(exec, dataset.audio_refs(), |path| {
        let wave = decode_wav(path)?;
        let loudness = integrated_loudness(&wave, TABLE_BLOCK_SECONDS);
        Ok::<_, crate::Error>((wave.duration(), loudness))
    });
    let mut lengths = Vec::new();
    let mut loudness = Vec::new();
    let mut warnings = Vec::new();
    for (path, m) in dataset.audio_refs().iter().zip(measured) {
        match m {
            Ok((len, lufs)) => {
                lengths.push(len);
                match lufs {
                    Ok(l) if is_silent(l) => warnings.push(format!("{}: silent", path.display())),
                    Ok(l) => loudness.push(l),
                    Err(e) => warnings.push(format!("{}: loudness: {e}", path.display())),
                }
            }
            Err(e) => warnings.push(format!("{}: {e}", path.display())),
        }
    }
    DatasetSummary {
        name: dataset.name().to_string(),
        n_sounds: dataset.len(),
        n_ratings: dataset.ratings().len(),
        pitch: dataset.pitch().map(str::to_string),
        length: MeanStd::of(&lengths),
        loudness: MeanStd::of(&loudness),
        warnings,
    }
}

pub fn summarize(datasets: &[TimbreDataset], exec: Execution) -> Vec<DatasetSummary> {
    datasets
        .iter()
        .map(|d| summarize_dataset(d, exec))
        .collect()
}
