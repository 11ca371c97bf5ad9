//! Signal-processing representations and ingestion of exported embeddings.

mod cache;
mod interchange;
mod mfcc;
mod mss;
mod spectral;

pub use cache::{CacheKey, FeatureCache};
pub use interchange::{
    load_embedding, write_tensor, EmbeddingManifest, ManifestEntry, TensorLayout, MANIFEST_FILE,
};
pub use mfcc::{dct_ortho_matrix, mel_filterbank, mfcc, MfccConfig};
pub use mss::{multi_scale_spectrogram, MssConfig, MSS_FFT_SIZES};
pub use spectral::{power_spectrogram, stft_magnitude, SpectrogramConfig, Window};

use ndarray::{ArrayD, Axis};

use crate::error::{Error, Result};

/// A real-valued representation of one audio sample.
///
/// Most representations are a single tensor. Multi-scale spectrograms hold
/// one tensor per scale; all blocks share the same time-axis index and
/// flattening concatenates them in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    blocks: Vec<ArrayD<f64>>,
    time_axis: Option<usize>,
    source_id: String,
}

impl Representation {
    pub fn new(
        data: ArrayD<f64>,
        time_axis: Option<usize>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        Self::from_blocks(vec![data], time_axis, source_id)
    }

    pub fn from_blocks(
        blocks: Vec<ArrayD<f64>>,
        time_axis: Option<usize>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        let source_id = source_id.into();
        if blocks.is_empty() {
            return Err(Error::Config(format!(
                "representation '{source_id}' has no data"
            )));
        }
        for block in &blocks {
            if block.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("representation '{source_id}'")));
            }
            if let Some(axis) = time_axis {
                if axis >= block.ndim() {
                    return Err(Error::Config(format!(
                        "time axis {axis} out of range for a {}-d tensor in '{source_id}'",
                        block.ndim()
                    )));
                }
                if block.len_of(Axis(axis)) == 0 {
                    return Err(Error::Config(format!("'{source_id}' has zero frames")));
                }
            }
        }
        Ok(Representation {
            blocks,
            time_axis,
            source_id,
        })
    }

    pub fn blocks(&self) -> &[ArrayD<f64>] {
        &self.blocks
    }

    /// The single tensor of a one-block representation.
    pub fn data(&self) -> &ArrayD<f64> {
        &self.blocks[0]
    }

    pub fn time_axis(&self) -> Option<usize> {
        self.time_axis
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Frame count of each block along the time axis.
    pub fn frames(&self) -> Option<Vec<usize>> {
        let axis = self.time_axis?;
        Some(self.blocks.iter().map(|b| b.len_of(Axis(axis))).collect())
    }

    /// Total number of values.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(ArrayD::len).sum()
    }

    /// All values in logical (C) order, blocks concatenated.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for block in &self.blocks {
            out.extend(block.iter().copied());
        }
        out
    }

    /// Right-pad every block with zeros along the time axis to `frames[b]`.
    pub fn pad_frames(&self, frames: &[usize]) -> Result<Representation> {
        let axis = self
            .time_axis
            .ok_or_else(|| Error::TimeAxisAbsent(self.source_id.clone()))?;
        let blocks = self
            .blocks
            .iter()
            .zip(frames)
            .map(|(block, &target)| {
                let have = block.len_of(Axis(axis));
                if target <= have {
                    return block.clone();
                }
                let mut shape = block.shape().to_vec();
                shape[axis] = target - have;
                ndarray::concatenate(Axis(axis), &[block.view(), ArrayD::zeros(shape).view()])
                    .expect("shapes agree off the time axis")
            })
            .collect();
        Ok(Representation {
            blocks,
            time_axis: self.time_axis,
            source_id: self.source_id.clone(),
        })
    }

    pub(crate) fn replace_blocks(
        &self,
        blocks: Vec<ArrayD<f64>>,
        time_axis: Option<usize>,
    ) -> Representation {
        Representation {
            blocks,
            time_axis,
            source_id: self.source_id.clone(),
        }
    }
}
