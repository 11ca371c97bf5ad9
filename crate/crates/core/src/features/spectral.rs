use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::Representation;
use crate::audio::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    /// Periodic Hann window.
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpectrogramConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window: Window,
    /// Zero-pad `fft_size / 2` samples on both sides so frame `t` is centred
    /// on sample `t * hop`.
    pub center: bool,
}

impl SpectrogramConfig {
    pub fn new(fft_size: usize, hop: usize) -> Self {
        SpectrogramConfig {
            fft_size,
            hop,
            window: Window::Hann,
            center: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.fft_size < self.hop {
            return Err(Error::Config(format!(
                "spectrogram needs 1 <= hop <= fft_size (got hop {}, fft {})",
                self.hop, self.fft_size
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn frames(&self, len: usize) -> usize {
        let padded = self.padded_len(len);
        1 + (padded - self.fft_size) / self.hop
    }

    fn padded_len(&self, len: usize) -> usize {
        if self.center {
            len + 2 * (self.fft_size / 2)
        } else {
            len.max(self.fft_size)
        }
    }
}

/// Complex one-sided STFT, mapped through `f` per bin; returns bins x frames.
fn stft_map(
    wave: &Waveform,
    cfg: &SpectrogramConfig,
    f: impl Fn(Complex<f64>) -> f64,
) -> Result<Array2<f64>> {
    cfg.validate()?;
    let n_fft = cfg.fft_size;
    let offset = if cfg.center { n_fft / 2 } else { 0 };
    let mut padded = vec![0.0; cfg.padded_len(wave.len())];
    padded[offset..offset + wave.len()].copy_from_slice(wave.samples());

    let window = cfg.window.coefficients(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let frames = cfg.frames(wave.len());
    let bins = cfg.bins();
    let mut out = Array2::zeros((bins, frames));
    let mut buffer = vec![Complex::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for t in 0..frames {
        let start = t * cfg.hop;
        for (k, slot) in buffer.iter_mut().enumerate() {
            *slot = Complex::new(padded[start + k] * window[k], 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        for (b, value) in buffer.iter().take(bins).enumerate() {
            out[[b, t]] = f(*value);
        }
    }
    Ok(out)
}

/// Magnitude spectrogram, shape `(fft_size / 2 + 1) x frames`, time axis 1.
pub fn stft_magnitude(wave: &Waveform, cfg: &SpectrogramConfig) -> Result<Representation> {
    let mag = stft_map(wave, cfg, |c| c.norm())?;
    Representation::new(mag.into_dyn(), Some(1), "stft")
}

/// Power spectrogram `|X|^2`, shape bins x frames.
pub fn power_spectrogram(wave: &Waveform, cfg: &SpectrogramConfig) -> Result<Array2<f64>> {
    stft_map(wave, cfg, |c| c.norm_sqr())
}
