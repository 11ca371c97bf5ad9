use std::f64::consts::PI;

use ndarray::Array2;

use super::spectral::{power_spectrogram, SpectrogramConfig};
use super::Representation;
use crate::audio::Waveform;
use crate::error::{Error, Result};

/// MFCC pipeline settings. Only `n_mfcc` is fixed by the evaluation
/// protocol; the rest follow the usual librosa defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    /// Power floor applied before the dB conversion.
    pub log_floor: f64,
    pub fmin: f64,
    /// Defaults to Nyquist.
    pub fmax: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate: 44_100,
            fft_size: 2048,
            hop: 512,
            n_mels: 128,
            n_mfcc: 40,
            log_floor: 1e-10,
            fmin: 0.0,
            fmax: None,
        }
    }
}

impl MfccConfig {
    pub fn spectrogram(&self) -> SpectrogramConfig {
        SpectrogramConfig::new(self.fft_size, self.hop)
    }

    /// Stable textual key for caching.
    pub fn cache_key(&self) -> String {
        format!(
            "mfcc:sr={}:fft={}:hop={}:mels={}:n={}:floor={:e}:fmin={}:fmax={:?}",
            self.sample_rate,
            self.fft_size,
            self.hop,
            self.n_mels,
            self.n_mfcc,
            self.log_floor,
            self.fmin,
            self.fmax
        )
    }
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

fn hz_to_mel(hz: f64) -> f64 {
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
    } else {
        hz / F_SP
    }
}

fn mel_to_hz(mel: f64) -> f64 {
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
    } else {
        F_SP * mel
    }
}

/// Triangular, area-normalised (Slaney) mel filterbank, shape
/// `n_mels x (fft_size / 2 + 1)`.
pub fn mel_filterbank(
    sample_rate: u32,
    fft_size: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Array2<f64> {
    let bins = fft_size / 2 + 1;
    let fft_freqs: Vec<f64> = (0..bins)
        .map(|k| k as f64 * sample_rate as f64 / fft_size as f64)
        .collect();
    let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut weights = Array2::zeros((n_mels, bins));
    for m in 0..n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let area = 2.0 / (right - left);
        for (k, &f) in fft_freqs.iter().enumerate() {
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            weights[[m, k]] = rising.min(falling).max(0.0) * area;
        }
    }
    weights
}

/// Orthonormal DCT-II basis, shape `n_out x n_in`.
pub fn dct_ortho_matrix(n_out: usize, n_in: usize) -> Array2<f64> {
    let n = n_in as f64;
    Array2::from_shape_fn((n_out, n_in), |(k, i)| {
        let scale = if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        };
        scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()
    })
}

/// Mel-frequency cepstral coefficients, shape `n_mfcc x frames`, time axis 1.
///
/// power spectrogram -> mel filterbank -> `10 log10(max(., floor))` ->
/// orthonormal DCT-II, first `n_mfcc` coefficients.
pub fn mfcc(wave: &Waveform, cfg: &MfccConfig) -> Result<Representation> {
    if cfg.n_mfcc > cfg.n_mels {
        return Err(Error::TooManyCoefficients {
            n_mfcc: cfg.n_mfcc,
            n_mels: cfg.n_mels,
        });
    }
    if wave.sample_rate() != cfg.sample_rate {
        return Err(Error::SampleRateMismatch {
            left: wave.sample_rate(),
            right: cfg.sample_rate,
        });
    }
    let power = power_spectrogram(wave, &cfg.spectrogram())?;
    let fmax = cfg.fmax.unwrap_or(cfg.sample_rate as f64 / 2.0);
    let mel = mel_filterbank(cfg.sample_rate, cfg.fft_size, cfg.n_mels, cfg.fmin, fmax).dot(&power);
    let log_mel = mel.mapv(|p| 10.0 * p.max(cfg.log_floor).log10());
    let coeffs = dct_ortho_matrix(cfg.n_mfcc, cfg.n_mels).dot(&log_mel);
    Representation::new(coeffs.into_dyn(), Some(1), "mfcc")
}
