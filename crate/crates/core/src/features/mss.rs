use super::spectral::{stft_magnitude, SpectrogramConfig};
use super::Representation;
use crate::audio::Waveform;
use crate::error::{Error, Result};

pub const MSS_FFT_SIZES: [usize; 6] = [4096, 2048, 1024, 512, 256, 128];

/// Multi-scale linear-magnitude spectrogram settings (Hann, hop = fft / 4,
/// centred frames).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MssConfig {
    pub sample_rate: u32,
    pub fft_sizes: Vec<usize>,
}

impl Default for MssConfig {
    fn default() -> Self {
        MssConfig {
            sample_rate: 44_100,
            fft_sizes: MSS_FFT_SIZES.to_vec(),
        }
    }
}

impl MssConfig {
    pub fn cache_key(&self) -> String {
        format!("mss:sr={}:ffts={:?}", self.sample_rate, self.fft_sizes)
    }

    pub fn scales(&self) -> impl Iterator<Item = SpectrogramConfig> + '_ {
        self.fft_sizes
            .iter()
            .map(|&n| SpectrogramConfig::new(n, (n / 4).max(1)))
    }
}

/// One magnitude spectrogram per FFT size, in configuration order.
pub fn multi_scale_spectrogram(wave: &Waveform, cfg: &MssConfig) -> Result<Representation> {
    if cfg.fft_sizes.is_empty() {
        return Err(Error::Config(
            "multi-scale spectrogram needs at least one FFT size".into(),
        ));
    }
    if wave.sample_rate() != cfg.sample_rate {
        return Err(Error::SampleRateMismatch {
            left: wave.sample_rate(),
            right: cfg.sample_rate,
        });
    }
    let blocks = cfg
        .scales()
        .map(|scale| stft_magnitude(wave, &scale).map(|r| r.data().clone()))
        .collect::<Result<Vec<_>>>()?;
    Representation::from_blocks(blocks, Some(1), "mss")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_scales_with_expected_frames() {
        let w = Waveform::new(vec![0.0; 44_100], 44_100).unwrap();
        let r = multi_scale_spectrogram(&w, &MssConfig::default()).unwrap();
        assert_eq!(r.frames().unwrap(), vec![44, 87, 173, 345, 690, 1379]);
        let bins: Vec<usize> = r.blocks().iter().map(|b| b.shape()[0]).collect();
        assert_eq!(bins, vec![2049, 1025, 513, 257, 129, 65]);
        assert!(r.flatten().iter().all(|&v| v == 0.0));
    }
}
