//! Mono waveforms: WAV decoding, resampling and integrated loudness.

use std::f64::consts::PI;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// A mono signal with nominal full scale `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Waveform> {
        if sample_rate == 0 {
            return Err(Error::InvalidWaveform(
                "sample rate must be positive".into(),
            ));
        }
        if samples.is_empty() {
            return Err(Error::InvalidWaveform("waveform has no samples".into()));
        }
        if let Some(k) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidWaveform(format!("sample {k} is not finite")));
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Right-pad with zeros (or truncate) to exactly `len` samples.
    pub fn with_len(&self, len: usize) -> Waveform {
        let mut samples = self.samples.clone();
        samples.resize(len.max(1), 0.0);
        Waveform {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Decode a PCM (16/24/32-bit) or float32 WAV file, folding channels to
/// mono by their mean.
pub fn decode_wav(path: &Path) -> Result<Waveform> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedWav {
            path: path.to_path_buf(),
            reason: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(wav_err)?
        }
        (format, bits) => {
            return Err(Error::UnsupportedWav {
                path: path.to_path_buf(),
                reason: format!("{format:?} with {bits} bits per sample"),
            })
        }
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(Error::UnsupportedWav {
            path: path.to_path_buf(),
            reason: "truncated final frame".into(),
        });
    }

    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Waveform::new(mono, spec.sample_rate).map_err(|e| match e {
        Error::InvalidWaveform(reason) => Error::UnsupportedWav {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

/// Sample encodings accepted by [`encode_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Write a mono WAV file.
pub fn encode_wav(path: &Path, wave: &Waveform, encoding: WavEncoding) -> Result<()> {
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate,
        bits_per_sample: bits,
        sample_format: format,
    };
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &wave.samples {
        match encoding {
            WavEncoding::Pcm16 => {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(v).map_err(wav_err)?;
            }
            WavEncoding::Float32 => writer.write_sample(s as f32).map_err(wav_err)?,
        }
    }
    writer.finalize().map_err(wav_err)
}

/// Zero crossings of the interpolation kernel on each side.
const SINC_ZERO_CROSSINGS: usize = 64;
const KAISER_BETA: f64 = 12.0;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
///
/// The output has `round(len * target / source)` samples. When downsampling
/// the kernel cutoff moves to the target Nyquist frequency.
pub fn resample(wave: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::InvalidWaveform(
            "target rate must be positive".into(),
        ));
    }
    if target_rate == wave.sample_rate {
        return Ok(wave.clone());
    }
    let ratio = target_rate as f64 / wave.sample_rate as f64;
    let out_len = ((wave.len() as f64 * ratio).round() as usize).max(1);
    let cutoff = ratio.min(1.0);
    let half_width = SINC_ZERO_CROSSINGS as f64 / cutoff;
    let i0_beta = bessel_i0(KAISER_BETA);
    let input = &wave.samples;

    let samples = (0..out_len)
        .map(|n| {
            let t = n as f64 / ratio;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(input.len() - 1);
            let mut acc = 0.0;
            for (k, &x) in input.iter().enumerate().take(hi + 1).skip(lo) {
                let offset = t - k as f64;
                let arg = cutoff * offset;
                let sinc = if arg == 0.0 {
                    1.0
                } else {
                    (PI * arg).sin() / (PI * arg)
                };
                let r = offset / half_width;
                let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
                acc += x * cutoff * sinc * window;
            }
            acc
        })
        .collect();
    Waveform::new(samples, target_rate)
}

/// A second-order IIR section with `a0 = 1`.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// High-shelf stage of the K-weighting prefilter, re-derived for any
    /// rate from the analogue prototype of the 48 kHz reference design.
    fn k_shelf(rate: f64) -> Biquad {
        let gain_db = 3.999_843_853_97;
        let q = 0.707_175_236_955_419_3;
        let fc = 1_681.974_450_955_532;
        let k = (PI * fc / rate).tan();
        let vh = 10f64.powf(gain_db / 20.0);
        let vb = vh.powf(0.499_666_774_155);
        let a0 = 1.0 + k / q + k * k;
        Biquad {
            b0: (vh + vb * k / q + k * k) / a0,
            b1: 2.0 * (k * k - vh) / a0,
            b2: (vh - vb * k / q + k * k) / a0,
            a1: 2.0 * (k * k - 1.0) / a0,
            a2: (1.0 - k / q + k * k) / a0,
        }
    }

    /// High-pass stage of the K-weighting prefilter.
    fn k_highpass(rate: f64) -> Biquad {
        let q = 0.500_327_037_325_395_3;
        let fc = 38.135_470_876_139_82;
        let k = (PI * fc / rate).tan();
        let a0 = 1.0 + k / q + k * k;
        Biquad {
            b0: 1.0,
            b1: -2.0,
            b2: 1.0,
            a1: 2.0 * (k * k - 1.0) / a0,
            a2: (1.0 - k / q + k * k) / a0,
        }
    }

    fn filter(&self, input: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        input
            .iter()
            .map(|&x0| {
                let y0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0
            })
            .collect()
    }
}

/// K-weight a signal (shelf, then high-pass).
pub fn k_weight(wave: &Waveform) -> Vec<f64> {
    let rate = wave.sample_rate as f64;
    Biquad::k_highpass(rate).filter(&Biquad::k_shelf(rate).filter(&wave.samples))
}

/// Default gating block length in seconds used for the stimulus tables.
pub const TABLE_BLOCK_SECONDS: f64 = 0.08;

const ABSOLUTE_GATE_LUFS: f64 = -70.0;
const RELATIVE_GATE_LU: f64 = -10.0;
const BLOCK_OVERLAP: f64 = 0.75;

fn block_loudness(power: f64) -> f64 {
    -0.691 + 10.0 * power.log10()
}

/// Gated integrated loudness in LUFS.
///
/// Blocks of `block_seconds` with 75% overlap are gated at -70 LUFS and then
/// at 10 LU below the mean of the surviving blocks. Returns
/// `f64::NEG_INFINITY` when every block is gated out (see [`is_silent`]).
pub fn integrated_loudness(wave: &Waveform, block_seconds: f64) -> Result<f64> {
    let rate = wave.sample_rate as f64;
    if block_seconds.is_nan() || block_seconds <= 0.0 {
        return Err(Error::Config("block size must be positive".into()));
    }
    let duration = wave.duration();
    if duration <= block_seconds {
        return Err(Error::AudioTooShort {
            samples: wave.len(),
            block_samples: (block_seconds * rate).round() as usize,
        });
    }

    let weighted = k_weight(wave);
    let step = 1.0 - BLOCK_OVERLAP;
    let n_blocks =
        ((duration - block_seconds) / (block_seconds * step)).round_ties_even() as usize + 1;
    let norm = 1.0 / (block_seconds * rate);
    let powers: Vec<f64> = (0..n_blocks)
        .map(|j| {
            let lo = (block_seconds * (j as f64 * step) * rate) as usize;
            let hi = (block_seconds * (j as f64 * step + 1.0) * rate) as usize;
            let lo = lo.min(weighted.len());
            let hi = hi.min(weighted.len());
            norm * weighted[lo..hi].iter().map(|x| x * x).sum::<f64>()
        })
        .collect();
    let levels: Vec<f64> = powers.iter().map(|&p| block_loudness(p)).collect();

    let mean_power = |keep: &dyn Fn(f64) -> bool| -> Option<f64> {
        let kept: Vec<f64> = powers
            .iter()
            .zip(&levels)
            .filter(|&(_, &l)| keep(l))
            .map(|(&p, _)| p)
            .collect();
        (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64)
    };

    let Some(absolute) = mean_power(&|l| l >= ABSOLUTE_GATE_LUFS) else {
        return Ok(f64::NEG_INFINITY);
    };
    let relative_gate = block_loudness(absolute) + RELATIVE_GATE_LU;
    match mean_power(&|l| l > relative_gate && l > ABSOLUTE_GATE_LUFS) {
        Some(p) => Ok(block_loudness(p)),
        None => Ok(f64::NEG_INFINITY),
    }
}

/// True for the sentinel returned when every loudness block is gated out.
pub fn is_silent(lufs: f64) -> bool {
    lufs == f64::NEG_INFINITY
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tone(rate: u32, freq: f64, seconds: f64, amp: f64) -> Vec<f64> {
        let n = (seconds * rate as f64).round() as usize;
        (0..n)
            .map(|k| amp * (2.0 * PI * freq * k as f64 / rate as f64).sin())
            .collect()
    }

    #[test]
    fn k_weighting_matches_published_48k_coefficients() {
        let shelf = Biquad::k_shelf(48_000.0);
        assert!((shelf.b0 - 1.535_124_859_586_97).abs() < 1e-9);
        assert!((shelf.b1 + 2.691_696_189_406_38).abs() < 1e-9);
        assert!((shelf.b2 - 1.198_392_810_852_85).abs() < 1e-9);
        assert!((shelf.a1 + 1.690_659_293_182_41).abs() < 1e-9);
        assert!((shelf.a2 - 0.732_480_774_215_85).abs() < 1e-9);
        let hp = Biquad::k_highpass(48_000.0);
        assert!((hp.a1 + 1.990_047_454_833_98).abs() < 1e-9);
        assert!((hp.a2 - 0.990_072_250_366_21).abs() < 1e-9);
    }

    #[test]
    fn silence_is_gated_out() {
        let w = Waveform::new(vec![0.0; 44_100], 44_100).unwrap();
        let l = integrated_loudness(&w, TABLE_BLOCK_SECONDS).unwrap();
        assert!(is_silent(l));
    }

    #[test]
    fn too_short_for_one_block() {
        let w = Waveform::new(vec![0.1; 100], 44_100).unwrap();
        assert!(matches!(
            integrated_loudness(&w, TABLE_BLOCK_SECONDS),
            Err(Error::AudioTooShort { .. })
        ));
    }

    // Reference values computed with pyloudnorm (DeMan filter class) on the
    // same synthetic signals.
    #[test]
    fn matches_reference_meter() {
        let full = Waveform::new(tone(48_000, 997.0, 2.0, 1.0), 48_000).unwrap();
        let l = integrated_loudness(&full, TABLE_BLOCK_SECONDS).unwrap();
        assert!((l - -3.010_489_167_733_165).abs() < 1e-6, "{l}");
        let l400 = integrated_loudness(&full, 0.4).unwrap();
        assert!((l400 - -3.010_251_969_610_999_3).abs() < 1e-6, "{l400}");

        let mut gated = tone(44_100, 440.0, 1.0, 0.5);
        gated.extend(tone(44_100, 440.0, 1.0, 0.01));
        gated.extend(vec![0.0; 22_050]);
        let l = integrated_loudness(&Waveform::new(gated, 44_100).unwrap(), 0.08).unwrap();
        assert!((l - -9.842_532_524_917_768).abs() < 1e-6, "{l}");

        let short = Waveform::new(tone(44_100, 1000.0, 0.25, 0.1), 44_100).unwrap();
        let l = integrated_loudness(&short, 0.08).unwrap();
        assert!((l - -23.001_001_549_980_213).abs() < 1e-6, "{l}");

        let mix: Vec<f64> = tone(44_100, 100.0, 0.5, 0.3)
            .iter()
            .zip(tone(44_100, 3000.0, 0.5, 0.2))
            .map(|(a, b)| a + b)
            .collect();
        let l = integrated_loudness(&Waveform::new(mix, 44_100).unwrap(), 0.08).unwrap();
        assert!((l - -11.512_872_614_302_625).abs() < 1e-6, "{l}");
    }

    #[test]
    fn gain_shifts_loudness_exactly() {
        let w = Waveform::new(tone(44_100, 523.0, 1.0, 0.4), 44_100).unwrap();
        let base = integrated_loudness(&w, 0.08).unwrap();
        for g in [0.25, 0.5, 2.0] {
            let l = integrated_loudness(&w.scaled(g), 0.08).unwrap();
            assert!((l - base - 20.0 * f64::log10(g)).abs() < 1e-3);
        }
    }

    #[test]
    fn resample_identity_and_length() {
        let w = Waveform::new(tone(44_100, 440.0, 1.0, 0.5), 44_100).unwrap();
        assert_eq!(resample(&w, 44_100).unwrap(), w);
        let up = resample(&w, 48_000).unwrap();
        assert_eq!(up.len(), 48_000);
        assert_eq!(up.sample_rate(), 48_000);
        assert!(resample(&w, 0).is_err());
    }

    #[test]
    fn waveform_rejects_bad_input() {
        assert!(Waveform::new(vec![], 44_100).is_err());
        assert!(Waveform::new(vec![f64::NAN], 44_100).is_err());
        assert!(Waveform::new(vec![0.0], 0).is_err());
    }
}
