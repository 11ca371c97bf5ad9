//! Making representations of different-length audio comparable.

use std::fmt;
use std::str::FromStr;

use ndarray::Axis;

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::features::Representation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthStrategy {
    /// Average framed features over time.
    TimeAverage,
    /// Zero-pad the shorter audio of each pair to the longer one before
    /// computing features.
    DynamicPad,
    /// Pad or truncate audio to a fixed window (seconds). Embeddings with no
    /// time axis are evaluated under this strategy as exported.
    FixedWindow(f64),
}

impl LengthStrategy {
    /// Label used in reports and on the command line.
    pub fn label(&self) -> &'static str {
        match self {
            LengthStrategy::TimeAverage => "avg",
            LengthStrategy::DynamicPad => "dynamic",
            LengthStrategy::FixedWindow(_) => "fixed",
        }
    }
}

impl fmt::Display for LengthStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LengthStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" | "average" => Ok(LengthStrategy::TimeAverage),
            "dynamic" | "pad" => Ok(LengthStrategy::DynamicPad),
            other => Err(Error::UnknownName {
                kind: "length strategy",
                value: other.to_string(),
            }),
        }
    }
}

/// What a representation source can accept.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceTraits {
    /// Has a time axis proportional to input length.
    pub framed: bool,
    /// The model sees a fixed window (seconds) and does not accept sliding.
    pub fixed_window: Option<f64>,
}

/// Refuse strategies that do not make sense for a source.
///
/// Framed features accept time averaging and dynamic padding. Single-vector
/// embeddings (one frame per window) are already fixed-shape and only accept
/// the fixed-window strategy; the same holds for shift-sensitive models with
/// a declared window.
pub fn check_applicable(
    strategy: LengthStrategy,
    traits: &SourceTraits,
    source_id: &str,
) -> Result<()> {
    let refuse = |reason: &str| {
        Err(Error::StrategyNotApplicable {
            strategy: strategy.label().into(),
            source_id: source_id.into(),
            reason: reason.into(),
        })
    };
    match strategy {
        LengthStrategy::TimeAverage | LengthStrategy::DynamicPad if !traits.framed => {
            refuse("representation has a single frame and no time axis")
        }
        LengthStrategy::FixedWindow(d) if d.is_nan() || d <= 0.0 => {
            refuse("window duration must be positive")
        }
        LengthStrategy::FixedWindow(_) if traits.framed && traits.fixed_window.is_none() => {
            refuse("framed representation does not declare a fixed window")
        }
        _ => Ok(()),
    }
}

/// Mean over the time axis; the result has no time axis.
pub fn time_average(rep: &Representation) -> Result<Representation> {
    let axis = rep
        .time_axis()
        .ok_or_else(|| Error::TimeAxisAbsent(rep.source_id().to_string()))?;
    let blocks = rep
        .blocks()
        .iter()
        .map(|b| b.mean_axis(Axis(axis)).expect("time axis is non-empty"))
        .collect();
    Ok(rep.replace_blocks(blocks, None))
}

/// Right-pad the shorter waveform with zeros to the longer one's length.
pub fn pair_pad(a: &Waveform, b: &Waveform) -> Result<(Waveform, Waveform)> {
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::SampleRateMismatch {
            left: a.sample_rate(),
            right: b.sample_rate(),
        });
    }
    let len = a.len().max(b.len());
    Ok((a.with_len(len), b.with_len(len)))
}

/// Pad with trailing zeros or keep the first `seconds` of the signal.
pub fn fixed_window(wave: &Waveform, seconds: f64) -> Result<Waveform> {
    if seconds.is_nan() || seconds <= 0.0 {
        return Err(Error::Config("window duration must be positive".into()));
    }
    let len = (seconds * wave.sample_rate() as f64).round() as usize;
    Ok(wave.with_len(len))
}
