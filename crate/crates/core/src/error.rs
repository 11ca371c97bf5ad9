use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problems with the ratings of a single dataset.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatingError {
    #[error("ratings[{entry}]: index {index} out of range for {n} audio files")]
    IndexOutOfRange {
        entry: usize,
        index: usize,
        n: usize,
    },
    #[error("ratings[{entry}]: pair ({i}, {j}) is rated more than once")]
    DuplicatePair { entry: usize, i: usize, j: usize },
    #[error("ratings[{entry}]: self-pair ({i}, {i}) is not allowed")]
    SelfPair { entry: usize, i: usize },
    #[error("ratings[{entry}]: pair ({i}, {j}) must be ordered with i < j")]
    Unordered { entry: usize, i: usize, j: usize },
    #[error("ratings[{entry}]: negative rating {value}")]
    Negative { entry: usize, value: f64 },
    #[error("ratings[{entry}]: rating is not finite")]
    NonFinite { entry: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed manifest: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {source}", path.display())]
    Ratings {
        path: PathBuf,
        #[source]
        source: RatingError,
    },

    #[error("invalid dataset '{name}': {source}")]
    Dataset {
        name: String,
        #[source]
        source: RatingError,
    },

    #[error("{}: audio[{index}] does not exist: {}", manifest.display(), audio.display())]
    MissingAudio {
        manifest: PathBuf,
        index: usize,
        audio: PathBuf,
    },

    #[error("{}: {source}", path.display())]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("{}: unsupported WAV encoding: {reason}", path.display())]
    UnsupportedWav { path: PathBuf, reason: String },

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("audio of {samples} samples is shorter than one {block_samples}-sample block")]
    AudioTooShort {
        samples: usize,
        block_samples: usize,
    },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },

    #[error("empty block: no defined entries")]
    EmptyBlock,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("representation '{0}' has no time axis")]
    TimeAxisAbsent(String),

    #[error("length strategy '{strategy}' is not applicable to '{source_id}': {reason}")]
    StrategyNotApplicable {
        strategy: String,
        source_id: String,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    ReadNpy {
        path: PathBuf,
        #[source]
        source: ndarray_npy::ReadNpyError,
    },

    #[error("{}: {source}", path.display())]
    WriteNpy {
        path: PathBuf,
        #[source]
        source: ndarray_npy::WriteNpyError,
    },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("n_mfcc = {n_mfcc} exceeds the {n_mels} mel bands")]
    TooManyCoefficients { n_mfcc: usize, n_mels: usize },

    #[error("cannot concatenate style embeddings of different kinds")]
    MixedStyleKinds,

    #[error("cannot concatenate an empty list of style embeddings")]
    EmptyStyleList,

    #[error("no representation for sample {index} of dataset '{dataset}' in '{source_id}'")]
    MissingRepresentation {
        source_id: String,
        dataset: String,
        index: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {kind} '{value}'")]
    UnknownName { kind: &'static str, value: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
