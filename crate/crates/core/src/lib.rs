//! # timbre-align
//!
//! Measures how well audio representations agree with human judgments of
//! timbre dissimilarity.
//!
//! Every representation (MFCC, multi-scale spectrograms, or embeddings and
//! feature maps exported from pre-trained models) is turned into a predicted
//! dissimilarity matrix per dataset. Both the predicted and the human matrix
//! are min-max rescaled per dataset block and compared with:
//!
//! - mean absolute error over every rated pair,
//! - row-wise Kendall tau-b, Spearman rho and NDCG,
//! - row-wise triplet agreement with a rating margin.
//!
//! Rank metrics are averaged over all rows of all datasets.
//!
//! ```no_run
//! use timbre_align::dataset::load_corpus;
//! use timbre_align::evaluate::{evaluate, AudioFeature, AudioFeatureSource, EvalPlan};
//!
//! let corpus = load_corpus("manifests/".as_ref())?;
//! let mfcc = AudioFeatureSource::new(AudioFeature::mfcc());
//! let report = evaluate(&corpus, &[&mfcc], &EvalPlan::default());
//! println!("{}", report.to_json_string());
//! # Ok::<(), timbre_align::Error>(())
//! ```

pub mod align;
pub mod audio;
pub mod block;
pub mod dataset;
pub mod distances;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod features;
pub mod lengths;
pub mod published;
pub mod report;
pub mod style;
pub mod summary;

pub use error::{Error, Result};
pub use exec::Execution;
