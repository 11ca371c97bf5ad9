//! Corpus-level evaluation: representations -> predicted blocks -> scores.
//!
//! [`evaluate`] is the library entry point. It can be called repeatedly
//! from a host process (for example at the end of every training epoch)
//! with in-memory representations through [`InMemorySource`].

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dashmap::DashMap;

use crate::align::{score_block, Metric, MetricConfig, MetricValues, RowSkip};
use crate::audio::{decode_wav, resample, Waveform};
use crate::block::SymmetricBlock;
use crate::dataset::TimbreDataset;
use crate::distances::{projection_scale, DistanceKind, PairTerms, BALL_EPS};
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::features::{
    mfcc, multi_scale_spectrogram, CacheKey, EmbeddingManifest, FeatureCache, ManifestEntry,
    MfccConfig, MssConfig, Representation, TensorLayout,
};
use crate::lengths::{time_average, LengthStrategy, SourceTraits};
use crate::report::{AlignmentReport, DatasetScore, MetricSummary, SliceReport};
use crate::style::{
    concat_style, style_embedding, tokens_as_featuremap, FeatureMap, GramNorm, StyleKind,
};

/// One audio sample of a dataset.
#[derive(Debug, Clone, Copy)]
pub struct SampleRef<'a> {
    pub dataset: &'a TimbreDataset,
    pub index: usize,
}

impl SampleRef<'_> {
    pub fn path(&self) -> &Path {
        &self.dataset.audio_refs()[self.index]
    }
}

/// Anything that can produce a representation for a dataset sample.
pub trait RepresentationSource: Sync {
    fn id(&self) -> &str;

    fn traits(&self) -> SourceTraits;

    /// Length of the sample in audio samples; used for dynamic padding.
    fn native_len(&self, sample: &SampleRef) -> Result<usize>;

    /// Representation of the sample, with its audio zero-padded to
    /// `padded_len` samples when given.
    fn represent(
        &self,
        sample: &SampleRef,
        padded_len: Option<usize>,
    ) -> Result<Arc<Representation>>;
}

/// Canonical path, or a lexically normalized absolute one for files that
/// do not exist.
fn sample_key(path: &Path) -> PathBuf {
    if let Ok(p) = path.canonicalize() {
        return p;
    }
    let abs = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            std::path::Component::ParentDir => {
                out.pop();
            }
            std::path::Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

/// DSP features computed from the audio files.
#[derive(Debug, Clone, PartialEq)]
pub enum AudioFeature {
    Mfcc(MfccConfig),
    Mss(MssConfig),
}

impl AudioFeature {
    pub fn mfcc() -> Self {
        AudioFeature::Mfcc(MfccConfig::default())
    }

    pub fn mss() -> Self {
        AudioFeature::Mss(MssConfig::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            AudioFeature::Mfcc(_) => "mfcc",
            AudioFeature::Mss(_) => "mss",
        }
    }

    fn sample_rate(&self) -> u32 {
        match self {
            AudioFeature::Mfcc(c) => c.sample_rate,
            AudioFeature::Mss(c) => c.sample_rate,
        }
    }

    fn cache_key(&self) -> String {
        match self {
            AudioFeature::Mfcc(c) => c.cache_key(),
            AudioFeature::Mss(c) => c.cache_key(),
        }
    }

    pub fn compute(&self, wave: &Waveform) -> Result<Representation> {
        match self {
            AudioFeature::Mfcc(c) => mfcc(wave, c),
            AudioFeature::Mss(c) => multi_scale_spectrogram(wave, c),
        }
    }
}

impl std::str::FromStr for AudioFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mfcc" => Ok(AudioFeature::mfcc()),
            "mss" => Ok(AudioFeature::mss()),
            other => Err(Error::UnknownName {
                kind: "feature",
                value: other.to_string(),
            }),
        }
    }
}

/// Decodes audio (resampled to the feature's analysis rate) and computes a
/// DSP feature, caching per (sample, padded length, configuration).
pub struct AudioFeatureSource {
    feature: AudioFeature,
    cache: Arc<FeatureCache>,
    waves: DashMap<PathBuf, Arc<Waveform>>,
}

impl AudioFeatureSource {
    pub fn new(feature: AudioFeature) -> Self {
        Self::with_cache(feature, Arc::new(FeatureCache::default()))
    }

    pub fn with_cache(feature: AudioFeature, cache: Arc<FeatureCache>) -> Self {
        AudioFeatureSource {
            feature,
            cache,
            waves: DashMap::new(),
        }
    }

    fn wave(&self, path: &Path) -> Result<Arc<Waveform>> {
        let key = sample_key(path);
        if let Some(w) = self.waves.get(&key) {
            return Ok(Arc::clone(w.value()));
        }
        let wave = Arc::new(resample(&decode_wav(path)?, self.feature.sample_rate())?);
        Ok(Arc::clone(self.waves.entry(key).or_insert(wave).value()))
    }
}

impl RepresentationSource for AudioFeatureSource {
    fn id(&self) -> &str {
        self.feature.name()
    }

    fn traits(&self) -> SourceTraits {
        SourceTraits {
            framed: true,
            fixed_window: None,
        }
    }

    fn native_len(&self, sample: &SampleRef) -> Result<usize> {
        Ok(self.wave(sample.path())?.len())
    }

    fn represent(
        &self,
        sample: &SampleRef,
        padded_len: Option<usize>,
    ) -> Result<Arc<Representation>> {
        let wave = self.wave(sample.path())?;
        // Padding to the native length is the unpadded signal.
        let padded_len = padded_len.filter(|&l| l != wave.len());
        let key = CacheKey {
            sample: sample_key(sample.path()).display().to_string(),
            padded_len,
            config: self.feature.cache_key(),
        };
        self.cache.get_or_compute(key, || match padded_len {
            Some(len) => self.feature.compute(&wave.with_len(len)),
            None => self.feature.compute(&wave),
        })
    }
}

fn wav_len(path: &Path) -> Result<usize> {
    let reader = hound::WavReader::open(path).map_err(|source| Error::Wav {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(reader.duration() as usize)
}

fn group_by_audio<'a>(
    base: &Path,
    entries: impl Iterator<Item = &'a ManifestEntry>,
) -> HashMap<PathBuf, Vec<ManifestEntry>> {
    let mut map: HashMap<PathBuf, Vec<ManifestEntry>> = HashMap::new();
    for e in entries {
        map.entry(sample_key(&base.join(&e.audio)))
            .or_default()
            .push(e.clone());
    }
    map
}

fn manifest_traits(entries: &[&ManifestEntry], id: &str) -> Result<SourceTraits> {
    let framed = entries.first().is_some_and(|e| e.time_axis.is_some());
    if entries.iter().any(|e| e.time_axis.is_some() != framed) {
        return Err(Error::Config(format!(
            "'{id}' mixes framed and single-vector tensors"
        )));
    }
    Ok(SourceTraits {
        framed,
        fixed_window: entries.iter().find_map(|e| e.fixed_window),
    })
}

/// Embeddings exported by an external model, one tensor per audio file
/// (optionally several, for audio zero-padded to different lengths).
pub struct EmbeddingSource {
    id: String,
    base: PathBuf,
    traits: SourceTraits,
    entries: HashMap<PathBuf, Vec<ManifestEntry>>,
    cache: Arc<FeatureCache>,
}

impl EmbeddingSource {
    pub fn new(
        dir: &Path,
        manifest: &EmbeddingManifest,
        source_id: &str,
        cache: Arc<FeatureCache>,
    ) -> Result<Self> {
        let selected: Vec<&ManifestEntry> = manifest
            .entries
            .iter()
            .filter(|e| e.source_id == source_id && e.layer_id.is_none())
            .collect();
        if selected.is_empty() {
            return Err(Error::Config(format!(
                "no '{source_id}' embeddings in {}",
                dir.display()
            )));
        }
        Ok(EmbeddingSource {
            id: source_id.to_string(),
            base: dir.to_path_buf(),
            traits: manifest_traits(&selected, source_id)?,
            entries: group_by_audio(dir, selected.into_iter()),
            cache,
        })
    }

    fn entries_for(&self, sample: &SampleRef) -> Result<&[ManifestEntry]> {
        self.entries
            .get(&sample_key(sample.path()))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingRepresentation {
                source_id: self.id.clone(),
                dataset: sample.dataset.name().to_string(),
                index: sample.index,
            })
    }
}

impl RepresentationSource for EmbeddingSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn traits(&self) -> SourceTraits {
        self.traits
    }

    fn native_len(&self, sample: &SampleRef) -> Result<usize> {
        wav_len(sample.path())
    }

    /// Uses the entry exported at `padded_len` when there is one, otherwise
    /// the unpadded entry (the driver then pads frames).
    fn represent(
        &self,
        sample: &SampleRef,
        padded_len: Option<usize>,
    ) -> Result<Arc<Representation>> {
        let entries = self.entries_for(sample)?;
        let entry = padded_len
            .and_then(|l| entries.iter().find(|e| e.padded_length == Some(l)))
            .or_else(|| entries.iter().find(|e| e.padded_length.is_none()))
            .unwrap_or(&entries[0]);
        let key = CacheKey {
            sample: self.base.join(&entry.tensor).display().to_string(),
            padded_len: entry.padded_length,
            config: format!("embedding:{}", self.id),
        };
        self.cache.get_or_compute(key, || entry.load(&self.base))
    }
}

/// Style embeddings computed from exported per-layer feature maps.
pub struct StyleSource {
    id: String,
    base: PathBuf,
    kind: StyleKind,
    norm: GramNorm,
    traits: SourceTraits,
    entries: HashMap<PathBuf, Vec<ManifestEntry>>,
    cache: Arc<FeatureCache>,
}

impl StyleSource {
    /// Feature maps of `source_id` (entries with a `layer_id`), reported as
    /// `"{source_id}-gatys"` or `"{source_id}-huang"`.
    pub fn new(
        dir: &Path,
        manifest: &EmbeddingManifest,
        source_id: &str,
        kind: StyleKind,
        norm: GramNorm,
        cache: Arc<FeatureCache>,
    ) -> Result<Self> {
        let selected: Vec<&ManifestEntry> = manifest
            .entries
            .iter()
            .filter(|e| e.source_id == source_id && e.layer_id.is_some())
            .collect();
        if selected.is_empty() {
            return Err(Error::Config(format!(
                "no '{source_id}' feature maps in {}",
                dir.display()
            )));
        }
        Ok(StyleSource {
            id: format!("{source_id}-{}", kind.name()),
            base: dir.to_path_buf(),
            kind,
            norm,
            traits: SourceTraits {
                framed: false,
                fixed_window: selected.iter().find_map(|e| e.fixed_window),
            },
            entries: group_by_audio(dir, selected.into_iter()),
            cache,
        })
    }

    fn compute(&self, entries: &[ManifestEntry]) -> Result<Representation> {
        let per_layer = entries
            .iter()
            .map(|entry| {
                let rep = load_raw(&self.base, entry)?;
                let layer = entry.layer_id.clone().unwrap_or_default();
                let fm = match entry.layout.unwrap_or_default() {
                    TensorLayout::Channels => FeatureMap::from_channels_first(rep.data(), layer)?,
                    TensorLayout::Tokens => {
                        let tokens = rep
                            .data()
                            .view()
                            .into_dimensionality::<ndarray::Ix2>()
                            .map_err(|_| {
                                Error::Config(format!("token tensor {} must be 2-d", entry.tensor))
                            })?;
                        tokens_as_featuremap(&tokens.to_owned(), layer)?
                    }
                };
                Ok(style_embedding(&fm, self.kind, self.norm))
            })
            .collect::<Result<Vec<_>>>()?;
        let joined = concat_style(&per_layer)?;
        Representation::new(
            ndarray::Array1::from(joined.data).into_dyn(),
            None,
            self.id.clone(),
        )
    }
}

fn load_raw(base: &Path, entry: &ManifestEntry) -> Result<Representation> {
    // Feature maps carry no time axis of their own.
    let mut plain = entry.clone();
    plain.time_axis = None;
    plain.load(base)
}

impl RepresentationSource for StyleSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn traits(&self) -> SourceTraits {
        self.traits
    }

    fn native_len(&self, sample: &SampleRef) -> Result<usize> {
        wav_len(sample.path())
    }

    fn represent(
        &self,
        sample: &SampleRef,
        _padded_len: Option<usize>,
    ) -> Result<Arc<Representation>> {
        let entries = self
            .entries
            .get(&sample_key(sample.path()))
            .ok_or_else(|| Error::MissingRepresentation {
                source_id: self.id.clone(),
                dataset: sample.dataset.name().to_string(),
                index: sample.index,
            })?;
        let key = CacheKey {
            sample: sample_key(sample.path()).display().to_string(),
            padded_len: None,
            config: format!("style:{}:{:?}", self.id, self.norm),
        };
        self.cache.get_or_compute(key, || self.compute(entries))
    }
}

/// Representations held in memory, keyed by (dataset name, sample index).
pub struct InMemorySource {
    id: String,
    traits: SourceTraits,
    reps: HashMap<(String, usize), Arc<Representation>>,
    lengths: HashMap<(String, usize), usize>,
}

impl InMemorySource {
    pub fn new(id: impl Into<String>, traits: SourceTraits) -> Self {
        InMemorySource {
            id: id.into(),
            traits,
            reps: HashMap::new(),
            lengths: HashMap::new(),
        }
    }

    pub fn insert(&mut self, dataset: &str, index: usize, rep: Representation) {
        self.reps
            .insert((dataset.to_string(), index), Arc::new(rep));
    }

    /// Record the audio length used for dynamic padding (defaults to 1).
    pub fn set_len(&mut self, dataset: &str, index: usize, len: usize) {
        self.lengths.insert((dataset.to_string(), index), len);
    }

    /// Single-vector embeddings from plain vectors.
    pub fn from_vectors(id: impl Into<String>, vectors: &[(&str, Vec<Vec<f64>>)]) -> Result<Self> {
        let id = id.into();
        let mut source = InMemorySource::new(id.clone(), SourceTraits::default());
        for (dataset, rows) in vectors {
            for (index, v) in rows.iter().enumerate() {
                let rep = Representation::new(
                    ndarray::Array1::from(v.clone()).into_dyn(),
                    None,
                    id.clone(),
                )?;
                source.insert(dataset, index, rep);
            }
        }
        Ok(source)
    }
}

impl RepresentationSource for InMemorySource {
    fn id(&self) -> &str {
        &self.id
    }

    fn traits(&self) -> SourceTraits {
        self.traits
    }

    fn native_len(&self, sample: &SampleRef) -> Result<usize> {
        Ok(*self
            .lengths
            .get(&(sample.dataset.name().to_string(), sample.index))
            .unwrap_or(&1))
    }

    fn represent(
        &self,
        sample: &SampleRef,
        _padded_len: Option<usize>,
    ) -> Result<Arc<Representation>> {
        self.reps
            .get(&(sample.dataset.name().to_string(), sample.index))
            .cloned()
            .ok_or_else(|| Error::MissingRepresentation {
                source_id: self.id.clone(),
                dataset: sample.dataset.name().to_string(),
                index: sample.index,
            })
    }
}

/// What to compute.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPlan {
    pub strategies: Vec<LengthStrategy>,
    pub distances: Vec<DistanceKind>,
    pub metrics: Vec<Metric>,
    pub metric_config: MetricConfig,
    pub execution: Execution,
    pub ball_eps: f64,
}

impl Default for EvalPlan {
    fn default() -> Self {
        EvalPlan {
            strategies: vec![LengthStrategy::TimeAverage, LengthStrategy::DynamicPad],
            distances: vec![DistanceKind::L2, DistanceKind::Cosine],
            metrics: Metric::ALL.to_vec(),
            metric_config: MetricConfig::default(),
            execution: Execution::default(),
            ball_eps: BALL_EPS,
        }
    }
}

impl EvalPlan {
    pub fn validate(&self) -> Result<()> {
        if self.distances.is_empty() {
            return Err(Error::Config("at least one distance is required".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("at least one metric is required".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config(
                "at least one length strategy is required".into(),
            ));
        }
        self.metric_config.validate()
    }
}

/// How representations of one source are made comparable in a slice.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Applied {
    Average,
    Dynamic,
    /// Already fixed-shape (single-vector or fixed-window exports).
    AsExported,
}

impl Applied {
    fn label(self) -> &'static str {
        match self {
            Applied::Average => LengthStrategy::TimeAverage.label(),
            Applied::Dynamic => LengthStrategy::DynamicPad.label(),
            Applied::AsExported => LengthStrategy::FixedWindow(1.0).label(),
        }
    }
}

fn applied_strategies(traits: &SourceTraits, requested: &[LengthStrategy]) -> Vec<Applied> {
    if !traits.framed {
        return vec![Applied::AsExported];
    }
    let mut out = Vec::new();
    for s in requested {
        let a = match s {
            LengthStrategy::TimeAverage => Applied::Average,
            LengthStrategy::DynamicPad => Applied::Dynamic,
            LengthStrategy::FixedWindow(_) => continue,
        };
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

/// Pair statistics for every rated pair of a dataset.
struct DatasetTerms {
    pairs: Vec<(usize, usize, Result<PairTerms>)>,
    frame_padded: usize,
}

fn vectors_for(
    source: &dyn RepresentationSource,
    dataset: &TimbreDataset,
    applied: Applied,
    exec: Execution,
) -> Result<Vec<Option<Vec<f64>>>> {
    let mut used = vec![false; dataset.len()];
    for r in dataset.ratings() {
        used[r.0] = true;
        used[r.1] = true;
    }
    map_range(exec, dataset.len(), |index| {
        if !used[index] {
            return Ok(None);
        }
        let sample = SampleRef { dataset, index };
        let rep = source.represent(&sample, None)?;
        let rep = match applied {
            Applied::Average => time_average(&rep)?,
            _ => (*rep).clone(),
        };
        Ok(Some(rep.flatten()))
    })
    .into_iter()
    .collect()
}

fn pair_terms(
    source: &dyn RepresentationSource,
    dataset: &TimbreDataset,
    applied: Applied,
    exec: Execution,
) -> Result<DatasetTerms> {
    let ratings = dataset.ratings();
    if applied != Applied::Dynamic {
        let vectors = vectors_for(source, dataset, applied, exec)?;
        let pairs = map_range(exec, ratings.len(), |k| {
            let r = ratings[k];
            let (u, v) = (
                vectors[r.0].as_ref().unwrap(),
                vectors[r.1].as_ref().unwrap(),
            );
            (r.0, r.1, PairTerms::compute(u, v))
        });
        return Ok(DatasetTerms {
            pairs,
            frame_padded: 0,
        });
    }

    let lengths = map_range(exec, dataset.len(), |index| {
        source.native_len(&SampleRef { dataset, index })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let results = map_range(exec, ratings.len(), |k| {
        let r = ratings[k];
        let len = lengths[r.0].max(lengths[r.1]);
        let compute = || -> Result<(PairTerms, bool)> {
            let a = source.represent(
                &SampleRef {
                    dataset,
                    index: r.0,
                },
                Some(len),
            )?;
            let b = source.represent(
                &SampleRef {
                    dataset,
                    index: r.1,
                },
                Some(len),
            )?;
            if a.dim() == b.dim() {
                return Ok((PairTerms::compute(&a.flatten(), &b.flatten())?, false));
            }
            // Exported embeddings without a padded variant: pad frames instead.
            let (fa, fb) = match (a.frames(), b.frames()) {
                (Some(fa), Some(fb)) if fa.len() == fb.len() => (fa, fb),
                _ => {
                    return Err(Error::DimensionMismatch {
                        left: a.dim(),
                        right: b.dim(),
                    })
                }
            };
            let target: Vec<usize> = fa.iter().zip(&fb).map(|(x, y)| *x.max(y)).collect();
            let (a, b) = (a.pad_frames(&target)?, b.pad_frames(&target)?);
            Ok((PairTerms::compute(&a.flatten(), &b.flatten())?, true))
        };
        (r.0, r.1, compute())
    });
    let mut frame_padded = 0;
    let mut pairs = Vec::with_capacity(results.len());
    for (i, j, res) in results {
        match res {
            Ok((terms, padded)) => {
                frame_padded += padded as usize;
                pairs.push((i, j, Ok(terms)));
            }
            Err(e @ Error::DimensionMismatch { .. }) => pairs.push((i, j, Err(e))),
            Err(e) => return Err(e),
        }
    }
    Ok(DatasetTerms {
        pairs,
        frame_padded,
    })
}

/// Per-dataset metric values of one slice, in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockScores {
    pub dataset: String,
    pub metrics: Vec<MetricValues>,
}

/// Combine per-dataset values into summaries. Rank metrics average over all
/// rows of all datasets; MAE over all pairs.
pub fn summarize_blocks(blocks: &[BlockScores], metrics: &[Metric]) -> Vec<MetricSummary> {
    metrics
        .iter()
        .map(|&metric| {
            let mut all = Vec::new();
            let mut datasets = Vec::new();
            let (mut skipped, mut triplets) = (0, 0);
            for block in blocks {
                let Some(values) = block.metrics.iter().find(|m| m.metric == metric) else {
                    continue;
                };
                all.extend_from_slice(&values.values);
                skipped += values.rows_skipped;
                triplets += values.triplets;
                datasets.push(DatasetScore {
                    dataset: block.dataset.clone(),
                    score: values.mean(),
                    evaluated: values.values.len(),
                    rows_skipped: values.rows_skipped,
                    triplets: values.triplets,
                });
            }
            MetricSummary {
                metric,
                aggregate: (!all.is_empty()).then(|| all.iter().sum::<f64>() / all.len() as f64),
                evaluated: all.len(),
                rows_skipped: skipped,
                triplets,
                datasets,
            }
        })
        .collect()
}

/// Score predicted blocks against human blocks, `(dataset, predicted,
/// truth)` per entry. Blocks are rescaled internally.
pub fn score_corpus(
    blocks: &[(String, SymmetricBlock, SymmetricBlock)],
    metrics: &[Metric],
    cfg: &MetricConfig,
) -> Result<Vec<MetricSummary>> {
    let scored = blocks
        .iter()
        .map(|(name, pred, truth)| {
            Ok(BlockScores {
                dataset: name.clone(),
                metrics: score_block(pred, truth, metrics, cfg)?.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_blocks(&scored, metrics))
}

fn describe_skips(values: &MetricValues) -> String {
    let names: Vec<String> = values
        .skips
        .iter()
        .map(|(reason, n)| {
            let what = match reason {
                RowSkip::TooShort => "too few entries",
                RowSkip::ConstantTruth => "constant ratings",
                RowSkip::ConstantPrediction => "constant prediction",
                RowSkip::NoTriplets => "no triplets above margin",
                RowSkip::ZeroIdeal => "zero ideal DCG",
            };
            format!("{n} {what}")
        })
        .collect();
    names.join(", ")
}

/// Evaluate every source on every dataset under the plan.
///
/// Failures on one dataset (missing embeddings, unreadable audio) are
/// reported as warnings and that dataset is left out of the slice; the
/// rest of the corpus still runs.
pub fn evaluate(
    corpus: &[TimbreDataset],
    sources: &[&dyn RepresentationSource],
    plan: &EvalPlan,
) -> AlignmentReport {
    let mut report = AlignmentReport::default();
    if let Err(e) = plan.validate() {
        report.warnings.push(e.to_string());
        return report;
    }
    let truths: Vec<SymmetricBlock> = corpus.iter().map(|d| d.ground_truth().matrix).collect();

    for source in sources {
        let traits = source.traits();
        for applied in applied_strategies(&traits, &plan.strategies) {
            let context = format!("{} / {}", source.id(), applied.label());

            let mut terms = Vec::with_capacity(corpus.len());
            for dataset in corpus {
                if dataset.ratings().is_empty() {
                    continue;
                }
                match pair_terms(*source, dataset, applied, plan.execution) {
                    Ok(t) => {
                        if t.frame_padded > 0 {
                            report.warnings.push(format!(
                                "{context}: {}: {} pairs compared with frame-level zero padding (no padded export)",
                                dataset.name(),
                                t.frame_padded
                            ));
                        }
                        terms.push((dataset, t));
                    }
                    Err(e) => report.warnings.push(format!(
                        "{context}: dataset '{}' skipped: {e}",
                        dataset.name()
                    )),
                }
            }

            for &distance in &plan.distances {
                let context = format!("{context} / {distance}");
                let mut slice = SliceReport::new(source.id(), applied.label(), distance);
                let mut blocks = Vec::new();
                for (dataset, t) in &terms {
                    let max_norm = t
                        .pairs
                        .iter()
                        .filter_map(|(_, _, r)| r.as_ref().ok().map(PairTerms::max_norm))
                        .fold(0.0, f64::max);
                    let scale = projection_scale(max_norm, plan.ball_eps);
                    let mut pred = SymmetricBlock::empty(dataset.len());
                    let mut skipped = 0;
                    let mut first_error = None;
                    for (i, j, r) in &t.pairs {
                        match r.as_ref().map_err(|e| e.to_string()).and_then(|terms| {
                            terms.finish(distance, scale).map_err(|e| e.to_string())
                        }) {
                            Ok(d) => pred.set(*i, *j, d),
                            Err(e) => {
                                skipped += 1;
                                first_error.get_or_insert(e);
                            }
                        }
                    }
                    if let Some(e) = first_error {
                        report.warnings.push(format!(
                            "{context}: {}: {skipped} pairs skipped ({e})",
                            dataset.name()
                        ));
                    }
                    slice.pairs_skipped += skipped;

                    let truth = &truths[corpus
                        .iter()
                        .position(|d| std::ptr::eq(d, *dataset))
                        .unwrap()];
                    match score_block(&pred, truth, &plan.metrics, &plan.metric_config) {
                        Ok(eval) => {
                            if eval.pred_degenerate {
                                report.warnings.push(format!(
                                    "{context}: {}: predicted block is constant; rescaled to zeros",
                                    dataset.name()
                                ));
                                slice.degenerate_blocks.push(dataset.name().to_string());
                            }
                            if eval.truth_degenerate {
                                report.warnings.push(format!(
                                    "{context}: {}: human ratings are constant; rescaled to zeros",
                                    dataset.name()
                                ));
                            }
                            for values in &eval.metrics {
                                if values.rows_skipped > 0 {
                                    report.warnings.push(format!(
                                        "{context}: {}: {}: {} rows skipped ({})",
                                        dataset.name(),
                                        values.metric,
                                        values.rows_skipped,
                                        describe_skips(values)
                                    ));
                                }
                            }
                            slice.predicted_ties += eval.predicted_ties;
                            blocks.push(BlockScores {
                                dataset: dataset.name().to_string(),
                                metrics: eval.metrics,
                            });
                        }
                        Err(e) => report.warnings.push(format!(
                            "{context}: dataset '{}' not scored: {e}",
                            dataset.name()
                        )),
                    }
                }
                slice.metrics = summarize_blocks(&blocks, &plan.metrics);
                report.slices.push(slice);
            }
        }
    }
    report
}

/// Build sources for every representation in an exported embedding
/// directory: one [`EmbeddingSource`] per plain `source_id`, and a Gatys and
/// a Huang [`StyleSource`] per `source_id` that has layer feature maps.
pub fn sources_from_export_dir(
    dir: &Path,
    norm: GramNorm,
    cache: Arc<FeatureCache>,
) -> Result<Vec<Box<dyn RepresentationSource + Send>>> {
    let manifest = EmbeddingManifest::load(dir)?;
    let mut plain: Vec<&str> = Vec::new();
    let mut layered: Vec<&str> = Vec::new();
    for e in &manifest.entries {
        let list = if e.layer_id.is_some() {
            &mut layered
        } else {
            &mut plain
        };
        if !list.contains(&e.source_id.as_str()) {
            list.push(&e.source_id);
        }
    }
    let mut out: Vec<Box<dyn RepresentationSource + Send>> = Vec::new();
    for id in plain {
        out.push(Box::new(EmbeddingSource::new(
            dir,
            &manifest,
            id,
            Arc::clone(&cache),
        )?));
    }
    for id in layered {
        for kind in [StyleKind::Gatys, StyleKind::Huang] {
            out.push(Box::new(StyleSource::new(
                dir,
                &manifest,
                id,
                kind,
                norm,
                Arc::clone(&cache),
            )?));
        }
    }
    Ok(out)
}
