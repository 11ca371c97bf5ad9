//! Agreement between predicted and human dissimilarity blocks.
//!
//! Both blocks are min-max rescaled per dataset. MAE averages absolute
//! errors over rated pairs; the rank metrics compare row `i` of the two
//! matrices (all `j != i` with a rating) and are averaged over rows.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::block::SymmetricBlock;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Mae,
    Kendall,
    Spearman,
    Ndcg,
    Triplet,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Mae,
        Metric::Kendall,
        Metric::Spearman,
        Metric::Ndcg,
        Metric::Triplet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Kendall => "kendall",
            Metric::Spearman => "spearman",
            Metric::Ndcg => "ndcg",
            Metric::Triplet => "triplet",
        }
    }

    /// Whether larger scores mean better alignment.
    pub fn higher_is_better(self) -> bool {
        self != Metric::Mae
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "metric",
                value: s.to_string(),
            })
    }
}

/// NDCG gain applied to relevance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Gain {
    #[default]
    Linear,
    /// `2^rel - 1`.
    Exponential,
}

impl FromStr for Gain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Gain::Linear),
            "exponential" | "exp" => Ok(Gain::Exponential),
            other => Err(Error::UnknownName {
                kind: "gain",
                value: other.to_string(),
            }),
        }
    }
}

impl Gain {
    fn apply(self, rel: f64) -> f64 {
        match self {
            Gain::Linear => rel,
            Gain::Exponential => rel.exp2() - 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletConfig {
    /// Ratings must differ by strictly more than this to form a triplet.
    pub margin: f64,
}

impl Default for TripletConfig {
    fn default() -> Self {
        TripletConfig { margin: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricConfig {
    pub triplet: TripletConfig,
    pub gain: Gain,
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.triplet.margin;
        if !(0.0..1.0).contains(&m) {
            return Err(Error::Config(format!("margin must lie in [0, 1), got {m}")));
        }
        Ok(())
    }
}

/// Why a row produced no score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowSkip {
    TooShort,
    ConstantTruth,
    ConstantPrediction,
    NoTriplets,
    ZeroIdeal,
}

/// Row `reference` of the predicted and human matrices, restricted to the
/// columns where both are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct RowPair {
    pub reference: usize,
    pub indices: Vec<usize>,
    pub pred: Vec<f64>,
    pub truth: Vec<f64>,
}

impl RowPair {
    pub fn new(pred: Vec<f64>, truth: Vec<f64>) -> RowPair {
        assert_eq!(pred.len(), truth.len(), "row lengths differ");
        RowPair {
            reference: 0,
            indices: (0..pred.len()).collect(),
            pred,
            truth,
        }
    }

    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }
}

/// Every non-empty row of the two blocks.
pub fn row_pairs(pred: &SymmetricBlock, truth: &SymmetricBlock) -> Vec<RowPair> {
    assert_eq!(pred.len(), truth.len(), "block sizes differ");
    (0..pred.len())
        .filter_map(|i| {
            let mut row = RowPair {
                reference: i,
                indices: Vec::new(),
                pred: Vec::new(),
                truth: Vec::new(),
            };
            for j in 0..pred.len() {
                if let (Some(p), Some(t)) = (pred.get(i, j), truth.get(i, j)) {
                    row.indices.push(j);
                    row.pred.push(p);
                    row.truth.push(t);
                }
            }
            (!row.is_empty()).then_some(row)
        })
        .collect()
}

/// Mean absolute error over the pairs defined in both blocks.
pub fn mae(pred: &SymmetricBlock, truth: &SymmetricBlock) -> Result<f64> {
    let errors = absolute_errors(pred, truth);
    if errors.is_empty() {
        return Err(Error::EmptyBlock);
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

fn absolute_errors(pred: &SymmetricBlock, truth: &SymmetricBlock) -> Vec<f64> {
    pred.upper_pairs()
        .filter_map(|(i, j, p)| truth.get(i, j).map(|t| (p - t).abs()))
        .collect()
}

/// Number of tied pairs `sum t(t-1)/2` over runs of equal keys in a sorted
/// sequence.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for item in sorted {
        if prev.as_ref() == Some(&item) {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(item);
    }
    total + run * (run + 1) / 2
}

/// Count pairs `a < b` with `v[a] > v[b]`, sorting `v` in the process.
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut a, mut b) = (0, mid);
    while a < mid && b < n {
        if v[b].total_cmp(&v[a]) == Ordering::Less {
            count += (mid - a) as u64;
            merged.push(v[b]);
            b += 1;
        } else {
            merged.push(v[a]);
            a += 1;
        }
    }
    merged.extend_from_slice(&v[a..mid]);
    merged.extend_from_slice(&v[b..]);
    v.copy_from_slice(&merged);
    count
}

/// Kendall tau-b (tie corrected), via Knight's O(n log n) algorithm.
pub fn kendall_row(rp: &RowPair) -> Result<f64, RowSkip> {
    let n = rp.len();
    if n < 2 {
        return Err(RowSkip::TooShort);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        rp.pred[a]
            .total_cmp(&rp.pred[b])
            .then(rp.truth[a].total_cmp(&rp.truth[b]))
    });
    let pred_ties = tied_pairs(order.iter().map(|&k| rp.pred[k].to_bits()));
    let joint_ties = tied_pairs(
        order
            .iter()
            .map(|&k| (rp.pred[k].to_bits(), rp.truth[k].to_bits())),
    );
    let mut truth_seq: Vec<f64> = order.iter().map(|&k| rp.truth[k]).collect();
    let discordant = count_inversions(&mut truth_seq);
    let truth_ties = tied_pairs(truth_seq.iter().map(|v| v.to_bits()));

    let total = (n * (n - 1) / 2) as u64;
    if total == truth_ties {
        return Err(RowSkip::ConstantTruth);
    }
    if total == pred_ties {
        return Err(RowSkip::ConstantPrediction);
    }
    let con_minus_dis = total as f64 - pred_ties as f64 - truth_ties as f64 + joint_ties as f64
        - 2.0 * discordant as f64;
    let denom = ((total - pred_ties) as u128 * (total - truth_ties) as u128) as f64;
    Ok((con_minus_dis / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties get the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rho: Pearson correlation of average ranks.
pub fn spearman_row(rp: &RowPair) -> Result<f64, RowSkip> {
    let n = rp.len();
    if n < 2 {
        return Err(RowSkip::TooShort);
    }
    let rp_ranks = average_ranks(&rp.pred);
    let rt_ranks = average_ranks(&rp.truth);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rp_ranks.iter().zip(&rt_ranks) {
        let (dx, dy) = (x - mean, y - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return Err(RowSkip::ConstantTruth);
    }
    if sxx == 0.0 {
        return Err(RowSkip::ConstantPrediction);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdcgScore {
    pub value: f64,
    /// No relevant item in the row (ideal DCG is zero); `value` is 1.
    pub degenerate: bool,
}

/// NDCG with relevance `1 - truth` (similarity), ranking items by ascending
/// predicted dissimilarity; predicted ties keep ascending sample order.
pub fn ndcg_row(rp: &RowPair, gain: Gain) -> NdcgScore {
    let relevance: Vec<f64> = rp.truth.iter().map(|t| 1.0 - t).collect();
    let mut ranked: Vec<usize> = (0..rp.len()).collect();
    ranked.sort_by(|&a, &b| {
        rp.pred[a]
            .total_cmp(&rp.pred[b])
            .then(rp.indices[a].cmp(&rp.indices[b]))
    });
    let dcg_of = |order: &mut dyn Iterator<Item = f64>| -> f64 {
        order
            .enumerate()
            .map(|(r, rel)| gain.apply(rel) / ((r + 2) as f64).log2())
            .sum()
    };
    let dcg = dcg_of(&mut ranked.iter().map(|&k| relevance[k]));
    let mut ideal = relevance.clone();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg_of(&mut ideal.into_iter());
    if idcg == 0.0 {
        return NdcgScore {
            value: 1.0,
            degenerate: true,
        };
    }
    NdcgScore {
        value: dcg / idcg,
        degenerate: false,
    }
}

/// Column pairs `(j, k)`, `j < k` (positions within the row), whose human
/// ratings differ by strictly more than the margin.
pub fn extract_triplets(truth: &[f64], cfg: &TripletConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..truth.len() {
        for k in j + 1..truth.len() {
            if (truth[j] - truth[k]).abs() > cfg.margin {
                out.push((j, k));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletScore {
    pub value: f64,
    pub triplets: usize,
}

/// Fraction of margin-filtered triplets ordered the same way by prediction
/// and ratings. Predicted ties count as disagreement.
pub fn triplet_agreement_row(rp: &RowPair, cfg: &TripletConfig) -> Result<TripletScore, RowSkip> {
    let triplets = extract_triplets(&rp.truth, cfg);
    if triplets.is_empty() {
        return Err(RowSkip::NoTriplets);
    }
    let agree = triplets
        .iter()
        .filter(|&&(j, k)| {
            let p = rp.pred[j].partial_cmp(&rp.pred[k]);
            let t = rp.truth[j].partial_cmp(&rp.truth[k]);
            p != Some(Ordering::Equal) && p == t
        })
        .count();
    Ok(TripletScore {
        value: agree as f64 / triplets.len() as f64,
        triplets: triplets.len(),
    })
}

/// Values of one metric on one block: per-row scores for rank metrics and
/// per-pair absolute errors for MAE.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValues {
    pub metric: Metric,
    pub values: Vec<f64>,
    pub rows_skipped: usize,
    pub skips: Vec<(RowSkip, usize)>,
    pub triplets: usize,
}

impl MetricValues {
    pub fn mean(&self) -> Option<f64> {
        (!self.values.is_empty())
            .then(|| self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEvaluation {
    pub pairs: usize,
    pub pred_degenerate: bool,
    pub truth_degenerate: bool,
    /// Pairs `(j, k)` within a row that received identical predictions.
    pub predicted_ties: usize,
    pub metrics: Vec<MetricValues>,
}

/// Rescale both blocks over their common pairs and compute `metrics`.
pub fn score_block(
    pred: &SymmetricBlock,
    truth: &SymmetricBlock,
    metrics: &[Metric],
    cfg: &MetricConfig,
) -> Result<BlockEvaluation> {
    let pred = pred.restrict_to(truth);
    let truth = truth.restrict_to(&pred);
    let (pred, pred_degenerate) = pred.rescaled()?;
    let (truth, truth_degenerate) = truth.rescaled()?;
    let rows = row_pairs(&pred, &truth);

    let predicted_ties = rows
        .iter()
        .map(|r| {
            let mut p = r.pred.clone();
            p.sort_by(f64::total_cmp);
            tied_pairs(p.iter().map(|v| v.to_bits())) as usize
        })
        .sum();

    let metrics = metrics
        .iter()
        .map(|&metric| {
            let mut out = MetricValues {
                metric,
                values: Vec::new(),
                rows_skipped: 0,
                skips: Vec::new(),
                triplets: 0,
            };
            if metric == Metric::Mae {
                out.values = absolute_errors(&pred, &truth);
                return out;
            }
            let skip = |reason: RowSkip, out: &mut MetricValues| {
                out.rows_skipped += 1;
                match out.skips.iter_mut().find(|(r, _)| *r == reason) {
                    Some((_, n)) => *n += 1,
                    None => out.skips.push((reason, 1)),
                }
            };
            for row in &rows {
                let score = match metric {
                    Metric::Kendall => kendall_row(row),
                    Metric::Spearman => spearman_row(row),
                    Metric::Ndcg => {
                        let s = ndcg_row(row, cfg.gain);
                        if s.degenerate {
                            Err(RowSkip::ZeroIdeal)
                        } else {
                            Ok(s.value)
                        }
                    }
                    Metric::Triplet => triplet_agreement_row(row, &cfg.triplet).map(|s| {
                        out.triplets += s.triplets;
                        s.value
                    }),
                    Metric::Mae => unreachable!(),
                };
                match score {
                    Ok(v) => out.values.push(v),
                    Err(reason) => skip(reason, &mut out),
                }
            }
            out.skips.sort();
            out
        })
        .collect();

    Ok(BlockEvaluation {
        pairs: pred.defined_count(),
        pred_degenerate,
        truth_degenerate,
        predicted_ties,
        metrics,
    })
}
