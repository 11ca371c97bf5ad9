//! Style embeddings from feature maps.
//!
//! * Gatys: the channel Gram matrix, averaged over spatial positions.
//! * Huang: channel-wise mean followed by channel-wise (population) standard
//!   deviation.
//!
//! Both ignore where in the map an activation occurred. Spatial positions are
//! visited in a canonical order (columns sorted lexicographically) so that
//! permuting positions leaves the result bit-for-bit unchanged.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayD, Axis};

use crate::error::{Error, Result};

/// Activations of one layer as `channels x positions`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    data: Array2<f64>,
    layer_id: String,
}

impl FeatureMap {
    pub fn new(data: Array2<f64>, layer_id: impl Into<String>) -> Result<FeatureMap> {
        let layer_id = layer_id.into();
        let (c, s) = data.dim();
        if c == 0 || s == 0 {
            return Err(Error::Config(format!(
                "feature map '{layer_id}' must have at least one channel and one position"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature map '{layer_id}'")));
        }
        Ok(FeatureMap { data, layer_id })
    }

    /// Channels-first tensor `C x H x W ...`; trailing axes are flattened
    /// into positions.
    pub fn from_channels_first(
        tensor: &ArrayD<f64>,
        layer_id: impl Into<String>,
    ) -> Result<FeatureMap> {
        let layer_id = layer_id.into();
        if tensor.ndim() == 0 {
            return Err(Error::Config(format!(
                "feature map '{layer_id}' is a scalar"
            )));
        }
        let c = tensor.shape()[0];
        let s: usize = tensor.shape()[1..].iter().product();
        let data = tensor
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((c, s))
            .map_err(|e| Error::Config(format!("feature map '{layer_id}': {e}")))?;
        FeatureMap::new(data, layer_id)
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn layer_id(&self) -> &str {
        &self.layer_id
    }

    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn positions(&self) -> usize {
        self.data.ncols()
    }

    /// Position indices ordered by their activation column.
    fn canonical_positions(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.positions()).collect();
        order.sort_by(|&a, &b| {
            self.data
                .column(a)
                .iter()
                .zip(self.data.column(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
        order
    }
}

/// Treat transformer tokens `T x C` as a feature map with `C` channels over
/// `T` positions.
pub fn tokens_as_featuremap(
    tokens: &Array2<f64>,
    layer_id: impl Into<String>,
) -> Result<FeatureMap> {
    FeatureMap::new(tokens.t().to_owned(), layer_id)
}

/// How Gram entries are scaled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GramNorm {
    /// Divide by the number of positions.
    #[default]
    Positions,
    /// Plain inner products.
    Raw,
}

/// `G[a][b] = sum_s x[a][s] x[b][s]`, divided by the position count unless
/// `norm` is [`GramNorm::Raw`].
pub fn gram_style(fm: &FeatureMap, norm: GramNorm) -> Array2<f64> {
    let c = fm.channels();
    let order = fm.canonical_positions();
    // Channel rows laid out in canonical position order for cache-friendly dots.
    let rows: Vec<Vec<f64>> = (0..c)
        .map(|a| order.iter().map(|&s| fm.data[[a, s]]).collect())
        .collect();
    let scale = match norm {
        GramNorm::Positions => 1.0 / fm.positions() as f64,
        GramNorm::Raw => 1.0,
    };
    let mut gram = Array2::zeros((c, c));
    for a in 0..c {
        for b in a..c {
            let dot: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
            gram[[a, b]] = dot * scale;
            gram[[b, a]] = dot * scale;
        }
    }
    gram
}

/// `[mean_1..mean_C, std_1..std_C]` over positions (population std).
pub fn meanstd_style(fm: &FeatureMap) -> Vec<f64> {
    let c = fm.channels();
    let n = fm.positions() as f64;
    let order = fm.canonical_positions();
    let mut means = Vec::with_capacity(c);
    let mut stds = Vec::with_capacity(c);
    for row in fm.data.axis_iter(Axis(0)) {
        let mean = order.iter().map(|&s| row[s]).sum::<f64>() / n;
        let var = order.iter().map(|&s| (row[s] - mean).powi(2)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    means.extend(stds);
    means
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StyleKind {
    Gatys,
    Huang,
}

impl StyleKind {
    pub fn name(self) -> &'static str {
        match self {
            StyleKind::Gatys => "gatys",
            StyleKind::Huang => "huang",
        }
    }
}

/// A flat style vector plus the layers it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleEmbedding {
    pub data: Vec<f64>,
    pub kind: StyleKind,
    pub layer_ids: Vec<String>,
}

/// Single-layer style embedding.
pub fn style_embedding(fm: &FeatureMap, kind: StyleKind, norm: GramNorm) -> StyleEmbedding {
    let data = match kind {
        StyleKind::Gatys => gram_style(fm, norm).into_iter().collect(),
        StyleKind::Huang => meanstd_style(fm),
    };
    StyleEmbedding {
        data,
        kind,
        layer_ids: vec![fm.layer_id.clone()],
    }
}

/// Concatenate per-layer embeddings of one kind, in the given order.
pub fn concat_style(embeddings: &[StyleEmbedding]) -> Result<StyleEmbedding> {
    let first = embeddings.first().ok_or(Error::EmptyStyleList)?;
    if embeddings.iter().any(|e| e.kind != first.kind) {
        return Err(Error::MixedStyleKinds);
    }
    Ok(StyleEmbedding {
        data: embeddings
            .iter()
            .flat_map(|e| e.data.iter().copied())
            .collect(),
        kind: first.kind,
        layer_ids: embeddings
            .iter()
            .flat_map(|e| e.layer_ids.iter().cloned())
            .collect(),
    })
}
