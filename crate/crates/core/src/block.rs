//! Square symmetric dissimilarity blocks with optional entries.

use crate::error::{Error, Result};

/// Result of min-max rescaling a set of block entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub values: Vec<f64>,
    /// Set when every entry was equal and all of them were mapped to zero.
    pub degenerate: bool,
}

/// Min-max rescale `values` into `[0, 1]`.
///
/// A constant block maps to all zeros and is flagged as degenerate.
pub fn rescale_block(values: &[f64]) -> Result<Rescaled> {
    if values.is_empty() {
        return Err(Error::EmptyBlock);
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if max == min {
        return Ok(Rescaled {
            values: vec![0.0; values.len()],
            degenerate: true,
        });
    }
    let range = max - min;
    Ok(Rescaled {
        values: values.iter().map(|&v| (v - min) / range).collect(),
        degenerate: false,
    })
}

/// An `n x n` symmetric matrix whose diagonal is undefined and whose
/// off-diagonal entries may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBlock {
    n: usize,
    entries: Vec<Option<f64>>,
}

impl SymmetricBlock {
    pub fn empty(n: usize) -> Self {
        SymmetricBlock {
            n,
            entries: vec![None; n * n],
        }
    }

    /// Build from `(i, j, value)` triples; either orientation is accepted.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut block = SymmetricBlock::empty(n);
        for (i, j, v) in pairs {
            block.set(i, j, v);
        }
        block
    }

    /// Build from a dense matrix, reading the strict upper triangle.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut block = SymmetricBlock::empty(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate().take(n).skip(i + 1) {
                block.set(i, j, v);
            }
        }
        block
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i != j, "diagonal entries are undefined");
        assert!(i < self.n && j < self.n, "index out of range");
        self.entries[i * self.n + j] = Some(value);
        self.entries[j * self.n + i] = Some(value);
    }

    pub fn clear(&mut self, i: usize, j: usize) {
        self.entries[i * self.n + j] = None;
        self.entries[j * self.n + i] = None;
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        self.entries[i * self.n + j]
    }

    /// Defined entries of the strict upper triangle in row-major order.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..self.n).filter_map(move |j| self.get(i, j).map(|v| (i, j, v)))
        })
    }

    pub fn defined_count(&self) -> usize {
        self.upper_pairs().count()
    }

    /// Keep only the entries that are also defined in `other`.
    pub fn restrict_to(&self, other: &SymmetricBlock) -> SymmetricBlock {
        assert_eq!(self.n, other.n, "block sizes differ");
        SymmetricBlock::from_pairs(
            self.n,
            self.upper_pairs()
                .filter(|&(i, j, _)| other.get(i, j).is_some()),
        )
    }

    /// Min-max rescale every defined entry. Returns the block and whether it
    /// was degenerate.
    pub fn rescaled(&self) -> Result<(SymmetricBlock, bool)> {
        let pairs: Vec<_> = self.upper_pairs().collect();
        let values: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        let rescaled = rescale_block(&values)?;
        let block = SymmetricBlock::from_pairs(
            self.n,
            pairs
                .iter()
                .zip(&rescaled.values)
                .map(|(&(i, j, _), &v)| (i, j, v)),
        );
        Ok((block, rescaled.degenerate))
    }

    /// Apply `f` to every defined entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymmetricBlock {
        SymmetricBlock::from_pairs(self.n, self.upper_pairs().map(|(i, j, v)| (i, j, f(v))))
    }
}
