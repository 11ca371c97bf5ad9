//! Distances between flattened representations. Everything accumulates in
//! `f64`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default margin kept between projected points and the unit sphere.
pub const BALL_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistanceKind {
    L1,
    L2,
    Cosine,
    NegDot,
    Poincare,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 5] = [
        DistanceKind::L1,
        DistanceKind::L2,
        DistanceKind::Cosine,
        DistanceKind::NegDot,
        DistanceKind::Poincare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::L1 => "l1",
            DistanceKind::L2 => "l2",
            DistanceKind::Cosine => "cosine",
            DistanceKind::NegDot => "negdot",
            DistanceKind::Poincare => "poincare",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistanceKind::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "distance",
                value: s.to_string(),
            })
    }
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::DimensionMismatch { left: 0, right: 0 });
    }
    Ok(())
}

pub fn l1(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    Ok(u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum())
}

pub fn l2(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    Ok(u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `1 - cos(u, v)`; undefined for zero vectors.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    let (nu, nv) = (dot(u, u), dot(v, v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(1.0 - dot(u, v) / (nu.sqrt() * nv.sqrt()))
}

pub fn neg_dot(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    Ok(-dot(u, v))
}

fn poincare_from_terms(sq_diff: f64, nu2: f64, nv2: f64) -> Result<f64> {
    let denom = (1.0 - nu2) * (1.0 - nv2);
    let d = (1.0 + 2.0 * sq_diff / denom).acosh();
    if !d.is_finite() || denom <= 0.0 {
        return Err(Error::NonFinite(
            "Poincare distance (points must lie inside the unit ball; project first)".into(),
        ));
    }
    Ok(d)
}

/// Hyperbolic distance on the open unit ball.
pub fn poincare(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    poincare_from_terms(sq, dot(u, u), dot(v, v))
}

/// Common factor that brings the largest norm to `1 - eps`; 1 when every
/// vector is already inside that radius.
pub fn projection_scale(max_norm: f64, eps: f64) -> f64 {
    if max_norm >= 1.0 - eps {
        (1.0 - eps) / max_norm
    } else {
        1.0
    }
}

/// Scale every vector of a batch by one common factor so all of them lie
/// within radius `1 - eps`. Returns the factor applied.
pub fn ball_projection(batch: &mut [Vec<f64>], eps: f64) -> f64 {
    let max_norm = batch.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max);
    let s = projection_scale(max_norm, eps);
    if s != 1.0 {
        for v in batch.iter_mut() {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }
    s
}

pub fn distance(kind: DistanceKind, u: &[f64], v: &[f64]) -> Result<f64> {
    match kind {
        DistanceKind::L1 => l1(u, v),
        DistanceKind::L2 => l2(u, v),
        DistanceKind::Cosine => cosine(u, v),
        DistanceKind::NegDot => neg_dot(u, v),
        DistanceKind::Poincare => poincare(u, v),
    }
}

/// Sufficient statistics of a vector pair, from which every distance kind
/// can be finished. Computed in a single pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms {
    pub abs_diff: f64,
    pub sq_diff: f64,
    pub dot: f64,
    pub norm_u2: f64,
    pub norm_v2: f64,
}

impl PairTerms {
    pub fn compute(u: &[f64], v: &[f64]) -> Result<PairTerms> {
        check_dims(u, v)?;
        let mut t = PairTerms {
            abs_diff: 0.0,
            sq_diff: 0.0,
            dot: 0.0,
            norm_u2: 0.0,
            norm_v2: 0.0,
        };
        for (&a, &b) in u.iter().zip(v) {
            let d = a - b;
            t.abs_diff += d.abs();
            t.sq_diff += d * d;
            t.dot += a * b;
            t.norm_u2 += a * a;
            t.norm_v2 += b * b;
        }
        Ok(t)
    }

    pub fn max_norm(&self) -> f64 {
        self.norm_u2.max(self.norm_v2).sqrt()
    }

    /// Finish the distance. `ball_scale` is the common projection factor
    /// applied to both vectors before the Poincare distance.
    pub fn finish(&self, kind: DistanceKind, ball_scale: f64) -> Result<f64> {
        match kind {
            DistanceKind::L1 => Ok(self.abs_diff),
            DistanceKind::L2 => Ok(self.sq_diff.sqrt()),
            DistanceKind::Cosine => {
                if self.norm_u2 == 0.0 || self.norm_v2 == 0.0 {
                    return Err(Error::ZeroVector);
                }
                Ok(1.0 - self.dot / (self.norm_u2.sqrt() * self.norm_v2.sqrt()))
            }
            DistanceKind::NegDot => Ok(-self.dot),
            DistanceKind::Poincare => {
                let s2 = ball_scale * ball_scale;
                poincare_from_terms(s2 * self.sq_diff, s2 * self.norm_u2, s2 * self.norm_v2)
            }
        }
    }
}
