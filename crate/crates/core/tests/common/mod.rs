//! Shared fixtures and brute-force reference implementations.
//!
//! The reference metrics below use explicit loops over pairs, ranks and
//! triplets. They share no code with the library.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::{Path, PathBuf};

use rand::Rng;
use timbre_align::audio::{encode_wav, WavEncoding, Waveform};
use timbre_align::dataset::{Manifest, Rating};

/// Dense `n x n` matrix with `None` for missing pairs and the diagonal.
pub type Dense = Vec<Vec<Option<f64>>>;

pub fn dense_from(n: usize, pairs: &[(usize, usize, f64)]) -> Dense {
    let mut m = vec![vec![None; n]; n];
    for &(i, j, v) in pairs {
        m[i][j] = Some(v);
        m[j][i] = Some(v);
    }
    m
}

/// Min-max rescale of the upper-triangle entries defined in both matrices.
pub fn brute_rescale(pred: &Dense, truth: &Dense) -> (Dense, Dense) {
    let n = pred.len();
    let mut keep = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            keep[i][j] = i != j && pred[i][j].is_some() && truth[i][j].is_some();
        }
    }
    let scale = |m: &Dense| -> Dense {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                if keep[i][j] {
                    let v = m[i][j].unwrap();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        let mut out = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if keep[i][j] {
                    let v = m[i][j].unwrap();
                    out[i][j] = Some(if hi == lo { 0.0 } else { (v - lo) / (hi - lo) });
                }
            }
        }
        out
    };
    (scale(pred), scale(truth))
}

/// Aligned row entries `(pred, truth)` for reference `i`, by ascending `j`.
pub fn brute_row(pred: &Dense, truth: &Dense, i: usize) -> Vec<(f64, f64)> {
    (0..pred.len())
        .filter_map(|j| Some((pred[i][j]?, truth[i][j]?)))
        .collect()
}

pub fn brute_mae(pred: &Dense, truth: &Dense) -> Vec<f64> {
    let n = pred.len();
    let mut errs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let (Some(p), Some(t)) = (pred[i][j], truth[i][j]) {
                errs.push((p - t).abs());
            }
        }
    }
    errs
}

/// Tau-b from explicit concordant / discordant / tie counts.
pub fn brute_kendall(row: &[(f64, f64)]) -> Option<f64> {
    let n = row.len();
    if n < 2 {
        return None;
    }
    let (mut c, mut d, mut tx, mut ty) = (0.0, 0.0, 0.0, 0.0);
    for a in 0..n {
        for b in a + 1..n {
            let dx = row[a].0 - row[b].0;
            let dy = row[a].1 - row[b].1;
            if dx == 0.0 {
                tx += 1.0;
            }
            if dy == 0.0 {
                ty += 1.0;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    c += 1.0;
                } else {
                    d += 1.0;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    if tx == n0 || ty == n0 {
        return None;
    }
    Some((c - d) / ((n0 - tx) * (n0 - ty)).sqrt())
}

/// Rank = 1 + (number smaller) + (number of other equal values) / 2.
fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn brute_spearman(row: &[(f64, f64)]) -> Option<f64> {
    if row.len() < 2 {
        return None;
    }
    let rx = brute_ranks(&row.iter().map(|r| r.0).collect::<Vec<_>>());
    let ry = brute_ranks(&row.iter().map(|r| r.1).collect::<Vec<_>>());
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for k in 0..rx.len() {
        sxy += (rx[k] - mx) * (ry[k] - my);
        sxx += (rx[k] - mx) * (rx[k] - mx);
        syy += (ry[k] - my) * (ry[k] - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Linear-gain NDCG. Items are visited by repeatedly picking the smallest
/// remaining prediction (first index on ties).
pub fn brute_ndcg(row: &[(f64, f64)]) -> Option<f64> {
    let rel: Vec<f64> = row.iter().map(|r| 1.0 - r.1).collect();
    let mut left: Vec<usize> = (0..row.len()).collect();
    let mut dcg = 0.0;
    let mut pos = 0;
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            if row[left[k]].0 < row[left[best]].0 {
                best = k;
            }
        }
        dcg += rel[left[best]] / ((pos + 2) as f64).log2();
        left.remove(best);
        pos += 1;
    }
    let mut ideal = rel.clone();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let idcg: f64 = ideal
        .iter()
        .enumerate()
        .map(|(p, r)| r / ((p + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        return None;
    }
    Some(dcg / idcg)
}

/// `(agreement, triplet count)`.
pub fn brute_triplet(row: &[(f64, f64)], margin: f64) -> Option<(f64, usize)> {
    let mut total = 0;
    let mut agree = 0;
    for j in 0..row.len() {
        for k in j + 1..row.len() {
            let dt = row[j].1 - row[k].1;
            if dt.abs() <= margin {
                continue;
            }
            total += 1;
            let dp = row[j].0 - row[k].0;
            if dp != 0.0 && (dp > 0.0) == (dt > 0.0) {
                agree += 1;
            }
        }
    }
    (total > 0).then(|| (agree as f64 / total as f64, total))
}

/// Reference corpus evaluation: `[mae, kendall, spearman, ndcg, triplet]`
/// global means over pairs (MAE) or rows.
pub fn brute_corpus(blocks: &[(Dense, Dense)], margin: f64) -> [Option<f64>; 5] {
    let mut acc: [Vec<f64>; 5] = Default::default();
    for (pred, truth) in blocks {
        let (p, t) = brute_rescale(pred, truth);
        acc[0].extend(brute_mae(&p, &t));
        for i in 0..p.len() {
            let row = brute_row(&p, &t, i);
            if row.is_empty() {
                continue;
            }
            acc[1].extend(brute_kendall(&row));
            acc[2].extend(brute_spearman(&row));
            acc[3].extend(brute_ndcg(&row));
            acc[4].extend(brute_triplet(&row, margin).map(|t| t.0));
        }
    }
    acc.map(|v| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
}

/// Random block: values drawn from a coarse grid (to force ties) or
/// continuously, with some pairs missing.
pub fn random_pairs(
    rng: &mut impl Rng,
    n: usize,
    missing: f64,
    coarse: bool,
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(missing) {
                continue;
            }
            let v = if coarse {
                rng.gen_range(0..6) as f64
            } else {
                rng.gen_range(0.0..10.0)
            };
            out.push((i, j, v));
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix (cyclic Jacobi rotations).
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Decaying harmonic tone.
pub fn tone(seconds: f64, rate: u32, f0: f64, harmonics: usize) -> Waveform {
    let n = (seconds * rate as f64).round() as usize;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / rate as f64;
            (1..=harmonics)
                .map(|h| 0.3 / h as f64 * (2.0 * std::f64::consts::PI * f0 * h as f64 * t).sin())
                .sum::<f64>()
                * (-3.0 * t).exp()
        })
        .collect();
    Waveform::new(samples, rate).unwrap()
}

/// Write a small corpus of WAV files plus manifests into `dir`; returns the
/// manifest paths. Sample lengths differ within each dataset.
pub fn write_audio_corpus(dir: &Path, datasets: usize, per_dataset: usize) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for d in 0..datasets {
        let name = format!("set{d}");
        let mut audio = Vec::new();
        for k in 0..per_dataset {
            let file = format!("{name}_{k}.wav");
            let secs = 0.2 + 0.05 * ((k * 7 + d * 3) % 5) as f64;
            let wave = tone(secs, 44_100, 196.0 * (1.0 + 0.25 * d as f64), 1 + (k % 6));
            encode_wav(&dir.join(&file), &wave, WavEncoding::Float32).unwrap();
            audio.push(file);
        }
        let mut ratings = Vec::new();
        for i in 0..per_dataset {
            for j in i + 1..per_dataset {
                let v = ((i * 31 + j * 17 + d * 5) % 9) as f64 + 0.5 * (j - i) as f64;
                ratings.push(Rating(i, j, v));
            }
        }
        let path = dir.join(format!("{name}.json"));
        Manifest {
            name,
            audio,
            ratings,
            pitch: None,
        }
        .save(&path)
        .unwrap();
        paths.push(path);
    }
    paths
}
