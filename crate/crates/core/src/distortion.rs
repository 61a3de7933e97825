//! Distortion matrices and the scalars derived from them.

use crate::error::{Error, Result};
use crate::prob::SourceDistribution;

/// Dense `K x L` matrix of finite, nonnegative per-letter distortions.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMeasure {
    source_size: usize,
    repro_size: usize,
    entries: Vec<f64>,
}

impl DistortionMeasure {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let source_size = rows.len();
        if source_size == 0 {
            return Err(Error::InvalidMeasure("no rows".into()));
        }
        let repro_size = rows[0].len();
        if repro_size == 0 {
            return Err(Error::InvalidMeasure("no columns".into()));
        }
        let mut entries = Vec::with_capacity(source_size * repro_size);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != repro_size {
                return Err(Error::DimensionMismatch {
                    context: "distortion row",
                    expected: repro_size,
                    found: row.len(),
                });
            }
            for (l, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidMeasure(format!(
                        "entry ({k}, {l}) = {v} is not finite"
                    )));
                }
                if v < 0.0 {
                    return Err(Error::InvalidMeasure(format!(
                        "entry ({k}, {l}) = {v} is negative"
                    )));
                }
            }
            entries.extend(row);
        }
        Ok(Self {
            source_size,
            repro_size,
            entries,
        })
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn repro_size(&self) -> usize {
        self.repro_size
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[k * self.repro_size + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.repro_size..(k + 1) * self.repro_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.repro_size)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        if self.source_size != other.source_size || self.repro_size != other.repro_size {
            return Err(Error::DimensionMismatch {
                context: "frobenius distance",
                expected: self.entries.len(),
                found: other.entries.len(),
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// First column that is zero in every row, if any.
    pub fn all_zero_column(&self) -> Option<usize> {
        (0..self.repro_size).find(|&l| (0..self.source_size).all(|k| self.get(k, l) == 0.0))
    }

    pub(crate) fn check_source(&self, p: &SourceDistribution) -> Result<()> {
        if p.len() != self.source_size {
            return Err(Error::DimensionMismatch {
                context: "source vs distortion rows",
                expected: self.source_size,
                found: p.len(),
            });
        }
        Ok(())
    }
}

/// Every row contains at least one zero.
pub fn is_normal(d: &DistortionMeasure) -> bool {
    d.rows().all(|row| row.contains(&0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationResult {
    pub normal_measure: DistortionMeasure,
    /// Row minima `c_k` that were subtracted.
    pub row_offsets: Vec<f64>,
    /// `sum_k p(k) c_k`: distortion levels of the normal problem are shifted down by this.
    pub distortion_shift: f64,
}

/// Subtracts each row's minimum. R(D) of the original problem equals R(D - shift)
/// of the returned one, with the same optimal channels.
pub fn normalize(d: &DistortionMeasure, p: &SourceDistribution) -> Result<NormalizationResult> {
    d.check_source(p)?;
    let row_offsets: Vec<f64> = d
        .rows()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let rows = d
        .rows()
        .zip(&row_offsets)
        .map(|(row, c)| row.iter().map(|v| v - c).collect())
        .collect();
    let distortion_shift = p
        .probs()
        .iter()
        .zip(&row_offsets)
        .map(|(pk, c)| pk * c)
        .sum();
    Ok(NormalizationResult {
        normal_measure: DistortionMeasure::new(rows)?,
        row_offsets,
        distortion_shift,
    })
}

/// Smallest distortion reachable at rate zero, i.e. the best single
/// reproduction letter, together with that letter (smallest index on ties).
pub fn d_max(p: &SourceDistribution, d: &DistortionMeasure) -> Result<(f64, usize)> {
    d.check_source(p)?;
    let mut best = (f64::INFINITY, 0);
    for l in 0..d.repro_size() {
        let avg: f64 = (0..d.source_size()).map(|k| p[k] * d.get(k, l)).sum();
        if avg < best.0 {
            best = (avg, l);
        }
    }
    Ok(best)
}

/// `sum_k p(k) min_l d(k, l)`: no test channel achieves less.
pub fn d_min(p: &SourceDistribution, d: &DistortionMeasure) -> Result<f64> {
    d.check_source(p)?;
    Ok(p.probs()
        .iter()
        .zip(d.rows())
        .map(|(pk, row)| pk * row.iter().copied().fold(f64::INFINITY, f64::min))
        .sum())
}

pub fn hamming(k: usize) -> Result<DistortionMeasure> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "Hamming measure needs at least 2 letters, got {k}"
        )));
    }
    let rows = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect();
    DistortionMeasure::new(rows)
}

/// Hamming measure on `K` letters plus two erasure columns `K` and `K + 1`
/// with constant distortions `d1` and `d2`.
pub fn generalized_erasure(k: usize, d1: f64, d2: f64) -> Result<DistortionMeasure> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "erasure measure needs at least 2 source letters, got {k}"
        )));
    }
    for (name, v) in [("d1", d1), ("d2", d2)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} = {v} must be finite and >= 0"
            )));
        }
    }
    let rows = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect();
            row.push(d1);
            row.push(d2);
            row
        })
        .collect();
    DistortionMeasure::new(rows)
}

/// Recognizes the output of [`generalized_erasure`], returning `(K, d1, d2)`.
pub fn as_generalized_erasure(d: &DistortionMeasure) -> Option<(usize, f64, f64)> {
    let k = d.source_size();
    if k < 2 || d.repro_size() != k + 2 {
        return None;
    }
    let (d1, d2) = (d.get(0, k), d.get(0, k + 1));
    let ok = (0..k).all(|i| {
        (0..k).all(|j| d.get(i, j) == if i == j { 0.0 } else { 1.0 })
            && d.get(i, k) == d1
            && d.get(i, k + 1) == d2
    });
    ok.then_some((k, d1, d2))
}
