//! Fixed problem instances shared by the benchmarks.

use rdlab_core::distortion::hamming;
use rdlab_core::erasure::{erasure_segment_range, ErasureProblem};
use rdlab_core::{DistortionMeasure, SourceDistribution};

pub fn binary_hamming() -> (SourceDistribution, DistortionMeasure) {
    (SourceDistribution::uniform(2).unwrap(), hamming(2).unwrap())
}

/// A `k x k` problem with distortion `|i - j|` under a geometric source.
pub fn absolute_error(k: usize) -> (SourceDistribution, DistortionMeasure) {
    let w: Vec<f64> = (0..k).map(|i| 0.8f64.powi(i as i32)).collect();
    let s: f64 = w.iter().sum();
    let rows = (0..k)
        .map(|i| (0..k).map(|j| (i as f64 - j as f64).abs()).collect())
        .collect();
    (
        SourceDistribution::new(w.iter().map(|v| v / s).collect()).unwrap(),
        DistortionMeasure::new(rows).unwrap(),
    )
}

/// Uniform erasure problem at the middle of its erasure-active segment.
pub fn erasure_midpoint(k: usize, d1: f64) -> ErasureProblem {
    let base = ErasureProblem::uniform(k, d1, d1 + 0.1, 0.0).unwrap();
    let (onset, upper) = erasure_segment_range(d1, k, base.source()).unwrap();
    base.at(0.5 * (onset + upper)).unwrap()
}
