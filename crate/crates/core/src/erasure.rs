//! Closed-form start of R(D) for the Hamming measure extended by two erasure
//! symbols with distortions `d1` and `d2`.
//!
//! With `mu0 = 1 / (1 + (K-1) e^{-lambda})` the curve starts as the Hamming
//! curve, `D = (K-1) e^{-lambda} mu0`, until the slope reaches the positive
//! root `lambda*` of
//!
//! ```text
//! f(lambda) = 1 + (K-1) e^{-lambda} - K e^{-d lambda}
//! ```
//!
//! where `d = min(d1, d2)`. From there on the slope stays at `lambda*` and the
//! cheaper erasure symbol takes the mass `P_Y(K) = (D - a) / (d - a)`, where `a` is
//! the onset distortion. The curve is linear on this piece.

use crate::ba::{duality_gap, RdPoint};
use crate::distortion::{generalized_erasure, DistortionMeasure};
use crate::error::{Error, Result};
use crate::prob::{
    entropy, expected_distortion, mutual_information, output_marginal, OutputMarginal,
    SourceDistribution, TestChannel,
};

/// Output masses down to this are treated as rounding noise and clamped to zero.
pub const VALIDITY_TOL: f64 = 1e-12;

/// A generalized erasure instance at a fixed distortion level.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureProblem {
    k: usize,
    d1: f64,
    d2: f64,
    p_x: SourceDistribution,
    distortion: f64,
    measure: DistortionMeasure,
}

impl ErasureProblem {
    /// Requires a full-support source with `min(d1, d2) < min_k p_x(k)`.
    pub fn new(
        k: usize,
        d1: f64,
        d2: f64,
        p_x: SourceDistribution,
        distortion: f64,
    ) -> Result<Self> {
        let measure = generalized_erasure(k, d1, d2)?;
        if p_x.len() != k {
            return Err(Error::DimensionMismatch {
                context: "erasure source",
                expected: k,
                found: p_x.len(),
            });
        }
        if !p_x.has_full_support() || p_x.probs().iter().any(|&v| v >= 1.0) {
            return Err(Error::InvalidDistribution(
                "erasure source needs 0 < p(k) < 1 for every letter".into(),
            ));
        }
        let d = d1.min(d2);
        if !(d > 0.0) || d >= p_x.min_mass() {
            return Err(Error::InvalidParameter(format!(
                "erasure distortion {d} must lie in (0, min p = {})",
                p_x.min_mass()
            )));
        }
        if !(distortion >= 0.0) || !distortion.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "distortion level {distortion} must be finite and >= 0"
            )));
        }
        Ok(Self {
            k,
            d1,
            d2,
            p_x,
            distortion,
            measure,
        })
    }

    pub fn uniform(k: usize, d1: f64, d2: f64, distortion: f64) -> Result<Self> {
        Self::new(k, d1, d2, SourceDistribution::uniform(k)?, distortion)
    }

    /// Same instance at another distortion level.
    pub fn at(&self, distortion: f64) -> Result<Self> {
        Self::new(self.k, self.d1, self.d2, self.p_x.clone(), distortion)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn source(&self) -> &SourceDistribution {
        &self.p_x
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn measure(&self) -> &DistortionMeasure {
        &self.measure
    }

    /// Erasure column with the smaller distortion and that distortion.
    pub fn active_erasure(&self) -> Result<(usize, f64)> {
        if self.d1 < self.d2 {
            Ok((self.k, self.d1))
        } else if self.d2 < self.d1 {
            Ok((self.k + 1, self.d2))
        } else {
            Err(Error::InvalidParameter(
                "equal erasure distortions have a family of optimizers; use solve_degenerate_family"
                    .into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    HammingSegment,
    ErasureActive,
    DegenerateFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErasureSolution {
    pub lambda: f64,
    pub mu0: f64,
    /// Length `K + 2`.
    pub p_y: OutputMarginal,
    /// Total mass on the erasure symbols.
    pub p_y_erasure: f64,
    pub channel: TestChannel,
    pub distortion: f64,
    pub rate_nats: f64,
    pub segment: Segment,
    pub erasure_column: usize,
}

impl ErasureSolution {
    /// Solver-neutral view, with the duality gap recomputed from the channel.
    pub fn to_rd_point(&self, prob: &ErasureProblem) -> Result<RdPoint> {
        let mut pt = RdPoint {
            distortion: self.distortion,
            rate_nats: self.rate_nats,
            lambda: self.lambda,
            channel: self.channel.clone(),
            output: self.p_y.clone(),
            iterations: 0,
            converged: true,
            gap: 0.0,
        };
        pt.gap = duality_gap(&prob.p_x, &prob.measure, &pt)?;
        Ok(pt)
    }
}

/// Slope of the Hamming curve at distortion `D`.
pub fn hamming_segment_lambda(distortion: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("alphabet size {k} < 2")));
    }
    if !(distortion > 0.0 && distortion < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "distortion {distortion} outside (0, 1)"
        )));
    }
    Ok(((k - 1) as f64).ln() + ((1.0 - distortion) / distortion).ln())
}

/// Common value of the dual variables on the first segment.
pub fn mu0(lambda: f64, k: usize) -> f64 {
    1.0 / (1.0 + (k - 1) as f64 * (-lambda).exp())
}

/// Distortion of the Hamming curve at slope `lambda`.
pub fn hamming_segment_distortion(lambda: f64, k: usize) -> f64 {
    (k - 1) as f64 * (-lambda).exp() * mu0(lambda, k)
}

/// `f(lambda) = 1 + (K-1) e^{-lambda} - K e^{-d lambda}`, evaluated without
/// cancellation near zero.
pub fn lambda_star_residual(lambda: f64, d: f64, k: usize) -> f64 {
    let k = k as f64;
    (k - 1.0) * (-lambda).exp_m1() - k * (-d * lambda).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStar {
    pub value: f64,
    /// `[(1/(1-d)) ln((K-1)/(d^2 K)), ln(K)/d]`
    pub estimate_bracket: (f64, f64),
    /// `[argmin f, ln(K)/d]`, the interval actually bisected.
    pub search_bracket: (f64, f64),
    pub in_estimate_bracket: bool,
}

impl LambdaStar {
    pub fn residual(&self, d: f64, k: usize) -> f64 {
        lambda_star_residual(self.value, d, k)
    }
}

/// The positive root of [`lambda_star_residual`].
///
/// `f(0) = 0`, `f` falls to a single minimum at `ln((K-1)/(K d)) / (1 - d)` and
/// then rises to 1, so the root is bracketed by that minimum and `ln(K)/d`,
/// where `f = (K-1) K^{-1/d} > 0`.
pub fn lambda_star(d: f64, k: usize) -> Result<LambdaStar> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("alphabet size {k} < 2")));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "erasure distortion {d} outside (0, 1)"
        )));
    }
    let kf = k as f64;
    let hi = kf.ln() / d;
    let estimate_bracket = ((1.0 / (1.0 - d)) * ((kf - 1.0) / (d * d * kf)).ln(), hi);
    let argmin = (1.0 / (1.0 - d)) * ((kf - 1.0) / (kf * d)).ln();
    let f = |l: f64| lambda_star_residual(l, d, k);
    if !(argmin > 0.0) || f(argmin) >= 0.0 {
        return Err(Error::NoPositiveRoot(format!(
            "f(lambda) = 1 + {}e^(-lambda) - {k}e^(-{d} lambda) stays >= 0 for lambda > 0",
            k - 1
        )));
    }
    if f(hi) < -1e-12 {
        return Err(Error::NoPositiveRoot(format!(
            "no sign change on [{argmin}, {hi}]: f(hi) = {}",
            f(hi)
        )));
    }
    let (mut lo, mut up) = (argmin, hi);
    while up - lo > f64::EPSILON * up {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    let value = if f(lo).abs() < f(up).abs() { lo } else { up };
    Ok(LambdaStar {
        value,
        estimate_bracket,
        search_bracket: (argmin, hi),
        in_estimate_bracket: estimate_bracket.0 <= value && value <= estimate_bracket.1,
    })
}

/// Distortion at which the erasure symbol enters: the Hamming curve at `lambda*`.
pub fn erasure_onset(d: f64, k: usize) -> Result<f64> {
    Ok(hamming_segment_distortion(lambda_star(d, k)?.value, k))
}

/// Mass on the active erasure symbol at distortion `D`. Negative below the onset.
pub fn erasure_mass(distortion: f64, d: f64, k: usize) -> Result<f64> {
    let a = erasure_onset(d, k)?;
    Ok((distortion - a) / (d - a))
}

/// Smallest `D` at which the erasure mass reaches `c`.
pub fn erasure_onset_dmin(d: f64, k: usize, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mass level {c} must be > 0"
        )));
    }
    if c > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "mass level {c} unreachable: the erasure mass is 1 at D = {d}"
        )));
    }
    let a = erasure_onset(d, k)?;
    Ok(a + c * (d - a))
}

/// Range `[onset, upper]` on which the erasure symbol is active and every
/// letter keeps nonnegative output mass. `upper = d` for uniform sources.
pub fn erasure_segment_range(d: f64, k: usize, p_x: &SourceDistribution) -> Result<(f64, f64)> {
    if p_x.len() != k {
        return Err(Error::DimensionMismatch {
            context: "erasure source",
            expected: k,
            found: p_x.len(),
        });
    }
    let lambda = lambda_star(d, k)?.value;
    let a = hamming_segment_distortion(lambda, k);
    let (e, ed) = ((-lambda).exp(), (-lambda * d).exp());
    let inv_mu = 1.0 / mu0(lambda, k);
    let s_max = p_x
        .probs()
        .iter()
        .map(|&px| (px * inv_mu - e) / (ed - e))
        .fold(1.0, f64::min);
    Ok((a, a + s_max.max(0.0) * (d - a)))
}

/// Output masses of the source letters for slope `lambda` and erasure mass `s`.
fn letter_masses(p_x: &SourceDistribution, lambda: f64, d: f64, s: f64) -> Vec<f64> {
    let k = p_x.len();
    let (e, ed) = ((-lambda).exp(), (-lambda * d).exp());
    let inv_mu = 1.0 / mu0(lambda, k);
    p_x.probs()
        .iter()
        .map(|&px| (px * inv_mu - e - (ed - e) * s) / (1.0 - e))
        .collect()
}

/// Builds the solution from `(lambda, P_Y)` via
/// `P(l|k) = P_Y(l) mu0 e^{-lambda d(k,l)} / P_X(k)`.
fn assemble(
    prob: &ErasureProblem,
    lambda: f64,
    erasure: &[(usize, f64)],
    segment: Segment,
    erasure_column: usize,
) -> Result<ErasureSolution> {
    let k = prob.k;
    let d_act = prob.d1.min(prob.d2);
    let s: f64 = erasure.iter().map(|&(_, m)| m).sum();
    if s > 1.0 + VALIDITY_TOL {
        return Err(Error::RegimeViolation {
            letter: erasure_column,
            value: s,
            detail: format!(
                "distortion {} exceeds the erasure distortion {d_act}",
                prob.distortion
            ),
        });
    }
    let s = s.min(1.0);
    let mut p_y = letter_masses(&prob.p_x, lambda, d_act, s);
    for (letter, &v) in p_y.iter().enumerate() {
        if v < -VALIDITY_TOL {
            return Err(Error::RegimeViolation {
                letter,
                value: v,
                detail: format!(
                    "distortion {} outside the closed-form segment",
                    prob.distortion
                ),
            });
        }
    }
    p_y.iter_mut().for_each(|v| *v = v.max(0.0));
    p_y.extend([0.0, 0.0]);
    for &(col, m) in erasure {
        p_y[col] = m.clamp(0.0, 1.0);
    }

    let m0 = mu0(lambda, k);
    let mut data = Vec::with_capacity(k * (k + 2));
    for (row, &px) in prob.p_x.probs().iter().enumerate() {
        for (col, &q) in p_y.iter().enumerate() {
            data.push(q * m0 * (-lambda * prob.measure.get(row, col)).exp() / px);
        }
    }
    let row_error = data
        .chunks(k + 2)
        .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    if row_error > 1e-10 {
        return Err(Error::RegimeViolation {
            letter: erasure_column,
            value: row_error,
            detail: "reconstructed channel is not row-stochastic".into(),
        });
    }
    let channel = TestChannel::from_rows_normalized(k, k + 2, data);

    let distortion = expected_distortion(&prob.p_x, &channel, &prob.measure)?;
    let rate_nats = mutual_information(&prob.p_x, &channel)?.nats();
    debug_assert!(
        (rate_nats - (entropy(&prob.p_x).nats() + m0.ln() - lambda * distortion)).abs() < 1e-8,
        "closed-form rate disagrees with the dual value"
    );
    Ok(ErasureSolution {
        lambda,
        mu0: m0,
        p_y: output_marginal(&prob.p_x, &channel)?,
        p_y_erasure: s,
        channel,
        distortion,
        rate_nats,
        segment,
        erasure_column,
    })
}

fn zero_distortion(prob: &ErasureProblem, erasure_column: usize) -> Result<ErasureSolution> {
    let k = prob.k;
    let mut data = vec![0.0; k * (k + 2)];
    for i in 0..k {
        data[i * (k + 2) + i] = 1.0;
    }
    let channel = TestChannel::from_rows_normalized(k, k + 2, data);
    Ok(ErasureSolution {
        lambda: f64::INFINITY,
        mu0: 1.0,
        p_y: output_marginal(&prob.p_x, &channel)?,
        p_y_erasure: 0.0,
        rate_nats: entropy(&prob.p_x).nats(),
        distortion: 0.0,
        channel,
        segment: Segment::HammingSegment,
        erasure_column,
    })
}

fn solve_split(
    prob: &ErasureProblem,
    column: usize,
    split: Option<f64>,
) -> Result<ErasureSolution> {
    let (k, dist) = (prob.k, prob.distortion);
    let d_act = prob.d1.min(prob.d2);
    if dist == 0.0 {
        return zero_distortion(prob, column);
    }
    let star = lambda_star(d_act, k)?.value;
    let onset = hamming_segment_distortion(star, k);
    if dist <= onset {
        let lambda = hamming_segment_lambda(dist, k)?.max(star);
        return assemble(prob, lambda, &[], Segment::HammingSegment, column);
    }
    let s = (dist - onset) / (d_act - onset);
    match split {
        None => assemble(prob, star, &[(column, s)], Segment::ErasureActive, column),
        Some(mix) => assemble(
            prob,
            star,
            &[(k, mix * s), (k + 1, (1.0 - mix) * s)],
            Segment::DegenerateFamily,
            column,
        ),
    }
}

/// Closed-form optimum on the first part of the curve. Distinct `d1`, `d2` only.
pub fn solve_erasure_segment(prob: &ErasureProblem) -> Result<ErasureSolution> {
    let (column, _) = prob.active_erasure()?;
    solve_split(prob, column, None)
}

/// For `d1 = d2`: the optimum that splits the erasure mass as
/// `(mix s, (1 - mix) s)` between the two identical erasure symbols. All
/// members share rate and distortion.
pub fn solve_degenerate_family(prob: &ErasureProblem, mix: f64) -> Result<ErasureSolution> {
    if prob.d1 != prob.d2 {
        return Err(Error::InvalidParameter(format!(
            "family needs d1 = d2, got {} and {}",
            prob.d1, prob.d2
        )));
    }
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::InvalidParameter(format!("mix {mix} not in [0, 1]")));
    }
    solve_split(prob, prob.k, Some(mix))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub masses: Vec<f64>,
    /// First index whose mass drops below its predecessor by more than the slack.
    pub first_violation: Option<usize>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub fn check_non_decreasing(values: &[f64], slack: f64) -> Option<usize> {
    values
        .windows(2)
        .position(|w| w[1] < w[0] - slack)
        .map(|i| i + 1)
}

/// Erasure mass along an ascending grid, checked for monotonicity with slack `1e-9`.
/// Equal erasure distortions use the total mass of the family.
pub fn monotonicity_check(prob: &ErasureProblem, grid: &[f64]) -> Result<MonotonicityReport> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter(
            "distortion grid must be ascending".into(),
        ));
    }
    let masses = grid
        .iter()
        .map(|&dist| {
            let p = prob.at(dist)?;
            let sol = if p.d1 == p.d2 {
                solve_degenerate_family(&p, 1.0)?
            } else {
                solve_erasure_segment(&p)?
            };
            Ok(sol.p_y_erasure)
        })
        .collect::<Result<Vec<_>>>()?;
    let first_violation = check_non_decreasing(&masses, 1e-9);
    Ok(MonotonicityReport {
        masses,
        first_violation,
    })
}
