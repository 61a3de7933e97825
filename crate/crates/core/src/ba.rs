//! Blahut-Arimoto alternating minimization for the rate-distortion function.
//!
//! At slope `lambda` the iteration alternates
//!
//! ```text
//! ch(l|k) = q(l) exp(-lambda d(k,l)) / z_k,    z_k = sum_l q(l) exp(-lambda d(k,l))
//! q(l)    = sum_k p(k) ch(l|k)
//! ```
//!
//! starting from the uniform output marginal. With `c_l = sum_k p(k) exp(-lambda d(k,l)) / z_k`
//! the quantity `ln max_l c_l - sum_l q(l) c_l ln c_l` bounds the distance of the
//! Lagrangian `I + lambda E[d]` from its minimum. Only this value gap and the
//! per-iteration rate change are used to stop: optimal channels need not be
//! unique, so the channel itself is never required to settle.
//!
//! A target distortion is reached by a safeguarded secant search on `lambda`
//! that stops at a slope whose distortion is within tolerance of the target.
//! On a linear piece of R(D) every interior point has the same slope, so no
//! slope lands inside the piece. There the two bracketing channels are
//! time-shared so that the expected distortion hits the target exactly.

use std::cell::Cell;

use rayon::prelude::*;

use crate::distortion::{d_max, d_min, DistortionMeasure};
use crate::error::{Error, Result};
use crate::prob::{
    entropy, expected_distortion, mutual_information, output_marginal, OutputMarginal,
    SourceDistribution, TestChannel,
};

/// Slack allowed on the dual feasibility constraints `sum_k mu_k e^{-lambda d(k,l)} <= 1`.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;
/// Optimality residual a time-shared point must meet to count as converged.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Share of the uniform distribution mixed into a warm start, so that no
/// output letter starts at zero.
const WARM_START_FLOOR: f64 = 1e-9;
/// Output letters below this mass count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once both the rate change per iteration and the value gap fall below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial slope bracket for target-distortion solves.
    pub lambda_bracket: (f64, f64),
    /// The upper end of the bracket is doubled up to this cap.
    pub lambda_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            lambda_bracket: (0.0, 64.0),
            lambda_max: (1u64 << 20) as f64,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        let (lo, hi) = self.lambda_bracket;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda bracket ({lo}, {hi}) must satisfy 0 <= lo < hi < inf"
            )));
        }
        if !(self.lambda_max >= hi) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max {} below bracket end {hi}",
                self.lambda_max
            )));
        }
        Ok(())
    }
}

/// One solved point on the R(D) curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub distortion: f64,
    pub rate_nats: f64,
    /// Slope magnitude. `+inf` for the minimum-distortion point.
    pub lambda: f64,
    pub channel: TestChannel,
    pub output: OutputMarginal,
    pub iterations: usize,
    pub converged: bool,
    /// Primal rate minus the best dual lower bound available at this point.
    pub gap: f64,
}

impl RdPoint {
    pub fn rate_bits(&self) -> f64 {
        self.rate_nats / std::f64::consts::LN_2
    }

    fn assemble(
        p: &SourceDistribution,
        d: &DistortionMeasure,
        channel: TestChannel,
        lambda: f64,
        iterations: usize,
        converged: bool,
        gap: f64,
    ) -> Result<Self> {
        Ok(Self {
            distortion: expected_distortion(p, &channel, d)?,
            rate_nats: mutual_information(p, &channel)?.nats(),
            output: output_marginal(p, &channel)?,
            lambda,
            channel,
            iterations,
            converged,
            gap,
        })
    }
}

/// Rows of the problem that carry probability mass.
struct Support {
    rows: Vec<usize>,
    probs: Vec<f64>,
}

impl Support {
    fn of(p: &SourceDistribution) -> Self {
        let rows: Vec<usize> = (0..p.len()).filter(|&k| p[k] > 0.0).collect();
        let probs = rows.iter().map(|&k| p[k]).collect();
        Self { rows, probs }
    }

    /// Expands a channel over the support rows to all rows; rows without mass
    /// get the uniform distribution.
    fn expand(&self, k_full: usize, outputs: usize, reduced: &[f64]) -> TestChannel {
        let mut data = vec![1.0 / outputs as f64; k_full * outputs];
        for (i, &k) in self.rows.iter().enumerate() {
            data[k * outputs..(k + 1) * outputs]
                .copy_from_slice(&reduced[i * outputs..(i + 1) * outputs]);
        }
        TestChannel::from_rows_normalized(k_full, outputs, data)
    }
}

enum Kernel {
    Slope(f64),
    /// `lambda -> infinity`: only each row's minimum-distortion letters are allowed.
    RowMinimum,
}

struct BaOutcome {
    channel: Vec<f64>,
    iterations: usize,
    converged: bool,
    gap: f64,
}

/// Runs the alternating minimization on the support rows. Kernel rows are
/// shifted by their minimum distortion, which leaves the iteration unchanged
/// and keeps a unit entry in every row.
fn run_ba(
    support: &Support,
    d: &DistortionMeasure,
    kernel: Kernel,
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> BaOutcome {
    let l_size = d.repro_size();
    let lambda = match kernel {
        Kernel::Slope(l) => l,
        Kernel::RowMinimum => 0.0,
    };
    let mut a = Vec::with_capacity(support.rows.len() * l_size);
    let mut shift = 0.0;
    for (&k, pk) in support.rows.iter().zip(&support.probs) {
        let row = d.row(k);
        let m = row.iter().copied().fold(f64::INFINITY, f64::min);
        shift += pk * m;
        a.extend(row.iter().map(|&v| match kernel {
            Kernel::Slope(l) => (-l * (v - m)).exp(),
            Kernel::RowMinimum => {
                if v == m {
                    1.0
                } else {
                    0.0
                }
            }
        }));
    }

    let p = &support.probs;
    let uniform = 1.0 / l_size as f64;
    let mut q = match init {
        Some(start) => start
            .iter()
            .map(|v| (1.0 - WARM_START_FLOOR) * v + WARM_START_FLOOR * uniform)
            .collect(),
        None => vec![uniform; l_size],
    };
    let mut z = vec![0.0; p.len()];
    let mut c = vec![0.0; l_size];
    let mut prev_rate = f64::INFINITY;
    let mut prev_obj = f64::INFINITY;
    let mut outcome = BaOutcome {
        channel: Vec::new(),
        iterations: 0,
        converged: false,
        gap: f64::INFINITY,
    };

    for it in 1..=cfg.max_iterations {
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &a[k * l_size..(k + 1) * l_size];
            *zk = row
                .iter()
                .zip(&q)
                .map(|(x, y)| x * y)
                .sum::<f64>()
                .max(f64::MIN_POSITIVE);
        }
        c.iter_mut().for_each(|v| *v = 0.0);
        let mut dist = 0.0;
        for (k, (&pk, &zk)) in p.iter().zip(&z).enumerate() {
            let w = pk / zk;
            let row = &a[k * l_size..(k + 1) * l_size];
            let drow = d.row(support.rows[k]);
            for l in 0..l_size {
                let t = row[l] * w;
                c[l] += t;
                dist += t * q[l] * drow[l];
            }
        }
        let max_c = c.iter().copied().fold(0.0, f64::max);
        let weighted: f64 = q
            .iter()
            .zip(&c)
            .filter(|(&ql, &cl)| ql > 0.0 && cl > 0.0)
            .map(|(ql, cl)| ql * cl * cl.ln())
            .sum();
        let gap = (max_c.ln() - weighted).max(0.0);
        // I + lambda E[d] up to the constant lambda * shift.
        let obj = -p.iter().zip(&z).map(|(pk, zk)| pk * zk.ln()).sum::<f64>() - weighted;
        debug_assert!(
            obj <= prev_obj + 1e-12 * (1.0 + obj.abs()),
            "Lagrangian increased at iteration {it}: {prev_obj} -> {obj}"
        );
        let rate = obj - lambda * (dist - shift);

        outcome.iterations = it;
        outcome.gap = gap;
        if gap < cfg.tolerance && (rate - prev_rate).abs() < cfg.tolerance {
            outcome.converged = true;
            break;
        }
        prev_rate = rate;
        prev_obj = obj;
        if it == cfg.max_iterations {
            break;
        }
        q.iter_mut().zip(&c).for_each(|(ql, cl)| *ql *= cl);
        let s: f64 = q.iter().sum();
        debug_assert!((s - 1.0).abs() < 1e-12, "output marginal drifted: sum {s}");
        q.iter_mut().for_each(|ql| *ql /= s);
    }

    let mut channel = Vec::with_capacity(a.len());
    for (k, &zk) in z.iter().enumerate() {
        let row = &a[k * l_size..(k + 1) * l_size];
        let zk = row.iter().zip(&q).map(|(x, y)| x * y).sum::<f64>().max(zk);
        channel.extend(row.iter().zip(&q).map(|(x, y)| x * y / zk));
    }
    outcome.channel = channel;
    outcome
}

fn check_problem(p: &SourceDistribution, d: &DistortionMeasure, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if p.len() != d.source_size() {
        return Err(Error::DimensionMismatch {
            context: "source vs distortion rows",
            expected: d.source_size(),
            found: p.len(),
        });
    }
    Ok(())
}

/// The zero-rate point coding only `column`.
fn zero_rate_point(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    column: usize,
) -> Result<RdPoint> {
    let channel = TestChannel::point_mass_column(p.len(), d.repro_size(), column);
    RdPoint::assemble(p, d, channel, 0.0, 0, true, 0.0)
}

fn slope_point(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    lambda: f64,
    init: Option<&OutputMarginal>,
    cfg: &SolverConfig,
) -> Result<RdPoint> {
    let support = Support::of(p);
    let out = run_ba(
        &support,
        d,
        Kernel::Slope(lambda),
        init.map(|q| q.probs()),
        cfg,
    );
    let channel = support.expand(p.len(), d.repro_size(), &out.channel);
    RdPoint::assemble(
        p,
        d,
        channel,
        lambda,
        out.iterations,
        out.converged,
        out.gap,
    )
}

/// Parametric point of slope `lambda`.
///
/// `lambda = 0` returns the `D_max` end of the curve: the point-mass channel on
/// the best single reproduction letter.
pub fn ba_fixed_slope(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<RdPoint> {
    check_problem(p, d, cfg)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "slope {lambda} must be finite and >= 0"
        )));
    }
    if lambda == 0.0 {
        let (_, arg) = d_max(p, d)?;
        return zero_rate_point(p, d, arg);
    }
    slope_point(p, d, lambda, None, cfg)
}

fn min_distortion_point(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    cfg: &SolverConfig,
) -> Result<RdPoint> {
    let support = Support::of(p);
    let out = run_ba(&support, d, Kernel::RowMinimum, None, cfg);
    let channel = support.expand(p.len(), d.repro_size(), &out.channel);
    RdPoint::assemble(
        p,
        d,
        channel,
        f64::INFINITY,
        out.iterations,
        out.converged,
        out.gap,
    )
}

/// `R(D)` and an optimal test channel at the target distortion.
pub fn solve_rd(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    target: f64,
    cfg: &SolverConfig,
) -> Result<RdPoint> {
    check_problem(p, d, cfg)?;
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "distortion level {target} must be finite and >= 0"
        )));
    }
    let (dmax, arg) = d_max(p, d)?;
    if target >= dmax {
        return zero_rate_point(p, d, arg);
    }
    let dmin = d_min(p, d)?;
    if target < dmin {
        return Err(Error::BracketFailure {
            target,
            achieved_min: dmin,
            achieved_max: dmax,
            lambda_max: f64::INFINITY,
        });
    }
    if target == dmin {
        return min_distortion_point(p, d, cfg);
    }

    let iterations = Cell::new(0);
    let eval = |lambda: f64| -> Result<RdPoint> {
        let pt = ba_fixed_slope(p, d, lambda, cfg)?;
        iterations.set(iterations.get() + pt.iterations);
        Ok(pt)
    };
    // Near a kink a cold start drifts slowly and can stop on the wrong side
    // of the target, so both bracket ends seed a run and the lower
    // Lagrangian wins.
    let eval_warm = |lambda: f64, a: &RdPoint, b: &RdPoint| -> Result<RdPoint> {
        let one = slope_point(p, d, lambda, Some(&a.output), cfg)?;
        let two = slope_point(p, d, lambda, Some(&b.output), cfg)?;
        iterations.set(iterations.get() + one.iterations + two.iterations);
        let value = |pt: &RdPoint| pt.rate_nats + lambda * pt.distortion;
        let (v1, v2) = (value(&one), value(&two));
        Ok(if (v1 - v2).abs() <= cfg.tolerance {
            if two.converged && !one.converged {
                two
            } else {
                one
            }
        } else if v1 < v2 {
            one
        } else {
            two
        })
    };

    let (mut lo, mut hi) = cfg.lambda_bracket;
    let mut lo_pt = eval(lo)?;
    if lo_pt.distortion < target {
        lo = 0.0;
        lo_pt = eval(0.0)?;
    }
    let mut hi_pt = eval(hi)?;
    while hi_pt.distortion > target {
        if hi >= cfg.lambda_max {
            return Err(Error::BracketFailure {
                target,
                achieved_min: hi_pt.distortion,
                achieved_max: dmax,
                lambda_max: cfg.lambda_max,
            });
        }
        lo = hi;
        lo_pt = hi_pt;
        hi = (2.0 * hi).min(cfg.lambda_max);
        hi_pt = eval(hi)?;
    }

    // Each slope point carries a supporting line of the convex curve, so the
    // chord minus the best line at the target bounds the error of mixing.
    let mut support: Vec<(f64, f64, f64)> = vec![
        (lo, lo_pt.distortion, lo_pt.rate_nats),
        (hi, hi_pt.distortion, hi_pt.rate_nats),
    ];
    let mut last_secant_width = f64::INFINITY;
    let mut fallback = None;
    for _ in 0..200 {
        let width = hi - lo;
        let span = lo_pt.distortion - hi_pt.distortion;
        if span <= 0.0 || width <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let chord = hi_pt.rate_nats
            + (lo_pt.rate_nats - hi_pt.rate_nats) * (target - hi_pt.distortion) / span;
        let lower = support
            .iter()
            .map(|&(l, dl, rl)| rl - l * (target - dl))
            .fold(f64::NEG_INFINITY, f64::max);
        if chord - lower <= cfg.tolerance {
            let pt = mixture(p, d, target, lo, &lo_pt, hi, &hi_pt, iterations.get(), cfg)?;
            if pt.converged {
                return Ok(pt);
            }
            fallback = Some(pt);
        }
        let slope = (hi_pt.rate_nats - lo_pt.rate_nats) / span;
        let secant = slope > lo + 0.001 * width
            && slope < hi - 0.001 * width
            && width < 0.5 * last_secant_width;
        let next = if secant { slope } else { 0.5 * (lo + hi) };
        last_secant_width = if secant { width } else { f64::INFINITY };
        let pt = eval_warm(next, &lo_pt, &hi_pt)?;
        support.push((next, pt.distortion, pt.rate_nats));
        if (pt.distortion - target).abs() <= cfg.tolerance {
            return finish(p, d, pt, iterations.get());
        }
        if pt.distortion > target {
            lo = next;
            lo_pt = pt;
        } else {
            hi = next;
            hi_pt = pt;
        }
    }

    if lo_pt.distortion <= hi_pt.distortion {
        return finish(p, d, hi_pt, iterations.get());
    }
    let pt = mixture(p, d, target, lo, &lo_pt, hi, &hi_pt, iterations.get(), cfg)?;
    Ok(match fallback {
        Some(earlier) if earlier.gap <= pt.gap => earlier,
        _ => pt,
    })
}

/// Golden-section search for the slope in `[lo, hi]` at which `q` comes
/// closest to satisfying the optimality conditions.
fn best_slope(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    q: &OutputMarginal,
    lo: f64,
    hi: f64,
) -> f64 {
    let cost = |lambda: f64| residuals_at(p, d, q.probs(), lambda).max_violation(q, SUPPORT_TOL);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..100 {
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = cost(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Time-shares the bracket channels to hit `target` exactly. The reported
/// slope mixes the bracket slopes with the same weight, or is the best slope
/// in the bracket when that leaves large optimality residuals. Converged only if the duality gap
/// and those residuals are both small.
#[allow(clippy::too_many_arguments)]
fn mixture(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    target: f64,
    lo: f64,
    lo_pt: &RdPoint,
    hi: f64,
    hi_pt: &RdPoint,
    iterations: usize,
    cfg: &SolverConfig,
) -> Result<RdPoint> {
    let span = lo_pt.distortion - hi_pt.distortion;
    let weight = ((target - hi_pt.distortion) / span).clamp(0.0, 1.0);
    let channel = lo_pt.channel.mix(&hi_pt.channel, weight)?;
    let interpolated = weight * lo + (1.0 - weight) * hi;
    let mut pt = RdPoint::assemble(p, d, channel, interpolated, iterations, false, 0.0)?;
    let violation = |lambda: f64| {
        residuals_at(p, d, pt.output.probs(), lambda).max_violation(&pt.output, SUPPORT_TOL)
    };
    if violation(interpolated) > RESIDUAL_TOL {
        pt.lambda = best_slope(p, d, &pt.output, lo, hi);
    }
    let mut bound = f64::NEG_INFINITY;
    for cert in [&pt, lo_pt, hi_pt] {
        bound = bound.max(scaled_dual_bound(p, d, cert, pt.distortion)?);
    }
    pt.gap = (pt.rate_nats - bound).max(0.0);
    let residual =
        residuals_at(p, d, pt.output.probs(), pt.lambda).max_violation(&pt.output, SUPPORT_TOL);
    pt.converged = pt.gap < cfg.tolerance && residual <= RESIDUAL_TOL;
    Ok(pt)
}

fn finish(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    mut pt: RdPoint,
    iterations: usize,
) -> Result<RdPoint> {
    pt.iterations = iterations;
    pt.gap = duality_gap(p, d, &pt)?;
    Ok(pt)
}

/// Solves every grid point independently. Failures are kept in place.
pub fn sweep(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<Result<RdPoint>>> {
    check_problem(p, d, cfg)?;
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter(
            "distortion grid must be ascending".into(),
        ));
    }
    Ok(grid
        .par_iter()
        .map(|&dist| solve_rd(p, d, dist, cfg))
        .collect())
}

/// `exp(-lambda d)`, with the `lambda = inf` limit taken as the indicator of `d == 0`.
fn tilt(lambda: f64, dist: f64) -> f64 {
    if lambda.is_infinite() {
        if dist == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (-lambda * dist).exp()
    }
}

/// Dual variables and per-output-letter slack of the Lagrangian optimality conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianResiduals {
    /// `mu_k = p(k) / sum_l q(l) exp(-lambda d(k,l))`
    pub mu: Vec<f64>,
    /// `1 - sum_k mu_k exp(-lambda d(k,l))`; nonnegative everywhere and zero on
    /// the support of `q` at an optimum.
    pub slack: Vec<f64>,
}

impl LagrangianResiduals {
    /// Largest violation: negative slack anywhere, or nonzero slack on letters
    /// with output mass above `support_tol`.
    pub fn max_violation(&self, output: &OutputMarginal, support_tol: f64) -> f64 {
        self.slack
            .iter()
            .zip(output.probs())
            .map(|(&s, &q)| {
                if q > support_tol {
                    s.abs()
                } else {
                    (-s).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// The constraint values `1 - slack`.
    pub fn constraint_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.slack.iter().map(|s| 1.0 - s)
    }
}

pub fn lagrangian_residuals(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    point: &RdPoint,
) -> Result<LagrangianResiduals> {
    d.check_source(p)?;
    let q = point.output.probs();
    if q.len() != d.repro_size() {
        return Err(Error::DimensionMismatch {
            context: "output marginal vs distortion columns",
            expected: d.repro_size(),
            found: q.len(),
        });
    }
    Ok(residuals_at(p, d, q, point.lambda))
}

fn residuals_at(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    q: &[f64],
    lambda: f64,
) -> LagrangianResiduals {
    let mu: Vec<f64> = (0..d.source_size())
        .map(|k| {
            if p[k] == 0.0 {
                return 0.0;
            }
            let denom: f64 = (0..d.repro_size())
                .map(|l| q[l] * tilt(lambda, d.get(k, l)))
                .sum();
            p[k] / denom
        })
        .collect();
    let slack = (0..d.repro_size())
        .map(|l| {
            1.0 - (0..d.source_size())
                .map(|k| mu[k] * tilt(lambda, d.get(k, l)))
                .sum::<f64>()
        })
        .collect();
    LagrangianResiduals { mu, slack }
}

/// `H(p) + sum_k p(k) ln mu_k - lambda D`: a lower bound on `R(D)` for every
/// dual-feasible `(lambda, mu)`.
pub fn dual_rate_bound(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    lambda: f64,
    mu: &[f64],
    distortion: f64,
) -> Result<f64> {
    d.check_source(p)?;
    if mu.len() != p.len() {
        return Err(Error::DimensionMismatch {
            context: "dual variables",
            expected: p.len(),
            found: mu.len(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slope {lambda} must be >= 0"
        )));
    }
    for l in 0..d.repro_size() {
        let value: f64 = (0..p.len())
            .map(|k| mu[k] * tilt(lambda, d.get(k, l)))
            .sum();
        if value > 1.0 + DUAL_FEASIBILITY_TOL {
            return Err(Error::InfeasibleDual { letter: l, value });
        }
    }
    let mut bound = entropy(p).nats();
    for (k, &pk) in p.probs().iter().enumerate() {
        if pk > 0.0 {
            if !(mu[k] > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "mu_{k} = {} must be positive where p > 0",
                    mu[k]
                )));
            }
            bound += pk * mu[k].ln();
        }
    }
    if distortion != 0.0 {
        bound -= lambda * distortion;
    }
    Ok(bound)
}

/// Dual bound at `distortion` from the point's own `mu`, scaled onto the
/// feasible set.
fn scaled_dual_bound(
    p: &SourceDistribution,
    d: &DistortionMeasure,
    point: &RdPoint,
    distortion: f64,
) -> Result<f64> {
    let res = lagrangian_residuals(p, d, point)?;
    let worst = res.constraint_values().fold(0.0, f64::max);
    if !(worst > 0.0) || !worst.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let scaled: Vec<f64> = res.mu.iter().map(|m| m / worst).collect();
    dual_rate_bound(p, d, point.lambda, &scaled, distortion)
}

/// Rate minus the dual bound obtained by scaling the point's own `mu` onto the
/// feasible set.
pub fn duality_gap(p: &SourceDistribution, d: &DistortionMeasure, point: &RdPoint) -> Result<f64> {
    let bound = scaled_dual_bound(p, d, point, point.distortion)?;
    Ok((point.rate_nats - bound).max(0.0))
}
