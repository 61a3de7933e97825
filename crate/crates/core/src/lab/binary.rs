use super::branch::{BranchPair, BranchProblem, Solved, SolverTag};
use super::table::{dyadic_cutoff, to_f64, x_value_from, EnumerationTable};
use crate::ba::SolverConfig;
use crate::distortion::{d_max, DistortionMeasure};
use crate::error::{Error, Result};
use crate::prob::{SourceDistribution, TvForm};

fn check_positive(d01: f64, d10: f64) -> Result<()> {
    if !(d01 > 0.0 && d10 > 0.0) || !d01.is_finite() || !d10.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "off-diagonal distortions ({d01}, {d10}) must be positive and finite"
        )));
    }
    Ok(())
}

fn binary_measure(d01: f64, d10: f64) -> Result<DistortionMeasure> {
    DistortionMeasure::new(vec![vec![0.0, d01], vec![d10, 0.0]])
}

/// The source on which both reproduction letters give the same zero-rate
/// distortion `d01 d10 / (d01 + d10)`.
pub fn binary_balanced_source(d01: f64, d10: f64) -> Result<SourceDistribution> {
    check_positive(d01, d10)?;
    let s = d01 + d10;
    SourceDistribution::new(vec![d10 / s, d01 / s])
}

fn solve_at(
    source: SourceDistribution,
    measure: &DistortionMeasure,
    distortion: f64,
    cfg: &SolverConfig,
) -> Result<Solved> {
    let problem = BranchProblem {
        source,
        measure: measure.clone(),
        distortion,
    };
    Ok(Solved {
        point: problem.solve_ba(cfg)?,
        problem,
        solver: SolverTag::Ba,
    })
}

fn solve_at_dmax(
    source: SourceDistribution,
    measure: &DistortionMeasure,
    cfg: &SolverConfig,
) -> Result<Solved> {
    let (dmax, _) = d_max(&source, measure)?;
    solve_at(source, measure, dmax, cfg)
}

/// Balanced source shifted by `+-x` towards either letter, each solved at its
/// own `D_max`. For `x > 0` the optima code only letter 0, respectively only
/// letter 1, at halved TV distance 1. The threshold is `1/2`.
///
/// The perturbation uses table indices `i >= m~`, the smallest `m~` with
/// `2^-m~ <= min p`.
pub fn binary_dmax_branch_test(
    d01: f64,
    d10: f64,
    table: &EnumerationTable,
    n: u64,
    k: u64,
    cfg: &SolverConfig,
) -> Result<BranchPair> {
    let p = binary_balanced_source(d01, d10)?;
    let d = binary_measure(d01, d10)?;
    let cutoff = dyadic_cutoff(p.min_mass(), false)?;
    let x = to_f64(&x_value_from(table, n, k, cutoff));
    let one = SourceDistribution::new(vec![p[0] + x, p[1] - x])?;
    let two = SourceDistribution::new(vec![p[0] - x, p[1] + x])?;
    BranchPair::assemble(
        x,
        solve_at_dmax(one, &d, cfg)?,
        solve_at_dmax(two, &d, cfg)?,
        solve_at_dmax(p, &d, cfg)?,
        TvForm::Halved,
        0.5,
    )
}

/// Sources `(1 - x, x)` and `(1 - x/(2L), x/(2L))` at `D = x d10 / (2L)`.
///
/// The first branch must keep `P(1|1) >= 1 - 1/(2L) >= 1/2`. The second sits
/// at its `D_max` and codes only letter 0. The threshold is `1/4`. Requires
/// `L >= max(1, d10 / 2)`. Table indices `i >= m~` are used, with `m~` the
/// smallest integer for which `2^-m~ < d01 d10 / (d01 + d10)`.
pub fn binary_zero_support_branch_test(
    d01: f64,
    d10: f64,
    table: &EnumerationTable,
    n: u64,
    k: u64,
    l_scale: f64,
    cfg: &SolverConfig,
) -> Result<BranchPair> {
    check_positive(d01, d10)?;
    if !(l_scale >= 1.0 && l_scale >= 0.5 * d10) || !l_scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "L = {l_scale} must satisfy L >= 1 and L >= d10 / 2 = {}",
            0.5 * d10
        )));
    }
    let d = binary_measure(d01, d10)?;
    let cutoff = dyadic_cutoff(d01 * d10 / (d01 + d10), true)?;
    let x = to_f64(&x_value_from(table, n, k, cutoff));
    let level = x * d10 / (2.0 * l_scale);
    let one = SourceDistribution::new(vec![1.0 - x, x])?;
    let shrunk = x / (2.0 * l_scale);
    let two = SourceDistribution::new(vec![1.0 - shrunk, shrunk])?;
    // `level` up to rounding
    let (dmax_two, _) = d_max(&two, &d)?;
    BranchPair::assemble(
        x,
        solve_at(one, &d, level, cfg)?,
        solve_at(two, &d, dmax_two, cfg)?,
        solve_at(SourceDistribution::point_mass(2, 0)?, &d, 0.0, cfg)?,
        TvForm::Halved,
        0.25,
    )
}
