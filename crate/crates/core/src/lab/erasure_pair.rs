use num_traits::Zero;

use super::branch::{BranchPair, BranchProblem, Solved, SolverTag};
use super::table::{to_f64, x_value, EnumerationTable};
use crate::ba::{solve_rd, SolverConfig};
use crate::distortion::{d_max, generalized_erasure, DistortionMeasure};
use crate::erasure::{
    erasure_mass, erasure_onset_dmin, solve_degenerate_family, solve_erasure_segment,
    ErasureProblem,
};
use crate::error::{Error, Result};
use crate::prob::{SourceDistribution, TvForm};

/// Erasure measures with the perturbation on the second and on the first
/// erasure symbol respectively.
pub fn perturbed_measures(
    k: usize,
    d: f64,
    table: &EnumerationTable,
    n: u64,
    m: u64,
) -> Result<(DistortionMeasure, DistortionMeasure)> {
    let x = to_f64(&x_value(table, n, m));
    Ok((
        generalized_erasure(k, d, d + x)?,
        generalized_erasure(k, d + x, d)?,
    ))
}

/// Parameters of [`erasure_branch_test`] that do not depend on `(n, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureSetup {
    pub k: usize,
    /// Distortion of the unperturbed erasure symbols; below `min p_x`.
    pub d: f64,
    pub source: SourceDistribution,
    pub distortion: f64,
    /// Guaranteed erasure mass, in `(0, 1)`.
    pub c: f64,
}

impl ErasureSetup {
    pub fn uniform(k: usize, d: f64, distortion: f64, c: f64) -> Result<Self> {
        Ok(Self {
            k,
            d,
            source: SourceDistribution::uniform(k)?,
            distortion,
            c,
        })
    }
}

fn solve_closed_form_or_ba(prob: ErasureProblem, cfg: &SolverConfig) -> Result<Solved> {
    let problem = BranchProblem {
        source: prob.source().clone(),
        measure: prob.measure().clone(),
        distortion: prob.distortion(),
    };
    match solve_erasure_segment(&prob) {
        Ok(sol) => Ok(Solved {
            point: sol.to_rd_point(&prob)?,
            problem,
            solver: SolverTag::Analytic,
        }),
        Err(Error::RegimeViolation { .. }) => Ok(Solved {
            point: solve_rd(&problem.source, &problem.measure, problem.distortion, cfg)?,
            problem,
            solver: SolverTag::Ba,
        }),
        Err(e) => Err(e),
    }
}

/// Erasure symbols at `(d, d + x)` versus `(d + x, d)`.
///
/// For `x > 0` the cheaper symbol carries mass at least `c` in each branch,
/// and the branches use different symbols. Their unhalved TV distance is
/// therefore above `2c`. For `x = 0` both problems are the same, and both
/// branches are the same member of the family of optima.
pub fn erasure_branch_test(
    setup: &ErasureSetup,
    table: &EnumerationTable,
    n: u64,
    m: u64,
    cfg: &SolverConfig,
) -> Result<BranchPair> {
    let (k, d, dist, c) = (setup.k, setup.d, setup.distortion, setup.c);
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "c = {c} must lie in (0, 1)"
        )));
    }
    let base = ErasureProblem::new(k, d, d, setup.source.clone(), dist)?;
    let floor = erasure_onset_dmin(d, k, c)?;
    if dist < floor {
        return Err(Error::RegimeViolation {
            letter: k,
            value: erasure_mass(dist, d, k)?,
            detail: format!("erasure mass reaches {c} only from D = {floor}"),
        });
    }
    let (dmax, _) = d_max(base.source(), base.measure())?;
    if dist > dmax {
        return Err(Error::InvalidParameter(format!(
            "distortion {dist} above D_max = {dmax}"
        )));
    }

    let family = |prob: &ErasureProblem| -> Result<Solved> {
        Ok(Solved {
            point: solve_degenerate_family(prob, 1.0)?.to_rd_point(prob)?,
            problem: BranchProblem {
                source: prob.source().clone(),
                measure: prob.measure().clone(),
                distortion: dist,
            },
            solver: SolverTag::Family,
        })
    };

    let xr = x_value(table, n, m);
    let x = to_f64(&xr);
    let (one, two) = if xr.is_zero() {
        (family(&base)?, family(&base)?)
    } else {
        let src = setup.source.clone();
        (
            solve_closed_form_or_ba(ErasureProblem::new(k, d, d + x, src.clone(), dist)?, cfg)?,
            solve_closed_form_or_ba(ErasureProblem::new(k, d + x, d, src, dist)?, cfg)?,
        )
    };
    BranchPair::assemble(x, one, two, family(&base)?, TvForm::Unhalved, c)
}
