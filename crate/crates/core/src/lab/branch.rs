use std::fmt;

use crate::ba::{solve_rd, RdPoint, SolverConfig};
use crate::distortion::DistortionMeasure;
use crate::error::Result;
use crate::prob::{tv_conditional, SourceDistribution, TvForm};

#[derive(Debug, Clone, PartialEq)]
pub struct BranchProblem {
    pub source: SourceDistribution,
    pub measure: DistortionMeasure,
    pub distortion: f64,
}

impl BranchProblem {
    pub fn solve_ba(&self, cfg: &SolverConfig) -> Result<RdPoint> {
        solve_rd(&self.source, &self.measure, self.distortion, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverTag {
    Ba,
    Analytic,
    Family,
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverTag::Ba => "ba",
            SolverTag::Analytic => "analytic",
            SolverTag::Family => "family",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Separated,
    Merged,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Separated => "separated",
            Verdict::Merged => "merged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPair {
    pub x: f64,
    pub problem_1: BranchProblem,
    pub problem_2: BranchProblem,
    pub branch_1: RdPoint,
    pub branch_2: RdPoint,
    /// Solution of the unperturbed problem.
    pub reference: RdPoint,
    pub solvers: [SolverTag; 3],
    pub tv_form: TvForm,
    pub tv_branch: f64,
    pub statistic: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

pub(crate) struct Solved {
    pub problem: BranchProblem,
    pub point: RdPoint,
    pub solver: SolverTag,
}

impl BranchPair {
    pub(crate) fn assemble(
        x: f64,
        one: Solved,
        two: Solved,
        reference: Solved,
        tv_form: TvForm,
        threshold: f64,
    ) -> Result<Self> {
        let tv_branch = tv_conditional(&one.point.channel, &two.point.channel, tv_form)?;
        let statistic = tv_conditional(&one.point.channel, &reference.point.channel, tv_form)?.max(
            tv_conditional(&reference.point.channel, &two.point.channel, tv_form)?,
        );
        debug_assert!(statistic >= 0.5 * tv_branch - 1e-12);
        Ok(Self {
            x,
            problem_1: one.problem,
            problem_2: two.problem,
            solvers: [one.solver, two.solver, reference.solver],
            branch_1: one.point,
            branch_2: two.point,
            reference: reference.point,
            tv_form,
            tv_branch,
            statistic,
            threshold,
            verdict: if statistic > threshold {
                Verdict::Separated
            } else {
                Verdict::Merged
            },
        })
    }

    pub fn rate_gap(&self) -> f64 {
        (self.branch_1.rate_nats - self.branch_2.rate_nats).abs()
    }

    pub fn distortion_gap(&self) -> f64 {
        (self.branch_1.distortion - self.branch_2.distortion).abs()
    }
}
