use std::io::Write;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use rayon::prelude::*;
use rdlab_core::distortion::hamming;
use rdlab_core::erasure::erasure_onset_dmin;
use rdlab_core::lab::{
    binary_dmax_branch_test, binary_zero_support_branch_test, construct_balanced_general,
    erasure_branch_test, general_branch_test, BranchPair, EnumerationTable, ErasureSetup,
    LevelMode, Verdict,
};
use rdlab_core::{SolverConfig, SourceDistribution};

use crate::format::sig;
use crate::problem::{read_input, read_problem, Problem};
use crate::{DemoName, Failure};

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    pub name: DemoName,
    /// Enumeration table file: lines `i n`.
    #[arg(long)]
    pub table: PathBuf,
    /// The number whose membership in the table is being decided.
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Largest table prefix length `m`.
    #[arg(long = "m-max", default_value_t = 12)]
    pub m_max: u64,
    /// Source alphabet size of the erasure demo.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Distortion of the erasure symbols.
    #[arg(long, default_value_t = 0.2)]
    pub d: f64,
    /// Guaranteed erasure mass and separation threshold.
    #[arg(long, default_value_t = 0.3)]
    pub c: f64,
    /// Distortion level of the erasure demo; defaults to midway between the
    /// level at which the erasure mass reaches `c` and `d`.
    #[arg(long)]
    pub distortion: Option<f64>,
    /// Cost of reproducing source letter 0 as 1 in the binary demos.
    #[arg(long, default_value_t = 1.0)]
    pub d01: f64,
    /// Cost of reproducing source letter 1 as 0 in the binary demos.
    #[arg(long, default_value_t = 1.0)]
    pub d10: f64,
    /// Scale `L` of the zero-support demo.
    #[arg(long = "l-scale", default_value_t = 1.0)]
    pub l_scale: f64,
    /// Measure (and seed source) of the general demo; binary Hamming with a
    /// uniform seed when absent.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Perturb the general demo along a direction that keeps D_max fixed.
    #[arg(long)]
    pub constant_level: bool,
}

type Runner = Box<dyn Fn(u64) -> rdlab_core::Result<BranchPair> + Sync>;

fn runner(args: &DemoArgs, table: EnumerationTable, cfg: SolverConfig) -> Result<Runner, Failure> {
    let n = args.n;
    Ok(match args.name {
        DemoName::Erasure => {
            let distortion = match args.distortion {
                Some(v) => v,
                None => {
                    let floor = erasure_onset_dmin(args.d, args.k, args.c)
                        .map_err(|e| Failure::solver(e.into()))?;
                    0.5 * (floor + args.d)
                }
            };
            let setup = ErasureSetup::uniform(args.k, args.d, distortion, args.c)
                .map_err(|e| Failure::solver(e.into()))?;
            Box::new(move |m| erasure_branch_test(&setup, &table, n, m, &cfg))
        }
        DemoName::BinaryDmax => {
            let (d01, d10) = (args.d01, args.d10);
            Box::new(move |m| binary_dmax_branch_test(d01, d10, &table, n, m, &cfg))
        }
        DemoName::BinaryZero => {
            let (d01, d10, l) = (args.d01, args.d10, args.l_scale);
            Box::new(move |m| binary_zero_support_branch_test(d01, d10, &table, n, m, l, &cfg))
        }
        DemoName::General => {
            let problem = match &args.problem {
                Some(path) => read_problem(path)?,
                None => Problem {
                    source: SourceDistribution::uniform(2)
                        .map_err(|e| Failure::solver(e.into()))?,
                    measure: hamming(2).map_err(|e| Failure::solver(e.into()))?,
                },
            };
            let balanced = construct_balanced_general(&problem.measure, &problem.source)
                .map_err(|e| Failure::solver(e.into()))?;
            let mode = if args.constant_level {
                LevelMode::ConstantLevel
            } else {
                LevelMode::Shifting
            };
            let measure = problem.measure;
            Box::new(move |m| general_branch_test(&measure, &balanced, &table, n, m, mode, &cfg))
        }
    })
}

pub fn cmd_demo(
    args: &DemoArgs,
    bits: bool,
    cfg: &SolverConfig,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let text = read_input(&args.table)?;
    let table: EnumerationTable = text
        .parse()
        .map_err(|e: rdlab_core::Error| Failure::parse(anyhow!("{}: {e}", args.table.display())))?;
    let run = runner(args, table, *cfg)?;
    let pairs: Vec<BranchPair> = (1..=args.m_max)
        .into_par_iter()
        .map(|m| run(m).map_err(|e| Failure::solver(anyhow!("m = {m}: {e}"))))
        .collect::<Result<_, _>>()?;

    let unit = if bits { "bits" } else { "nats" };
    let scale = if bits { std::f64::consts::LOG2_E } else { 1.0 };
    writeln!(
        out,
        "m,x,rate_1_{unit},rate_2_{unit},distortion_1,distortion_2,tv_branch,statistic,threshold,verdict,solvers"
    )?;
    for (m, pair) in (1..=args.m_max).zip(&pairs) {
        writeln!(
            out,
            "{m},{},{},{},{},{},{},{},{},{},{}/{}/{}",
            sig(pair.x),
            sig(pair.branch_1.rate_nats * scale),
            sig(pair.branch_2.rate_nats * scale),
            sig(pair.branch_1.distortion),
            sig(pair.branch_2.distortion),
            sig(pair.tv_branch),
            sig(pair.statistic),
            sig(pair.threshold),
            pair.verdict,
            pair.solvers[0],
            pair.solvers[1],
            pair.solvers[2],
        )?;
    }
    match (1..=args.m_max)
        .zip(&pairs)
        .find(|(_, p)| p.verdict == Verdict::Separated)
    {
        Some((m, _)) => writeln!(out, "# n = {}: separated from m = {m}", args.n)?,
        None => writeln!(
            out,
            "# n = {}: merged for every m <= {}",
            args.n, args.m_max
        )?,
    }
    Ok(())
}
