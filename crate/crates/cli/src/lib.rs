//! Command-line front end: problem files in, comma-separated tables out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rdlab_core::SolverConfig;

pub mod demo;
pub mod format;
pub mod problem;
pub mod solve;
pub mod verify;

#[derive(Debug, Parser)]
#[command(
    name = "rdlab",
    version,
    about = "Rate-distortion solver and optimizer-branch experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Convergence tolerance on the rate and the optimality gap, in nats.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Iteration cap per Blahut-Arimoto run.
    #[arg(long = "max-iter", global = true, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Largest slope tried when bracketing a target distortion.
    #[arg(long = "lambda-max", global = true, default_value_t = 1_048_576.0)]
    pub lambda_max: f64,
    /// Report rates in bits where a command shows a single rate column.
    #[arg(long, global = true)]
    pub bits: bool,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig, Failure> {
        let cfg = SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
            lambda_max: self.lambda_max,
            ..SolverConfig::default()
        };
        cfg.validate().map_err(|e| Failure::parse(e.into()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one distortion level.
    Solve {
        /// Problem file.
        problem: PathBuf,
        /// Target expected distortion.
        distortion: f64,
        /// Also print the optimal test channel, one source letter per line.
        #[arg(long)]
        channel: bool,
    },
    /// Solve a grid of distortion levels: `start:stop:count` or `d1,d2,...`.
    Sweep {
        /// Problem file.
        problem: PathBuf,
        /// Distortion grid, ascending.
        grid: String,
        /// Write the table here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Use the closed form where the problem is an erasure instance
        /// past the erasure onset.
        #[arg(long)]
        prefer_analytic: bool,
    },
    /// Run a branch-separation experiment for m = 1..=m-max.
    Demo(demo::DemoArgs),
    /// Diagnose a problem: normality, D_max, and optimality certificates
    /// along a coarse sweep.
    Verify {
        /// Problem file.
        problem: PathBuf,
        /// Interior grid points of the coarse sweep.
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Erasure,
    BinaryDmax,
    BinaryZero,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Io,
    Parse,
    Solver,
    Verify,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Io => 1,
            FailureKind::Parse => 2,
            FailureKind::Solver => 3,
            FailureKind::Verify => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{error:#}")]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn io(error: anyhow::Error) -> Self {
        Self {
            kind: FailureKind::Io,
            error,
        }
    }

    pub fn parse(error: anyhow::Error) -> Self {
        Self {
            kind: FailureKind::Parse,
            error,
        }
    }

    pub fn solver(error: anyhow::Error) -> Self {
        Self {
            kind: FailureKind::Solver,
            error,
        }
    }

    pub fn verify(error: anyhow::Error) -> Self {
        Self {
            kind: FailureKind::Verify,
            error,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            kind: FailureKind::Io,
            error: e.into(),
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = cli.solver.config()?;
    match &cli.command {
        Command::Solve {
            problem,
            distortion,
            channel,
        } => solve::cmd_solve(problem, *distortion, *channel, &cfg, out),
        Command::Sweep {
            problem,
            grid,
            output,
            prefer_analytic,
        } => match output {
            Some(path) => {
                let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
                solve::cmd_sweep(problem, grid, *prefer_analytic, &cfg, &mut file)?;
                file.flush()?;
                log::info!("wrote {}", path.display());
                Ok(())
            }
            None => solve::cmd_sweep(problem, grid, *prefer_analytic, &cfg, out),
        },
        Command::Demo(args) => demo::cmd_demo(args, cli.solver.bits, &cfg, out),
        Command::Verify { problem, points } => {
            verify::cmd_verify(problem, *points, cli.solver.bits, &cfg, out)
        }
    }
}
