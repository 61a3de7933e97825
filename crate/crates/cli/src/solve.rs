use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail};
use rayon::prelude::*;
use rdlab_core::ba::solve_rd;
use rdlab_core::distortion::as_generalized_erasure;
use rdlab_core::erasure::{
    erasure_segment_range, solve_degenerate_family, solve_erasure_segment, ErasureProblem,
};
use rdlab_core::lab::SolverTag;
use rdlab_core::{RdPoint, SolverConfig};

use crate::format::sig;
use crate::problem::{read_problem, Problem};
use crate::Failure;

pub const RESULT_HEADER: &str = "distortion,rate_nats,rate_bits,lambda,iterations,converged,solver";

pub fn result_row(point: &RdPoint, tag: SolverTag) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        sig(point.distortion),
        sig(point.rate_nats),
        sig(point.rate_bits()),
        sig(point.lambda),
        point.iterations,
        point.converged,
        tag
    )
}

fn failed_row(distortion: f64) -> String {
    format!("{},nan,nan,nan,0,false,failed", sig(distortion))
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let number = |s: &str| -> anyhow::Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| anyhow!("'{}' is not a number", s.trim()))?;
        if !v.is_finite() {
            bail!("'{}' is not finite", s.trim());
        }
        Ok(v)
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let (start, stop) = (number(start)?, number(stop)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| anyhow!("grid count '{}' is not a natural number", count.trim()))?;
            Ok(match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..count)
                    .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                    .collect(),
            })
        }
        [list] => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(number)
            .collect(),
        _ => bail!("grid must be 'start:stop:count' or a comma-separated list, got '{spec}'"),
    }
}

/// The closed form when the problem is an erasure instance and `distortion`
/// lies past the erasure onset; BA otherwise.
pub fn solve_point(
    problem: &Problem,
    distortion: f64,
    prefer_analytic: bool,
    cfg: &SolverConfig,
) -> rdlab_core::Result<(RdPoint, SolverTag)> {
    if prefer_analytic {
        if let Some(found) = analytic_point(problem, distortion) {
            return Ok(found);
        }
    }
    Ok((
        solve_rd(&problem.source, &problem.measure, distortion, cfg)?,
        SolverTag::Ba,
    ))
}

fn analytic_point(problem: &Problem, distortion: f64) -> Option<(RdPoint, SolverTag)> {
    let (k, d1, d2) = as_generalized_erasure(&problem.measure)?;
    let prob = ErasureProblem::new(k, d1, d2, problem.source.clone(), distortion).ok()?;
    let (onset, upper) = erasure_segment_range(d1.min(d2), k, &problem.source).ok()?;
    if !(onset..=upper).contains(&distortion) {
        return None;
    }
    let (sol, tag) = if d1 == d2 {
        (solve_degenerate_family(&prob, 1.0).ok()?, SolverTag::Family)
    } else {
        (solve_erasure_segment(&prob).ok()?, SolverTag::Analytic)
    };
    Some((sol.to_rd_point(&prob).ok()?, tag))
}

fn check_level(distortion: f64) -> Result<(), Failure> {
    if !(distortion >= 0.0) || !distortion.is_finite() {
        return Err(Failure::parse(anyhow!(
            "distortion level {distortion} must be finite and >= 0"
        )));
    }
    Ok(())
}

pub fn cmd_solve(
    path: &Path,
    distortion: f64,
    channel: bool,
    cfg: &SolverConfig,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let problem = read_problem(path)?;
    check_level(distortion)?;
    let (point, tag) = solve_point(&problem, distortion, false, cfg)
        .map_err(|e| Failure::solver(anyhow!("D = {distortion}: {e}")))?;
    writeln!(out, "{RESULT_HEADER}")?;
    writeln!(out, "{}", result_row(&point, tag))?;
    if channel {
        writeln!(out, "# test channel P(y|x), one source letter per line")?;
        for row in point.channel.rows() {
            let cells: Vec<String> = row.iter().map(|&v| sig(v)).collect();
            writeln!(out, "{}", cells.join(" "))?;
        }
    }
    Ok(())
}

pub fn cmd_sweep(
    path: &Path,
    grid: &str,
    prefer_analytic: bool,
    cfg: &SolverConfig,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let problem = read_problem(path)?;
    let levels = parse_grid(grid).map_err(Failure::parse)?;
    for &d in &levels {
        check_level(d)?;
    }
    let rows: Vec<String> = levels
        .par_iter()
        .map(|&d| match solve_point(&problem, d, prefer_analytic, cfg) {
            Ok((point, tag)) => result_row(&point, tag),
            Err(e) => {
                log::warn!("D = {d}: {e}");
                failed_row(d)
            }
        })
        .collect();
    writeln!(out, "{RESULT_HEADER}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}
