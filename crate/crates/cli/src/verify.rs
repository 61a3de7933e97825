use std::io::Write;
use std::path::Path;

use anyhow::anyhow;
use rdlab_core::ba::{dual_rate_bound, lagrangian_residuals, solve_rd, SUPPORT_TOL};
use rdlab_core::distortion::{d_max, d_min, is_normal, normalize};
use rdlab_core::{RdPoint, SolverConfig};

use crate::format::sig;
use crate::problem::read_problem;
use crate::Failure;

/// Bound on optimality residuals and on the primal-dual gap at converged points.
const CERTIFICATE_TOL: f64 = 1e-8;

struct Report<'a> {
    out: &'a mut dyn Write,
    failures: usize,
}

impl Report<'_> {
    fn line(&mut self, check: &str, pass: Option<bool>, detail: String) -> std::io::Result<()> {
        let status = match pass {
            Some(true) => "pass",
            Some(false) => {
                self.failures += 1;
                "fail"
            }
            None => "info",
        };
        writeln!(self.out, "{check},{status},{detail}")
    }
}

/// `(max residual, primal minus dual)` of a solved point.
fn certificates(
    p: &rdlab_core::SourceDistribution,
    d: &rdlab_core::DistortionMeasure,
    pt: &RdPoint,
) -> rdlab_core::Result<(f64, f64)> {
    let res = lagrangian_residuals(p, d, pt)?;
    let residual = res.max_violation(&pt.output, SUPPORT_TOL);
    let worst = res.constraint_values().fold(0.0, f64::max);
    let mu: Vec<f64> = res.mu.iter().map(|m| m / worst).collect();
    let dual = dual_rate_bound(p, d, pt.lambda, &mu, pt.distortion)?;
    Ok((residual, pt.rate_nats - dual))
}

pub fn cmd_verify(
    path: &Path,
    points: usize,
    bits: bool,
    cfg: &SolverConfig,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let problem = read_problem(path)?;
    let (p, original) = (&problem.source, &problem.measure);
    let solver = |e: rdlab_core::Error| Failure::solver(e.into());
    let (unit, scale) = if bits {
        ("bits", std::f64::consts::LOG2_E)
    } else {
        ("nats", 1.0)
    };

    let mut report = Report { out, failures: 0 };
    writeln!(report.out, "check,status,detail")?;

    let norm = normalize(original, p).map_err(solver)?;
    if is_normal(original) {
        report.line(
            "normal",
            Some(true),
            "every source letter has a zero-distortion reproduction".into(),
        )?;
    } else {
        let offsets: Vec<String> = norm.row_offsets.iter().map(|&c| sig(c)).collect();
        report.line(
            "normal",
            None,
            format!(
                "row minima {} subtracted; distortion axis shifted by {}; checks below use the normal measure",
                offsets.join(" "),
                sig(norm.distortion_shift)
            ),
        )?;
    }
    let d = &norm.normal_measure;
    report.line(
        "normalize",
        Some(is_normal(d) && normalize(d, p).map_err(solver)?.distortion_shift == 0.0),
        "normal measure is a fixed point".into(),
    )?;

    let (dmax, arg) = d_max(p, d).map_err(solver)?;
    let dmin = d_min(p, d).map_err(solver)?;
    report.line(
        "dmax",
        Some(dmax >= 0.0),
        format!(
            "D_max = {} at reproduction letter {arg}; D_min = {}",
            sig(dmax),
            sig(dmin)
        ),
    )?;
    if dmax == 0.0 {
        report.line(
            "trivial",
            Some(true),
            format!(
                "reproduction letter {arg} costs nothing almost surely, so R(D) = 0 for every D"
            ),
        )?;
    } else {
        let corner = solve_rd(p, d, dmax, cfg).map_err(solver)?;
        report.line(
            "zero-rate",
            Some(corner.rate_nats <= CERTIFICATE_TOL),
            format!("R(D_max) = {} {unit}", sig(corner.rate_nats * scale)),
        )?;

        let grid: Vec<f64> = (1..=points)
            .map(|i| dmin + (dmax - dmin) * i as f64 / (points + 1) as f64)
            .collect();
        let mut rates = Vec::with_capacity(points);
        for &level in &grid {
            let pt = solve_rd(p, d, level, cfg).map_err(solver)?;
            let (residual, gap) = certificates(p, d, &pt).map_err(solver)?;
            let pass = pt.converged
                && residual <= CERTIFICATE_TOL
                && (-1e-12..=CERTIFICATE_TOL).contains(&gap);
            report.line(
                "point",
                Some(pass),
                format!(
                    "D = {}; R = {} {unit}; lambda = {}; converged = {}; residual = {}; primal - dual = {}",
                    sig(level),
                    sig(pt.rate_nats * scale),
                    sig(pt.lambda),
                    pt.converged,
                    sig(residual),
                    sig(gap)
                ),
            )?;
            rates.push(pt.rate_nats);
        }
        let monotone = rates.windows(2).all(|w| w[1] <= w[0] + CERTIFICATE_TOL);
        let convex = (1..rates.len().saturating_sub(1)).all(|i| {
            let t = (grid[i] - grid[i - 1]) / (grid[i + 1] - grid[i - 1]);
            rates[i] <= (1.0 - t) * rates[i - 1] + t * rates[i + 1] + CERTIFICATE_TOL
        });
        report.line(
            "curve",
            Some(monotone && convex),
            format!("non-increasing = {monotone}; convex = {convex}; {points} points"),
        )?;
    }

    let failures = report.failures;
    if failures == 0 {
        writeln!(report.out, "# all checks passed")?;
        Ok(())
    } else {
        writeln!(report.out, "# {failures} check(s) failed")?;
        Err(Failure::verify(anyhow!("{failures} check(s) failed")))
    }
}
