use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdlab_core::ba::{
    ba_fixed_slope, dual_rate_bound, duality_gap, lagrangian_residuals, solve_rd, sweep,
    SolverConfig,
};
use rdlab_core::distortion::{d_max, d_min, hamming};
use rdlab_core::prob::{expected_distortion, mutual_information};
use rdlab_core::{DistortionMeasure, SourceDistribution, TestChannel};

fn random_instance(
    rng: &mut ChaCha8Rng,
    k: usize,
    l: usize,
) -> (SourceDistribution, DistortionMeasure) {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    let p = SourceDistribution::new(w.iter().map(|v| v / s).collect()).unwrap();
    let rows = (0..k)
        .map(|_| (0..l).map(|_| rng.gen_range(0.0..2.0)).collect())
        .collect();
    (p, DistortionMeasure::new(rows).unwrap())
}

fn random_sized(rng: &mut ChaCha8Rng, below: usize) -> (SourceDistribution, DistortionMeasure) {
    let (k, l) = (rng.gen_range(2..below), rng.gen_range(2..below));
    random_instance(rng, k, l)
}

#[test]
fn binary_hamming_sweep_matches_closed_form() {
    let p = SourceDistribution::uniform(2).unwrap();
    let d = hamming(2).unwrap();
    let grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64 / 21.0).collect();
    let points = sweep(&p, &d, &grid, &SolverConfig::default()).unwrap();
    for (dist, pt) in grid.iter().zip(points) {
        let pt = pt.unwrap();
        let exact = std::f64::consts::LN_2 + dist * dist.ln() + (1.0 - dist) * (1.0 - dist).ln();
        assert!((pt.rate_nats - exact).abs() <= 1e-6, "D={dist}");
    }
}

#[test]
fn zero_rate_at_dmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let (p, d) = random_sized(&mut rng, 6);
        let (dmax, arg) = d_max(&p, &d).unwrap();
        let pt = solve_rd(&p, &d, dmax, &SolverConfig::default()).unwrap();
        assert!(pt.rate_nats <= 1e-8);
        assert_eq!(
            pt.channel,
            TestChannel::point_mass_column(p.len(), d.repro_size(), arg)
        );
    }
}

#[test]
fn curve_is_non_increasing_and_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = SolverConfig::default();
    for _ in 0..6 {
        let (p, d) = random_sized(&mut rng, 5);
        let (lo, hi) = (d_min(&p, &d).unwrap(), d_max(&p, &d).unwrap().0);
        if hi - lo < 1e-6 {
            continue;
        }
        let grid: Vec<f64> = (0..15)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 15.0)
            .collect();
        let rates: Vec<f64> = sweep(&p, &d, &grid, &cfg)
            .unwrap()
            .into_iter()
            .map(|r| r.unwrap().rate_nats)
            .collect();
        for w in rates.windows(2) {
            assert!(w[1] <= w[0] + 1e-8);
        }
        for i in 1..rates.len() - 1 {
            let t = (grid[i] - grid[i - 1]) / (grid[i + 1] - grid[i - 1]);
            assert!(rates[i] <= (1.0 - t) * rates[i - 1] + t * rates[i + 1] + 1e-8);
        }
    }
}

#[test]
fn primal_dual_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = SolverConfig::default();
    for _ in 0..20 {
        let (p, d) = random_sized(&mut rng, 6);
        let lambda = rng.gen_range(0.1..10.0);
        let pt = ba_fixed_slope(&p, &d, lambda, &cfg).unwrap();
        assert!(pt.converged);
        let res = lagrangian_residuals(&p, &d, &pt).unwrap();
        let worst = res.constraint_values().fold(0.0, f64::max);
        let mu: Vec<f64> = res.mu.iter().map(|m| m / worst).collect();
        let dual = dual_rate_bound(&p, &d, lambda, &mu, pt.distortion).unwrap();
        let gap = duality_gap(&p, &d, &pt).unwrap();
        assert!(dual <= pt.rate_nats + 1e-12);
        assert!(pt.rate_nats <= dual + gap + 1e-12);
        assert!(gap <= cfg.tolerance, "gap {gap}");
    }
}

#[test]
fn optimality_residuals_on_converged_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for _ in 0..20 {
        let (p, d) = random_sized(&mut rng, 6);
        let (lo, hi) = (d_min(&p, &d).unwrap(), d_max(&p, &d).unwrap().0);
        for pt in [
            ba_fixed_slope(&p, &d, rng.gen_range(0.1..20.0), &cfg).unwrap(),
            solve_rd(&p, &d, lo + rng.gen_range(0.05..0.95) * (hi - lo), &cfg).unwrap(),
        ] {
            if !pt.converged {
                continue;
            }
            let res = lagrangian_residuals(&p, &d, &pt).unwrap();
            assert!(
                res.max_violation(&pt.output, 1e-6) <= 1e-8,
                "{:?}",
                res.slack
            );
            checked += 1;
        }
    }
    assert!(checked >= 30);
}

/// Minimum of `I` over a grid of binary channels meeting the distortion budget.
fn grid_minimum(p: &SourceDistribution, d: &DistortionMeasure, target: f64, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
            let ch = TestChannel::new(vec![vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
            if expected_distortion(p, &ch, d).unwrap() <= target {
                best = best.min(mutual_information(p, &ch).unwrap().nats());
            }
        }
    }
    best
}

#[test]
fn two_by_two_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let cfg = SolverConfig::default();
    for _ in 0..5 {
        let (p, d) = random_instance(&mut rng, 2, 2);
        let (lo, hi) = (d_min(&p, &d).unwrap(), d_max(&p, &d).unwrap().0);
        for frac in [0.25, 0.5, 0.75] {
            let target = lo + frac * (hi - lo);
            let solver = solve_rd(&p, &d, target, &cfg).unwrap().rate_nats;
            let coarse = grid_minimum(&p, &d, target, 50);
            let fine = grid_minimum(&p, &d, target, 400);
            assert!(solver <= fine + 1e-9, "solver {solver} above grid {fine}");
            assert!(fine <= coarse + 1e-12);
            assert!(coarse - solver <= 0.05, "grid {coarse} vs solver {solver}");
        }
    }
}
