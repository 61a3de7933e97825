use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdlab_core::ba::{lagrangian_residuals, solve_rd, sweep, SolverConfig};
use rdlab_core::erasure::{
    check_non_decreasing, erasure_segment_range, lambda_star, lambda_star_residual,
    monotonicity_check, solve_degenerate_family, solve_erasure_segment, ErasureProblem,
};
use rdlab_core::prob::{tv_conditional, TvForm};
use rdlab_core::{Error, SourceDistribution};

fn random_source(rng: &mut ChaCha8Rng, k: usize) -> SourceDistribution {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..3.0)).collect();
    let s: f64 = w.iter().sum();
    SourceDistribution::new(w.iter().map(|v| v / s).collect()).unwrap()
}

fn random_problem(rng: &mut ChaCha8Rng) -> ErasureProblem {
    let k = rng.gen_range(2..=4);
    let p = random_source(rng, k);
    let d = rng.gen_range(0.02..0.8) * p.min_mass();
    let other = d + rng.gen_range(0.01..0.3);
    if rng.gen_bool(0.5) {
        ErasureProblem::new(k, d, other, p, 0.0).unwrap()
    } else {
        ErasureProblem::new(k, other, d, p, 0.0).unwrap()
    }
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / points as f64)
        .collect()
}

#[test]
fn closed_form_matches_ba_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = SolverConfig::default();
    for _ in 0..10 {
        let prob = random_problem(&mut rng);
        let d = prob.d1().min(prob.d2());
        let (onset, upper) = erasure_segment_range(d, prob.k(), prob.source()).unwrap();
        let levels: Vec<f64> = grid(0.0, onset, 3)
            .into_iter()
            .chain(grid(onset, upper, 7))
            .collect();
        for dist in levels {
            let p = prob.at(dist).unwrap();
            let sol = solve_erasure_segment(&p).unwrap();
            let ba = solve_rd(p.source(), p.measure(), dist, &cfg).unwrap();
            assert!(
                (sol.rate_nats - ba.rate_nats).abs() <= 1e-5,
                "{prob:?} D={dist}: {} vs {}",
                sol.rate_nats,
                ba.rate_nats
            );
            assert!((sol.distortion - ba.distortion).abs() <= 1e-5);
        }
    }
}

#[test]
fn closed_form_satisfies_optimality_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let prob = random_problem(&mut rng);
        let d = prob.d1().min(prob.d2());
        let (onset, upper) = erasure_segment_range(d, prob.k(), prob.source()).unwrap();
        for dist in grid(0.0, upper, 10) {
            let p = prob.at(dist).unwrap();
            let sol = solve_erasure_segment(&p).unwrap();
            let pt = sol.to_rd_point(&p).unwrap();
            let res = lagrangian_residuals(p.source(), p.measure(), &pt).unwrap();
            assert!(
                res.max_violation(&pt.output, 1e-12) <= 1e-8,
                "D={dist} onset={onset}"
            );
            for (l, s) in res.slack.iter().enumerate() {
                if pt.output[l] > 1e-12 {
                    assert!(s.abs() <= 1e-8);
                }
            }
        }
    }
}

#[test]
fn letters_keep_mass_up_to_the_onset() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let prob = random_problem(&mut rng);
        let d = prob.d1().min(prob.d2());
        let (onset, upper) = erasure_segment_range(d, prob.k(), prob.source()).unwrap();
        assert!(onset < upper);
        for dist in grid(0.0, onset, 5).into_iter().chain([onset]) {
            let sol = solve_erasure_segment(&prob.at(dist).unwrap()).unwrap();
            assert!(sol.p_y.probs()[..prob.k()].iter().all(|&v| v >= 0.0));
        }
    }
}

#[test]
fn uniform_sources_keep_the_whole_segment() {
    for k in 2..=5 {
        let p = SourceDistribution::uniform(k).unwrap();
        let d = 0.5 / k as f64;
        let (_, upper) = erasure_segment_range(d, k, &p).unwrap();
        assert!((upper - d).abs() < 1e-12);
    }
}

#[test]
fn root_bracket_grid() {
    for k in [2usize, 3, 4, 8] {
        for d in [0.01, 0.05, 0.1, 1.0 / k as f64] {
            match lambda_star(d, k) {
                Ok(ls) => {
                    assert!(ls.residual(d, k).abs() <= 1e-12);
                    assert!(ls.in_estimate_bracket, "K={k} d={d}: {ls:?}");
                    assert!(lambda_star_residual(ls.search_bracket.0, d, k) < 0.0);
                }
                Err(Error::NoPositiveRoot(_)) => assert_eq!((k, d), (2, 0.5)),
                Err(e) => panic!("K={k} d={d}: {e}"),
            }
        }
    }
}

#[test]
fn erasure_mass_monotone_in_both_paths() {
    let cfg = SolverConfig::default();
    for (k, d) in [(2, 0.1), (3, 0.05), (4, 0.1)] {
        let prob = ErasureProblem::uniform(k, d, d + 0.1, 0.0).unwrap();
        let (onset, upper) = erasure_segment_range(d, k, prob.source()).unwrap();
        let levels = grid(onset, upper, 10);
        assert!(monotonicity_check(&prob, &levels).unwrap().holds());
        let ba: Vec<f64> = sweep(prob.source(), prob.measure(), &levels, &cfg)
            .unwrap()
            .into_iter()
            .map(|r| r.unwrap().output[k])
            .collect();
        assert_eq!(check_non_decreasing(&ba, 1e-9), None, "{ba:?}");
    }
}

#[test]
fn family_is_flat() {
    for (k, d) in [(2, 0.25), (3, 0.1)] {
        let base = ErasureProblem::uniform(k, d, d, 0.0).unwrap();
        let (onset, upper) = erasure_segment_range(d, k, base.source()).unwrap();
        let p = base.at(onset + 0.7 * (upper - onset)).unwrap();
        let members: Vec<_> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&mix| solve_degenerate_family(&p, mix).unwrap())
            .collect();
        for a in &members {
            assert!((a.rate_nats - members[0].rate_nats).abs() <= 1e-10);
            assert!((a.distortion - members[0].distortion).abs() <= 1e-10);
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let tv = tv_conditional(&members[i].channel, &members[j].channel, TvForm::Unhalved)
                    .unwrap();
                assert!(tv > 0.1);
            }
        }
    }
}
