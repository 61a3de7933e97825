use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::branch::{BranchPair, BranchProblem, Solved, SolverTag};
use super::table::{dyadic, dyadic_cutoff, exact, to_f64, x_value_from, EnumerationTable};
use crate::ba::SolverConfig;
use crate::distortion::{d_max, is_normal, DistortionMeasure};
use crate::error::{Error, Result};
use crate::prob::{SourceDistribution, TvForm};

type Q = BigRational;

/// Letters with `d(k1,l1) = 0 < d(k1,l2)` and `d(k2,l2) = 0 < d(k2,l1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActivePairs {
    pub k1: usize,
    pub k2: usize,
    pub l1: usize,
    pub l2: usize,
}

impl ActivePairs {
    pub fn holds_for(&self, d: &DistortionMeasure) -> bool {
        let (k, l) = (d.source_size(), d.repro_size());
        self.k1 < k
            && self.k2 < k
            && self.l1 < l
            && self.l2 < l
            && d.get(self.k1, self.l1) == 0.0
            && d.get(self.k1, self.l2) > 0.0
            && d.get(self.k2, self.l2) == 0.0
            && d.get(self.k2, self.l1) > 0.0
    }
}

fn zeros(d: &DistortionMeasure, k: usize) -> Vec<usize> {
    (0..d.repro_size())
        .filter(|&l| d.get(k, l) == 0.0)
        .collect()
}

/// Follows the zero pattern from source letter 0: for a current letter `a`,
/// any zero `l1` of `a` and any letter `b` paying at `l1` whose own zero `l2`
/// costs `a` something closes the quadruple. Otherwise some letter has a
/// strictly smaller zero set and the search continues from there; zero sets
/// cannot shrink forever.
pub fn find_active_pairs(d: &DistortionMeasure) -> Result<ActivePairs> {
    if !is_normal(d) {
        return Err(Error::InvalidMeasure("measure is not normal".into()));
    }
    if let Some(column) = d.all_zero_column() {
        return Err(Error::TrivialMeasure { column });
    }
    let k_size = d.source_size();
    let mut a = 0;
    for _ in 0..=k_size {
        let za = zeros(d, a);
        for &l1 in &za {
            for b in (0..k_size).filter(|&b| d.get(b, l1) > 0.0) {
                if let Some(&l2) = zeros(d, b).iter().find(|&&l| d.get(a, l) > 0.0) {
                    return Ok(ActivePairs {
                        k1: a,
                        k2: b,
                        l1,
                        l2,
                    });
                }
            }
        }
        let smaller = (0..k_size).find(|&b| {
            let zb = zeros(d, b);
            zb.len() < za.len() && zb.iter().all(|l| za.contains(l))
        });
        match smaller {
            Some(b) => a = b,
            None => break,
        }
    }
    Err(Error::InvalidMeasure(
        "no pair of source letters with incomparable zero sets".into(),
    ))
}

fn all_active_pairs(d: &DistortionMeasure) -> Vec<ActivePairs> {
    let (k, l) = (d.source_size(), d.repro_size());
    let mut out = Vec::new();
    for k1 in 0..k {
        for k2 in 0..k {
            for l1 in 0..l {
                for l2 in 0..l {
                    let p = ActivePairs { k1, k2, l1, l2 };
                    if k1 != k2 && l1 != l2 && p.holds_for(d) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn exact_matrix(d: &DistortionMeasure) -> Result<Vec<Vec<Q>>> {
    d.rows()
        .map(|row| row.iter().map(|&v| exact(v)).collect())
        .collect()
}

fn column_value(dq: &[Vec<Q>], p: &[Q], l: usize) -> Q {
    p.iter().zip(dq).map(|(pk, row)| pk * &row[l]).sum()
}

/// `min_{l not in {a, b}} V_l - V_a`, `None` when there are no other columns.
fn dominance_margin(dq: &[Vec<Q>], p: &[Q], a: usize, b: usize) -> Option<Q> {
    let base = column_value(dq, p, a);
    (0..dq[0].len())
        .filter(|&l| l != a && l != b)
        .map(|l| column_value(dq, p, l) - &base)
        .min()
}

fn to_source(p: &[Q]) -> Result<SourceDistribution> {
    SourceDistribution::new(p.iter().map(to_f64).collect())
}

/// A full-support rational source on which columns `l1` and `l2` tie for the
/// zero-rate distortion and beat every other column.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedSource {
    pub source: SourceDistribution,
    pub exact: Vec<BigRational>,
    pub pairs: ActivePairs,
    /// The common value `sum_k p(k) d(k, l1) = sum_k p(k) d(k, l2)`.
    pub level: BigRational,
    /// Lead of `l1`, `l2` over the next best column; `None` with two columns.
    pub margin: Option<BigRational>,
}

/// Keeps the seed's other letters scaled by `1 - t` and solves for the mass of
/// `k2` that ties `l1` with `l2`.
fn balance(dq: &[Vec<Q>], seed: &[Q], pairs: ActivePairs, t: &Q) -> Option<Vec<Q>> {
    let ActivePairs { k1, k2, l1, l2 } = pairs;
    let keep = Q::one() - t;
    let mut p: Vec<Q> = seed.iter().map(|s| s * &keep).collect();
    let (d12, d21) = (&dq[k1][l2], &dq[k2][l1]);
    let denom = d12 + d21;
    let mut rest = Q::one();
    let mut skew = Q::zero();
    for (k, pk) in p.iter().enumerate() {
        if k != k1 && k != k2 {
            rest -= pk;
            skew += pk * (&dq[k][l2] - &dq[k][l1]);
        }
    }
    let p2 = (d12 * &rest + skew) / &denom;
    let p1 = rest - &p2;
    if !p1.is_positive() || !p2.is_positive() {
        return None;
    }
    p[k1] = p1;
    p[k2] = p2;
    Some(p)
}

/// Moves the seed towards the two-letter source on `{k1, k2}` balancing `l1`
/// against `l2` (mixing weight `t = 1 - 2^-j`, `j = 0, 1, ...`) and fixes the
/// tie exactly through the mass of `k2`. Other quadruples are tried if the
/// first cannot make `l1`, `l2` strictly better than all remaining columns.
pub fn construct_balanced_general(
    d: &DistortionMeasure,
    seed: &SourceDistribution,
) -> Result<BalancedSource> {
    let first = find_active_pairs(d)?;
    d.check_source(seed)?;
    if !seed.has_full_support() {
        return Err(Error::InfeasibleSeed("seed must have full support".into()));
    }
    let dq = exact_matrix(d)?;
    let mut seed_q = seed
        .probs()
        .iter()
        .map(|&v| exact(v))
        .collect::<Result<Vec<Q>>>()?;
    let total: Q = seed_q.iter().sum();
    seed_q.iter_mut().for_each(|v| *v /= &total);

    let mut candidates = vec![first];
    candidates.extend(all_active_pairs(d).into_iter().filter(|p| *p != first));
    for pairs in candidates {
        for j in 0..=64u64 {
            let t = Q::one() - dyadic(j);
            let Some(p) = balance(&dq, &seed_q, pairs, &t) else {
                continue;
            };
            let margin = dominance_margin(&dq, &p, pairs.l1, pairs.l2);
            if margin.as_ref().is_none_or(|m| m.is_positive()) {
                debug_assert_eq!(
                    column_value(&dq, &p, pairs.l1),
                    column_value(&dq, &p, pairs.l2)
                );
                return Ok(BalancedSource {
                    source: to_source(&p)?,
                    level: column_value(&dq, &p, pairs.l1),
                    exact: p,
                    pairs,
                    margin,
                });
            }
        }
    }
    Err(Error::InfeasibleSeed(format!(
        "no active quadruple lets two columns tie strictly below all others \
         (first quadruple k1={}, k2={}, l1={}, l2={})",
        first.k1, first.k2, first.l1, first.l2
    )))
}

/// How the perturbation moves the zero-rate distortion level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LevelMode {
    /// Shift mass between `k1` and `k2`; `D_max,n = level - x d(k2, l1)`.
    #[default]
    Shifting,
    /// Perturb along a direction that leaves the winning column's value
    /// unchanged, so `D_max,n = level` for every `n`.
    ConstantLevel,
}

/// Zero-sum direction on three source letters, orthogonal to column `keep`
/// and increasing column `raise`. Scaled to unit max norm.
fn constant_direction(dq: &[Vec<Q>], keep: usize, raise: usize) -> Option<Vec<Q>> {
    let k = dq.len();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                let (x, y, z) = (&dq[a][keep], &dq[b][keep], &dq[c][keep]);
                // (1, 1, 1) x (x, y, z)
                let mut v = vec![Q::zero(); k];
                v[a] = z - y;
                v[b] = x - z;
                v[c] = y - x;
                let w: Q = v.iter().zip(dq).map(|(vk, row)| vk * &row[raise]).sum();
                if w.is_zero() {
                    continue;
                }
                let scale = v.iter().map(|e| e.abs()).max().unwrap_or_else(Q::one);
                let sign = if w.is_positive() { Q::one() } else { -Q::one() };
                return Some(v.into_iter().map(|e| e * &sign / &scale).collect());
            }
        }
    }
    None
}

fn shifted(p: &[Q], dir: &[Q], x: &Q) -> Vec<Q> {
    p.iter().zip(dir).map(|(a, v)| a + v * x).collect()
}

/// `p + x dir` stays positive and strictly prefers `best` to every other column.
fn keeps_regime(dq: &[Vec<Q>], p: &[Q], dir: &[Q], x: &Q, best: usize) -> bool {
    let q = shifted(p, dir, x);
    if q.iter().any(|v| !v.is_positive()) {
        return false;
    }
    let v = column_value(dq, &q, best);
    (0..dq[0].len())
        .filter(|&l| l != best)
        .all(|l| column_value(dq, &q, l) > v)
}

/// Two perturbations of a balanced source, solved at their own `D_max`. For
/// `x > 0` one codes only `l1` and the other only `l2`, at halved TV distance 1.
/// The threshold is `1/2`.
///
/// Table indices `i > m~` are used. `m~` is the smallest integer with
/// `min p / max d >= 2^-m~`, raised until the largest admissible `x` still
/// keeps full support and a unique winning column in both branches.
pub fn general_branch_test(
    d: &DistortionMeasure,
    balanced: &BalancedSource,
    table: &EnumerationTable,
    n: u64,
    m: u64,
    mode: LevelMode,
    cfg: &SolverConfig,
) -> Result<BranchPair> {
    let pairs = balanced.pairs;
    if !pairs.holds_for(d) || balanced.exact.len() != d.source_size() {
        return Err(Error::InvalidParameter(
            "balanced source was built for another measure".into(),
        ));
    }
    let dq = exact_matrix(d)?;
    let p = &balanced.exact;
    let ActivePairs { k1, k2, l1, l2 } = pairs;
    if column_value(&dq, p, l1) != column_value(&dq, p, l2)
        || dominance_margin(&dq, p, l1, l2).is_some_and(|m| !m.is_positive())
    {
        return Err(Error::InvalidParameter(format!(
            "source does not balance columns {l1} and {l2} below all others"
        )));
    }

    let (dir_1, dir_2) = match mode {
        LevelMode::Shifting => {
            let ratio = &dq[k2][l1] / &dq[k1][l2];
            let mut one = vec![Q::zero(); p.len()];
            one[k1] = Q::one();
            one[k2] = -Q::one();
            let two: Vec<Q> = one.iter().map(|v| -v * &ratio).collect();
            (one, two)
        }
        LevelMode::ConstantLevel => {
            let missing = || {
                Error::InvalidParameter(
                    "no perturbation keeps the winning column's distortion fixed".into(),
                )
            };
            (
                constant_direction(&dq, l1, l2).ok_or_else(missing)?,
                constant_direction(&dq, l2, l1).ok_or_else(missing)?,
            )
        }
    };

    let max_entry = d.max_entry();
    let mut cutoff = dyadic_cutoff(balanced.source.min_mass() / max_entry, false)?;
    while !(keeps_regime(&dq, p, &dir_1, &dyadic(cutoff + 1), l1)
        && keeps_regime(&dq, p, &dir_2, &dyadic(cutoff + 1), l2))
    {
        cutoff += 1;
        if cutoff > 1000 {
            return Err(Error::InvalidParameter(
                "no perturbation size keeps both branches in regime".into(),
            ));
        }
    }

    let xr = x_value_from(table, n, m, cutoff + 1);
    let solve = |q: Vec<Q>, column: usize| -> Result<Solved> {
        let source = to_source(&q)?;
        let (level, _) = d_max(&source, d)?;
        let exact_level = to_f64(&column_value(&dq, &q, column));
        if (level - exact_level).abs() > 1e-12 {
            return Err(Error::RegimeViolation {
                letter: column,
                value: level,
                detail: format!("D_max {level} differs from the constructed {exact_level}"),
            });
        }
        let problem = BranchProblem {
            source,
            measure: d.clone(),
            distortion: level,
        };
        Ok(Solved {
            point: problem.solve_ba(cfg)?,
            problem,
            solver: SolverTag::Ba,
        })
    };
    BranchPair::assemble(
        to_f64(&xr),
        solve(shifted(p, &dir_1, &xr), l1)?,
        solve(shifted(p, &dir_2, &xr), l2)?,
        solve(p.clone(), l1)?,
        TvForm::Halved,
        0.5,
    )
}
