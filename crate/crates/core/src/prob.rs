//! Probability vectors, test channels and the information measures built on them.
//!
//! Logarithms are natural throughout. `0 ln 0` is taken as `0`, and output
//! letters that carry no probability mass are skipped.

use crate::error::{Error, Result};

/// Simplex tolerance: sums within this distance of one are accepted as is.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Sums further from one than [`SIMPLEX_TOL`] but within this are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;

fn validate_simplex(probs: &mut [f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what} is empty")));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || !(0.0..=1.0 + RENORMALIZE_TOL).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} = {p} is not in [0, 1]"
            )));
        }
    }
    let sum: f64 = probs.iter().sum();
    let err = (sum - 1.0).abs();
    if err > RENORMALIZE_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {sum}"
        )));
    }
    if err > SIMPLEX_TOL {
        log::warn!("{what}: entries sum to {sum}; renormalizing");
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    probs.iter_mut().for_each(|p| *p = p.min(1.0));
    Ok(())
}

/// Source distribution `P_X` over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDistribution {
    probs: Vec<f64>,
}

impl SourceDistribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        validate_simplex(&mut probs, "source distribution")?;
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(Error::InvalidDistribution(format!(
                "point mass at {at} outside alphabet of size {k}"
            )));
        }
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// True when every letter has positive mass.
    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub fn min_mass(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for SourceDistribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// Output distribution `P_Y` induced by a source and a test channel.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMarginal {
    probs: Vec<f64>,
}

impl OutputMarginal {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        validate_simplex(&mut probs, "output marginal")?;
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl std::ops::Index<usize> for OutputMarginal {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// Row-stochastic `K x L` matrix `P_{Y|X}(l|k)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TestChannel {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl TestChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::InvalidChannel("no rows".into()));
        }
        let outputs = rows[0].len();
        let mut data = Vec::with_capacity(inputs * outputs);
        for (k, mut row) in rows.into_iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::DimensionMismatch {
                    context: "test channel row",
                    expected: outputs,
                    found: row.len(),
                });
            }
            validate_simplex(&mut row, &format!("channel row {k}"))
                .map_err(|e| Error::InvalidChannel(e.to_string()))?;
            data.extend(row);
        }
        Ok(Self {
            inputs,
            outputs,
            data,
        })
    }

    /// Builds a channel from rows that are already stochastic up to rounding;
    /// each row is rescaled to sum to one.
    pub(crate) fn from_rows_normalized(inputs: usize, outputs: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), inputs * outputs);
        for row in data.chunks_mut(outputs) {
            let s: f64 = row.iter().sum();
            debug_assert!(s > 0.0, "channel row with zero mass");
            row.iter_mut().for_each(|v| *v /= s);
        }
        Self {
            inputs,
            outputs,
            data,
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        Self {
            inputs: k,
            outputs: k,
            data,
        }
    }

    /// Every input mapped to the same output distribution `row`.
    pub fn constant(inputs: usize, row: &[f64]) -> Result<Self> {
        Self::new(vec![row.to_vec(); inputs])
    }

    /// Every input mapped deterministically to output `column`.
    pub fn point_mass_column(inputs: usize, outputs: usize, column: usize) -> Self {
        assert!(column < outputs, "column {column} out of range");
        let mut data = vec![0.0; inputs * outputs];
        for k in 0..inputs {
            data[k * outputs + column] = 1.0;
        }
        Self {
            inputs,
            outputs,
            data,
        }
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        check_same_shape(self, other, "channel mixture")?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight {weight} not in [0, 1]"
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| weight * a + (1.0 - weight) * b)
            .collect();
        Ok(Self::from_rows_normalized(self.inputs, self.outputs, data))
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.outputs + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.outputs..(k + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.outputs)
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_same_shape(a: &TestChannel, b: &TestChannel, context: &'static str) -> Result<()> {
    if a.inputs != b.inputs {
        return Err(Error::DimensionMismatch {
            context,
            expected: a.inputs,
            found: b.inputs,
        });
    }
    if a.outputs != b.outputs {
        return Err(Error::DimensionMismatch {
            context,
            expected: a.outputs,
            found: b.outputs,
        });
    }
    Ok(())
}

fn check_inputs(p: &SourceDistribution, ch: &TestChannel, context: &'static str) -> Result<()> {
    if p.len() != ch.inputs {
        return Err(Error::DimensionMismatch {
            context,
            expected: ch.inputs,
            found: p.len(),
        });
    }
    Ok(())
}

/// Nonnegative amount of information, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InfoValue {
    nats: f64,
}

impl InfoValue {
    /// Rounding can leave tiny negative values; those are clamped to zero.
    pub fn from_nats(nats: f64) -> Self {
        debug_assert!(nats.is_finite());
        debug_assert!(nats > -1e-9, "information value {nats} is negative");
        Self {
            nats: nats.max(0.0),
        }
    }

    pub fn nats(self) -> f64 {
        self.nats
    }

    pub fn bits(self) -> f64 {
        self.nats / std::f64::consts::LN_2
    }
}

pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `-sum p ln p` over a raw probability slice.
pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| xlnx(p)).sum::<f64>()
}

pub fn entropy(p: &SourceDistribution) -> InfoValue {
    InfoValue::from_nats(entropy_of(p.probs()))
}

pub fn output_marginal(p: &SourceDistribution, ch: &TestChannel) -> Result<OutputMarginal> {
    check_inputs(p, ch, "output marginal")?;
    Ok(OutputMarginal::from_raw(marginal_raw(p.probs(), ch)))
}

fn marginal_raw(p: &[f64], ch: &TestChannel) -> Vec<f64> {
    let mut q = vec![0.0; ch.outputs];
    for (pk, row) in p.iter().zip(ch.rows()) {
        for (ql, &c) in q.iter_mut().zip(row) {
            *ql += pk * c;
        }
    }
    q
}

/// `H(X|Y)` from the joint `p(k) ch(l|k)`.
pub fn conditional_entropy(ch: &TestChannel, p: &SourceDistribution) -> Result<InfoValue> {
    check_inputs(p, ch, "conditional entropy")?;
    let q = marginal_raw(p.probs(), ch);
    let mut h = 0.0;
    for (pk, row) in p.probs().iter().zip(ch.rows()) {
        for (&c, &ql) in row.iter().zip(&q) {
            let joint = pk * c;
            if joint > 0.0 && ql > 0.0 {
                h -= joint * (joint / ql).ln();
            }
        }
    }
    Ok(InfoValue::from_nats(h))
}

/// `sum_k sum_l p(k) ch(l|k) ln(ch(l|k) / q(l))`.
fn mutual_information_kl(p: &[f64], ch: &TestChannel, q: &[f64]) -> f64 {
    let mut i = 0.0;
    for (pk, row) in p.iter().zip(ch.rows()) {
        if *pk == 0.0 {
            continue;
        }
        for (&c, &ql) in row.iter().zip(q) {
            if c > 0.0 && ql > 0.0 {
                i += pk * c * (c / ql).ln();
            }
        }
    }
    i
}

/// `I(X;Y)`, evaluated as a divergence sum and cross-checked against
/// `H(X) - H(X|Y)`.
pub fn mutual_information(p: &SourceDistribution, ch: &TestChannel) -> Result<InfoValue> {
    check_inputs(p, ch, "mutual information")?;
    let q = marginal_raw(p.probs(), ch);
    let kl = mutual_information_kl(p.probs(), ch, &q);
    if cfg!(debug_assertions) {
        let diff = entropy(p).nats() - conditional_entropy(ch, p)?.nats();
        debug_assert!(
            (kl - diff).abs() <= 1e-10,
            "mutual information routes disagree: {kl} vs {diff}"
        );
    }
    Ok(InfoValue::from_nats(kl))
}

/// Which normalization of the conditional total variation distance to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TvForm {
    /// `max_x sum_y |a - b|`
    #[default]
    Unhalved,
    /// `1/2 max_x sum_y |a - b|`
    Halved,
}

impl TvForm {
    pub fn scale(self) -> f64 {
        match self {
            TvForm::Unhalved => 1.0,
            TvForm::Halved => 0.5,
        }
    }
}

/// Worst-row L1 distance between two test channels.
pub fn tv_conditional(a: &TestChannel, b: &TestChannel, form: TvForm) -> Result<f64> {
    check_same_shape(a, b, "total variation")?;
    let worst = a
        .rows()
        .zip(b.rows())
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(form.scale() * worst)
}

/// True iff `q` is majorized by `p`: the descending partial sums of `q` never
/// exceed those of `p`, and the totals agree.
pub fn majorizes(p: &SourceDistribution, q: &SourceDistribution) -> Result<bool> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "majorization",
            expected: p.len(),
            found: q.len(),
        });
    }
    let sorted_desc = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (ps, qs) = (sorted_desc(p.probs()), sorted_desc(q.probs()));
    let (mut sp, mut sq) = (0.0, 0.0);
    for (a, b) in ps.iter().zip(&qs) {
        sp += a;
        sq += b;
        if sq > sp + SIMPLEX_TOL {
            return Ok(false);
        }
    }
    Ok((sp - sq).abs() <= SIMPLEX_TOL)
}

/// `E[d(X, Y)] = sum_k sum_l p(k) ch(l|k) d(k, l)`.
pub fn expected_distortion(
    p: &SourceDistribution,
    ch: &TestChannel,
    d: &crate::distortion::DistortionMeasure,
) -> Result<f64> {
    check_inputs(p, ch, "expected distortion")?;
    if d.source_size() != ch.inputs {
        return Err(Error::DimensionMismatch {
            context: "expected distortion (measure rows)",
            expected: ch.inputs,
            found: d.source_size(),
        });
    }
    if d.repro_size() != ch.outputs {
        return Err(Error::DimensionMismatch {
            context: "expected distortion (measure columns)",
            expected: ch.outputs,
            found: d.repro_size(),
        });
    }
    let mut total = 0.0;
    for (k, (pk, row)) in p.probs().iter().zip(ch.rows()).enumerate() {
        let inner: f64 = row.iter().zip(d.row(k)).map(|(c, dk)| c * dk).sum();
        total += pk * inner;
    }
    Ok(total)
}
