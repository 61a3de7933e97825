use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Finite prefix of an enumeration `i -> a(i)` of a set of naturals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnumerationTable {
    pairs: Vec<(u64, u64)>,
}

impl EnumerationTable {
    /// Pairs `(i, a(i))` with distinct, positive indices.
    pub fn new(pairs: Vec<(u64, u64)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &(i, _) in &pairs {
            if i == 0 {
                return Err(Error::InvalidParameter(
                    "table indices must be positive".into(),
                ));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidParameter(format!("table index {i} repeated")));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    /// Smallest index `i` in `[lo, hi]` with `a(i) = n`.
    pub fn first_index_of(&self, n: u64, lo: u64, hi: u64) -> Option<u64> {
        self.pairs
            .iter()
            .filter(|&&(i, a)| a == n && lo <= i && i <= hi)
            .map(|&(i, _)| i)
            .min()
    }
}

/// Lines `i n`; blank lines and `#` comments are skipped.
impl FromStr for EnumerationTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |f: &str| {
                f.parse::<u64>().map_err(|_| {
                    Error::InvalidParameter(format!(
                        "line {}: '{f}' is not a natural number",
                        idx + 1
                    ))
                })
            };
            match fields.as_slice() {
                [i, n] => pairs.push((parse(i)?, parse(n)?)),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "line {}: expected two naturals 'i n', got '{line}'",
                        idx + 1
                    )))
                }
            }
        }
        Self::new(pairs).map_err(|e| match e {
            Error::InvalidParameter(msg) => Error::InvalidParameter(format!("table: {msg}")),
            other => other,
        })
    }
}

/// `2^-i`
pub fn dyadic(i: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << i)
}

/// `2^-i` for the smallest `i` in `[min_index, m]` with `a(i) = n`, else 0.
pub fn x_value_from(table: &EnumerationTable, n: u64, m: u64, min_index: u64) -> BigRational {
    table
        .first_index_of(n, min_index.max(1), m)
        .map(dyadic)
        .unwrap_or_else(BigRational::zero)
}

/// `2^-i` if `a(i) = n` for some `0 < i <= m`, else 0.
pub fn x_value(table: &EnumerationTable, n: u64, m: u64) -> BigRational {
    x_value_from(table, n, m, 1)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact value of a finite float.
pub fn exact(v: f64) -> Result<BigRational> {
    BigRational::from_float(v)
        .ok_or_else(|| Error::InvalidParameter(format!("{v} has no exact rational value")))
}

/// Smallest `m >= 1` with `2^-m <= bound` (or `< bound` when `strict`).
pub fn dyadic_cutoff(bound: f64, strict: bool) -> Result<u64> {
    if !(bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff bound {bound} must be positive"
        )));
    }
    let ok = |m: i32| {
        let p = 2f64.powi(-m);
        if strict {
            p < bound
        } else {
            p <= bound
        }
    };
    (1..1075)
        .find(|&m| ok(m))
        .map(|m| m as u64)
        .ok_or_else(|| Error::InvalidParameter(format!("cutoff bound {bound} too small")))
}
