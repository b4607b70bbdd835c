//! Brute-force reference spectrum for small instances.
//!
//! Lists every eigenvalue with frequency `k <= K` in every coordinate, sorts the
//! list, and reads `n(eps)` off suffix sums plus a bounded remainder for the
//! omitted frequencies. Nothing here goes through the lazy stream, the level
//! counts or the trace routines.

use std::cmp::Ordering;
use std::f64::EPSILON;

use serde::Serialize;

use crate::complexity::{ComplexityResult, Criterion, PathUsed};
use crate::error::{Error, Result};
use crate::params::ParameterFamily;
use crate::special::{tail_power_sum, BoundedValue, EIGEN_REL};
use crate::spectrum::{EigenLabel, Parity};

pub const MAX_DIMENSION: u64 = 8;
pub const MAX_DEPTH: u64 = 100_000;

/// Neumaier accumulation, kept local so the oracle owns its arithmetic.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    s: f64,
    c: f64,
    abs: f64,
    n: u64,
}

impl Acc {
    fn push(&mut self, x: f64) {
        let t = self.s + x;
        self.c += if self.s.abs() >= x.abs() {
            (self.s - t) + x
        } else {
            (x - t) + self.s
        };
        self.s = t;
        self.abs += x.abs();
        self.n += 1;
    }

    fn total(&self) -> f64 {
        self.s + self.c
    }

    fn bracket(&self) -> BoundedValue {
        let rel = EIGEN_REL + 2.0 * EPSILON + self.n as f64 * EPSILON * EPSILON;
        BoundedValue::new(self.total(), self.abs * rel)
    }
}

fn label_order(a: &EigenLabel, b: &EigenLabel) -> Ordering {
    match (a, b) {
        (EigenLabel::Constant, EigenLabel::Constant) => Ordering::Equal,
        (EigenLabel::Constant, _) => Ordering::Less,
        (_, EigenLabel::Constant) => Ordering::Greater,
        (
            EigenLabel::Oscillatory { j: j1, k: k1, parity: p1 },
            EigenLabel::Oscillatory { j: j2, k: k2, parity: p2 },
        ) => j1.cmp(j2).then(k1.cmp(k2)).then_with(|| match (p1, p2) {
            (Parity::Cos, Parity::Sin) => Ordering::Less,
            (Parity::Sin, Parity::Cos) => Ordering::Greater,
            _ => Ordering::Equal,
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaterializedSpectrum {
    pub d: u64,
    pub depth: u64,
    /// Descending, `1 + 2 d K` entries, the constant mode included even when zero.
    pub values: Vec<(f64, EigenLabel)>,
    /// Mass of all frequencies above `K`.
    pub remainder: BoundedValue,
    /// Largest omitted eigenvalue, `max_j beta_j / (K+1)^sigma_j`.
    pub max_omitted: f64,
}

/// Materializes all eigenvalues with `k <= depth` for `d <= 8`, `depth <= 1e5`.
pub fn materialize(family: &ParameterFamily, d: u64, depth: u64, tol: f64) -> Result<MaterializedSpectrum> {
    if d > MAX_DIMENSION {
        return Err(Error::OracleLimit(format!("d = {d} exceeds {MAX_DIMENSION}")));
    }
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::OracleLimit(format!("K = {depth} outside 1..={MAX_DEPTH}")));
    }
    family.ensure_valid(d)?;

    let mut alpha = Acc::default();
    let mut values = Vec::with_capacity((1 + 2 * d * depth) as usize);
    let mut remainder = BoundedValue::zero();
    let mut max_omitted = 0.0f64;
    for j in 1..=d {
        alpha.push(family.alpha(j)?);
        let (b, s) = (family.beta(j)?, family.sigma(j)?);
        for k in 1..=depth {
            let v = b / (k as f64).powf(s);
            values.push((v, EigenLabel::Oscillatory { j, k, parity: Parity::Cos }));
            values.push((v, EigenLabel::Oscillatory { j, k, parity: Parity::Sin }));
        }
        remainder = remainder + tail_power_sum(depth, s, tol)?.scale(2.0 * b);
        max_omitted = max_omitted.max(b / ((depth + 1) as f64).powf(s));
    }
    values.push((alpha.total(), EigenLabel::Constant));
    values.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then_with(|| label_order(&a.1, &b.1)));
    Ok(MaterializedSpectrum {
        d,
        depth,
        values,
        remainder,
        max_omitted,
    })
}

impl MaterializedSpectrum {
    /// Compensated left-to-right prefix sums; entry `i` covers the first `i + 1` values.
    pub fn prefix_sums(&self) -> Vec<f64> {
        let mut acc = Acc::default();
        self.values
            .iter()
            .map(|&(v, _)| {
                acc.push(v);
                acc.total()
            })
            .collect()
    }

    /// Number of leading entries that coincide with the true top of the spectrum.
    pub fn exact_ranks(&self) -> usize {
        self.values.iter().take_while(|&&(v, _)| v >= self.max_omitted).count()
    }

    /// `tail(n)` for every `n` in `0..=len`, each including the remainder.
    fn tails(&self) -> Vec<BoundedValue> {
        let mut out = vec![BoundedValue::zero(); self.values.len() + 1];
        let mut acc = Acc::default();
        out[self.values.len()] = self.remainder;
        for (i, &(v, _)) in self.values.iter().enumerate().rev() {
            acc.push(v);
            out[i] = acc.bracket() + self.remainder;
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum OracleOutcome {
    Conclusive(ComplexityResult),
    /// The truncation at `K` leaves the answer undetermined; raise `K`.
    Inconclusive { reason: String },
}

impl OracleOutcome {
    pub fn n(&self) -> Option<u64> {
        match self {
            OracleOutcome::Conclusive(r) => Some(r.n),
            OracleOutcome::Inconclusive { .. } => None,
        }
    }
}

pub fn oracle_info_complexity(spec: &MaterializedSpectrum, eps: f64, crit: Criterion) -> Result<OracleOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfDomain {
            name: "eps",
            value: eps,
            domain: "(0, 1)",
        });
    }
    let tails = spec.tails();
    let e2 = BoundedValue::new(eps * eps, EPSILON * eps * eps);
    let thr = match crit {
        Criterion::Abs => e2,
        Criterion::Nor => e2.mul(tails[0]),
    };
    let first = |p: &dyn Fn(&BoundedValue) -> bool| tails.iter().position(p);
    let (Some(n_hi), Some(n_lo)) = (first(&|t| t.hi() <= thr.lo()), first(&|t| t.lo() <= thr.hi())) else {
        return Ok(OracleOutcome::Inconclusive {
            reason: format!(
                "threshold {:e} not reached within K = {}; remainder {:e}",
                thr.value, spec.depth, spec.remainder.value
            ),
        });
    };
    if n_lo != n_hi {
        return Ok(OracleOutcome::Inconclusive {
            reason: format!("bounds leave n in {n_lo}..={n_hi}"),
        });
    }
    if n_hi > spec.exact_ranks() {
        return Ok(OracleOutcome::Inconclusive {
            reason: format!("omitted eigenvalue {:e} would rank above position {n_hi}", spec.max_omitted),
        });
    }
    Ok(OracleOutcome::Conclusive(ComplexityResult {
        n: n_hi as u64,
        tail_at_n: tails[n_hi],
        threshold: thr,
        certified: true,
        bracket: None,
        path: PathUsed::Oracle,
    }))
}
