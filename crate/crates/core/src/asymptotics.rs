//! Large-`d` regimes of the normalized complexity when `beta_j ~ c j^{-s}`,
//! `alpha_j / beta_j -> r` and `sigma_j -> inf`.
//!
//! * case 1 (`s > 1` or `r = inf`): `sup_d n(eps) < inf`;
//! * case 2 (`0 <= s < 1`, `r < inf`): `n(eps) ~ 2 Q(eps) d` with
//!   `Q(eps) = (1 - (eps/eps0)^2)^{1/(1-s)}` and `eps0 = (1 + r/2)^{-1/2}`;
//! * case 3 (`s = 1`, `r < inf`): `ln n(eps) = (1 - (eps/eps0)^2) ln d + o(ln d)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::complexity::{info_complexity, ComplexityOptions, Criterion};
use crate::error::{Error, Result};
use crate::params::{ParameterFamily, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KzRegime {
    pub c: f64,
    pub s: f64,
    /// Limit of `alpha_j / beta_j`; may be `+inf`.
    pub r: f64,
    /// `(1 + r/2)^{-1/2}`; `1` when `r = inf`.
    pub eps0: f64,
    pub case_id: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Classification {
    Applicable(KzRegime),
    NotApplicable { reason: String },
}

/// `(c, pow, log_rate)` with `rule(j) ~ c j^pow e^{log_rate j}`, closed forms only.
fn lead(rule: &Rule) -> Option<(f64, f64, f64)> {
    match *rule {
        Rule::Const { value } => Some((value, 0.0, 0.0)),
        Rule::Power { c, s } => Some((c, -s, 0.0)),
        Rule::Exponential { c, rho } => Some((c, 0.0, rho.ln())),
        Rule::Affine { a, b } if b == 0.0 => Some((a, 0.0, 0.0)),
        Rule::Affine { b, .. } => Some((b, 1.0, 0.0)),
        Rule::Table { .. } => None,
    }
}

pub fn classify(family: &ParameterFamily) -> Classification {
    let na = |reason: &str| Classification::NotApplicable {
        reason: reason.to_string(),
    };
    if family.ensure_valid(1).is_err() {
        return na("family is not valid");
    }
    let Some((c, pow, rate)) = lead(&family.beta) else {
        return na("tabulated beta_j cannot certify beta_j ~ c j^{-s}");
    };
    if rate != 0.0 {
        return na("beta_j decays exponentially, not like c j^{-s}");
    }
    let s = -pow;
    let r = match lead(&family.alpha) {
        None => return na("tabulated alpha_j cannot certify a limit of alpha_j / beta_j"),
        Some((ca, _, _)) if ca == 0.0 => 0.0,
        Some((ca, pa, ra)) => {
            let (p, e) = (pa - pow, ra);
            if e > 0.0 || (e == 0.0 && p > 0.0) {
                f64::INFINITY
            } else if e < 0.0 || p < 0.0 {
                0.0
            } else {
                ca / c
            }
        }
    };
    let unbounded = match family.sigma {
        Rule::Affine { b, .. } => b > 0.0,
        Rule::Power { c, s } => c > 0.0 && s < 0.0,
        Rule::Exponential { c, rho } => c > 0.0 && rho > 1.0,
        Rule::Table { .. } => return na("tabulated sigma_j cannot certify sigma_j -> inf"),
        Rule::Const { .. } => false,
    };
    if !unbounded {
        return na("sigma_j does not tend to infinity");
    }
    let case_id = if s > 1.0 || r.is_infinite() {
        1
    } else if s < 1.0 {
        2
    } else {
        3
    };
    let eps0 = if r.is_finite() { (1.0 + r / 2.0).powf(-0.5) } else { 1.0 };
    Classification::Applicable(KzRegime { c, s, r, eps0, case_id })
}

/// `Q(eps) = (1 - (eps/eps0)^2)^{1/(1-s)}` for `s < 1`.
pub fn q_factor(eps: f64, eps0: f64, s: f64) -> f64 {
    (1.0 - (eps / eps0).powi(2)).max(0.0).powf(1.0 / (1.0 - s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prediction {
    Bounded,
    Linear { n: f64, q: f64 },
    LogLinear { ln_n: f64 },
}

impl Prediction {
    /// Predicted `n` on its natural scale, if the regime gives one.
    pub fn value(&self) -> Option<f64> {
        match *self {
            Prediction::Bounded => None,
            Prediction::Linear { n, .. } => Some(n),
            Prediction::LogLinear { ln_n } => Some(ln_n.exp()),
        }
    }
}

pub fn predicted_n(regime: &KzRegime, d: u64, eps: f64) -> Result<Prediction> {
    let upper = if regime.case_id == 1 { 1.0 } else { regime.eps0 };
    if !(eps > 0.0 && eps < upper) {
        return Err(Error::OutOfDomain {
            name: "eps",
            value: eps,
            domain: if regime.case_id == 1 { "(0, 1)" } else { "(0, eps0)" },
        });
    }
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(match regime.case_id {
        1 => Prediction::Bounded,
        2 => {
            let q = q_factor(eps, regime.eps0, regime.s);
            Prediction::Linear {
                n: 2.0 * q * d as f64,
                q,
            }
        }
        _ => Prediction::LogLinear {
            ln_n: (1.0 - (eps / regime.eps0).powi(2)) * (d as f64).ln(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub d: u64,
    pub n_computed: u64,
    pub n_predicted: Option<f64>,
    /// `n_computed / n_predicted` (case 2) or `ln n_computed / ln n_predicted` (case 3).
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub regime: KzRegime,
    pub eps: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Case 1: whether `n` is the same at the two largest grid points.
    pub fn stabilized(&self) -> bool {
        matches!(self.rows.as_slice(), [.., a, b] if a.n_computed == b.n_computed)
    }
}

/// Documented acceptance band for the case-2 ratio at the largest probed `d`.
pub const LINEAR_BAND: (f64, f64) = (0.8, 1.25);

pub fn compare(family: &ParameterFamily, d_grid: &[u64], eps: f64) -> Result<ConvergenceTable> {
    let regime = match classify(family) {
        Classification::Applicable(r) => r,
        Classification::NotApplicable { reason } => return Err(Error::Precondition(reason)),
    };
    if let Some(&d) = d_grid.first() {
        predicted_n(&regime, d, eps)?;
    }
    let rows = d_grid
        .par_iter()
        .map(|&d| {
            let pred = predicted_n(&regime, d, eps)?;
            let n = info_complexity(family, d, eps, Criterion::Nor, &ComplexityOptions::default())?.n;
            let ratio = match pred {
                Prediction::Bounded => None,
                Prediction::Linear { n: p, .. } => Some(n as f64 / p),
                Prediction::LogLinear { ln_n } => Some((n as f64).ln() / ln_n),
            };
            Ok(ConvergenceRow {
                d,
                n_computed: n,
                n_predicted: pred.value(),
                ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { regime, eps, rows })
}
