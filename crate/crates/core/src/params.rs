//! Parameter sequences `alpha_j`, `beta_j`, `sigma_j` of an additive Korobov field.
//!
//! Every coordinate `j` carries a marginal Korobov kernel
//! `alpha_j + 2 beta_j sum_k k^{-sigma_j} cos(2 pi k (x - y))`. A family is the
//! triple of rules producing those sequences. Closed-form rules are evaluated on
//! demand and never materialized, so a family can be queried at `d = 10^6` and
//! beyond without allocating.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible `sigma_1`; also the pole guard used by the zeta kernel.
pub const POLE_GUARD: f64 = 1e-9;

/// Which of the three sequences a rule feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sequence {
    Alpha,
    Beta,
    Sigma,
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sequence::Alpha => "alpha",
            Sequence::Beta => "beta",
            Sequence::Sigma => "sigma",
        })
    }
}

/// A rule producing the `j`-th term of a sequence, `j >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Rule {
    /// `value` for every `j`.
    Const { value: f64 },
    /// `c * j^{-s}`.
    Power { c: f64, s: f64 },
    /// `c * rho^j`.
    Exponential { c: f64, rho: f64 },
    /// `a + b * j`.
    Affine { a: f64, b: f64 },
    /// Explicit finite table; `values[0]` is the term for `j = 1`.
    Table { values: Vec<f64> },
}

impl Rule {
    pub fn constant(value: f64) -> Self {
        Rule::Const { value }
    }

    pub fn power(c: f64, s: f64) -> Self {
        Rule::Power { c, s }
    }

    pub fn exponential(c: f64, rho: f64) -> Self {
        Rule::Exponential { c, rho }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Rule::Affine { a, b }
    }

    pub fn table(values: Vec<f64>) -> Self {
        Rule::Table { values }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Rule::Const { .. } => "const",
            Rule::Power { .. } => "power",
            Rule::Exponential { .. } => "exponential",
            Rule::Affine { .. } => "affine",
            Rule::Table { .. } => "table",
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Rule::Table { .. })
    }

    /// Number of terms available, `None` for closed forms.
    pub fn len(&self) -> Option<u64> {
        match self {
            Rule::Table { values } => Some(values.len() as u64),
            _ => None,
        }
    }

    pub fn eval(&self, seq: Sequence, j: u64) -> Result<f64> {
        debug_assert!(j >= 1);
        let x = j as f64;
        let v = match self {
            Rule::Const { value } => *value,
            Rule::Power { c, s } => c * x.powf(-s),
            Rule::Exponential { c, rho } => c * rho.powf(x),
            Rule::Affine { a, b } => a + b * x,
            Rule::Table { values } => *values.get((j - 1) as usize).ok_or(Error::TableExhausted {
                seq,
                j,
                len: values.len(),
            })?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { seq, j })
        }
    }
}

/// The condition a family failed during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    AlphaNegative,
    BetaNotPositive,
    BetaAboveOne,
    BetaIncreasing,
    SigmaAtPole,
    SigmaDecreasing,
    RatioNotPositive,
    RatioDecreasing,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::AlphaNegative => "alpha_j >= 0 violated",
            Clause::BetaNotPositive => "beta_j > 0 violated",
            Clause::BetaAboveOne => "beta_j <= 1 violated",
            Clause::BetaIncreasing => "beta_j non-increasing violated",
            Clause::SigmaAtPole => "sigma_1 > 1 violated",
            Clause::SigmaDecreasing => "sigma_j non-decreasing violated",
            Clause::RatioNotPositive => "r_1 = alpha_1/beta_1 > 0 violated",
            Clause::RatioDecreasing => "r_j = alpha_j/beta_j non-decreasing violated",
        })
    }
}

/// Outcome of a validation pass that managed to evaluate every term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Validation {
    Pass,
    Fail { j: u64, clause: Clause },
}

impl Validation {
    pub fn is_pass(&self) -> bool {
        matches!(self, Validation::Pass)
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            Validation::Pass => Ok(()),
            Validation::Fail { j, clause } => Err(Error::InvalidFamily { j, clause }),
        }
    }
}

/// The sequences `(alpha_j, beta_j, sigma_j)` of an additive Korobov field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterFamily {
    pub alpha: Rule,
    pub beta: Rule,
    pub sigma: Rule,
}

impl ParameterFamily {
    pub fn new(alpha: Rule, beta: Rule, sigma: Rule) -> Self {
        ParameterFamily { alpha, beta, sigma }
    }

    /// The same family with every `alpha_j` replaced by zero.
    pub fn zero_alpha(&self) -> Self {
        ParameterFamily {
            alpha: Rule::constant(0.0),
            ..self.clone()
        }
    }

    /// Largest dimension the family can be evaluated at (`None` = unbounded).
    pub fn d_max(&self) -> Option<u64> {
        [&self.alpha, &self.beta, &self.sigma]
            .iter()
            .filter_map(|r| r.len())
            .min()
    }

    pub fn is_closed_form(&self) -> bool {
        self.alpha.is_closed_form() && self.beta.is_closed_form() && self.sigma.is_closed_form()
    }

    pub fn alpha(&self, j: u64) -> Result<f64> {
        self.alpha.eval(Sequence::Alpha, j)
    }

    pub fn beta(&self, j: u64) -> Result<f64> {
        self.beta.eval(Sequence::Beta, j)
    }

    pub fn sigma(&self, j: u64) -> Result<f64> {
        self.sigma.eval(Sequence::Sigma, j)
    }

    pub fn check_dimension(&self, d: u64) -> Result<()> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        match self.d_max() {
            Some(d_max) if d > d_max => Err(Error::DimensionTooLarge { d, d_max }),
            _ => Ok(()),
        }
    }

    /// Checks the ordering conditions on coordinates `1..=d`.
    ///
    /// Evaluation failures (a table queried past its end, a non-finite term) come
    /// back as `Err`; a well-defined family that breaks an ordering condition comes
    /// back as `Ok(Validation::Fail { .. })` naming the first offending index.
    pub fn validate(&self, d: u64) -> Result<Validation> {
        self.check_dimension(d)?;
        let mut prev_beta = f64::INFINITY;
        let mut prev_sigma = f64::NEG_INFINITY;
        for j in 1..=d {
            let a = self.alpha(j)?;
            let b = self.beta(j)?;
            let s = self.sigma(j)?;
            let fail = |clause| Ok(Validation::Fail { j, clause });
            if a < 0.0 {
                return fail(Clause::AlphaNegative);
            }
            if b <= 0.0 {
                return fail(Clause::BetaNotPositive);
            }
            if b > 1.0 {
                return fail(Clause::BetaAboveOne);
            }
            if b > prev_beta {
                return fail(Clause::BetaIncreasing);
            }
            if j == 1 && s <= 1.0 + POLE_GUARD {
                return fail(Clause::SigmaAtPole);
            }
            if s < prev_sigma {
                return fail(Clause::SigmaDecreasing);
            }
            prev_beta = b;
            prev_sigma = s;
        }
        Ok(Validation::Pass)
    }

    /// `validate` collapsed into a `Result`, for callers that need a valid family.
    pub fn ensure_valid(&self, d: u64) -> Result<()> {
        self.validate(d)?.into_result()
    }

    /// `r_j = alpha_j / beta_j`.
    pub fn ratio_r(&self, j: u64) -> Result<f64> {
        Ok(self.alpha(j)? / self.beta(j)?)
    }

    /// Opt-in check that `0 < r_1 <= r_2 <= ... <= r_d`.
    ///
    /// A relative slack of `1e-12` absorbs rounding in families where `r_j` is
    /// mathematically constant.
    pub fn validate_ratio_monotone(&self, d: u64) -> Result<Validation> {
        self.check_dimension(d)?;
        let mut prev = 0.0;
        for j in 1..=d {
            let r = self.ratio_r(j)?;
            if j == 1 && r <= 0.0 {
                return Ok(Validation::Fail {
                    j,
                    clause: Clause::RatioNotPositive,
                });
            }
            if r < prev * (1.0 - 1e-12) {
                return Ok(Validation::Fail {
                    j,
                    clause: Clause::RatioDecreasing,
                });
            }
            prev = r;
        }
        Ok(Validation::Pass)
    }

    /// Empirical constant `max_{d <= d_probe} sum_{j<=d} alpha_j / (d alpha_d)`.
    ///
    /// Returns `+inf` when some `alpha_d = 0` follows a positive partial sum.
    pub fn sum_ratio_constant(&self, d_probe: u64) -> Result<f64> {
        self.check_dimension(d_probe)?;
        let mut sum = 0.0;
        let mut worst: f64 = 0.0;
        for d in 1..=d_probe {
            let a = self.alpha(d)?;
            sum += a;
            let ratio = if sum == 0.0 {
                0.0
            } else if a == 0.0 {
                f64::INFINITY
            } else {
                sum / (d as f64 * a)
            };
            worst = worst.max(ratio);
        }
        Ok(worst)
    }

    /// Empirical constant `max_{j <= d_probe} alpha_j / beta_j`.
    pub fn max_ratio(&self, d_probe: u64) -> Result<f64> {
        self.check_dimension(d_probe)?;
        let mut worst: f64 = 0.0;
        for j in 1..=d_probe {
            worst = worst.max(self.ratio_r(j)?);
        }
        Ok(worst)
    }
}
