//! Decay indicators `A_*`, `B_*`, strong polynomial tractability verdicts and
//! exponents, and tau-sum witness scans.
//!
//! `A_* = liminf ln(1/beta_d) / ln d` and `B_* = liminf ln(alpha_d/beta_d) / ln d`.
//! Under the absolute criterion the field is SPT iff `A_* > 1`, with exponent
//! `max{2/(A_*-1), 2/(sigma_1-1)}`. Under the normalized criterion the same holds
//! when `alpha_j <= c beta_j`; when instead `r_j = alpha_j/beta_j` is non-decreasing
//! with `r_1 > 0` and `sum_{j<=d} alpha_j <= c d alpha_d`, it is SPT iff `B_* > 0`
//! with exponent `max{2/B_*, 2/(sigma_1-1)}`. Polynomial tractability always holds.

use std::f64::EPSILON;

use serde::Serialize;

use crate::complexity::Criterion;
use crate::error::{Error, Result};
use crate::params::{Clause, ParameterFamily, Rule, Sequence, Validation};
use crate::special::DEFAULT_TOL;
use crate::spectrum::TraceAccumulator;

/// How a liminf was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    /// Infimum over a finite grid; `stabilized` when the last two grid values agree
    /// to `1e-3` relative.
    Empirical { stabilized: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    /// May be `+inf` or `-inf`.
    pub value: f64,
    pub provenance: Provenance,
}

impl LimitEstimate {
    fn analytic(value: f64) -> Self {
        LimitEstimate {
            value,
            provenance: Provenance::Analytic,
        }
    }

    pub fn is_analytic(&self) -> bool {
        self.provenance == Provenance::Analytic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Analytic,
    Empirical(Vec<u64>),
}

/// `c j^{pow} e^{exp j}` asymptotics of a closed-form rule. `exact` when the rule is
/// exactly of that shape (so monotonicity can be read off the exponents).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Growth {
    pow: f64,
    exp: f64,
    exact: bool,
}

/// `None` for a rule that is identically zero.
fn growth(rule: &Rule, seq: Sequence) -> Result<Option<Growth>> {
    let g = |pow, exp, exact| Ok(Some(Growth { pow, exp, exact }));
    match *rule {
        Rule::Const { value } if value == 0.0 => Ok(None),
        Rule::Const { .. } => g(0.0, 0.0, true),
        Rule::Power { c, .. } if c == 0.0 => Ok(None),
        Rule::Power { s, .. } => g(-s, 0.0, true),
        Rule::Exponential { c, .. } if c == 0.0 => Ok(None),
        Rule::Exponential { rho, .. } => g(0.0, rho.ln(), true),
        Rule::Affine { a, b } if a == 0.0 && b == 0.0 => Ok(None),
        Rule::Affine { b, .. } if b == 0.0 => g(0.0, 0.0, true),
        Rule::Affine { b, .. } if b > 0.0 => g(1.0, 0.0, false),
        _ => Err(Error::AnalyticUnsupported {
            seq,
            kind: rule.kind(),
        }),
    }
}

/// `lim ln(f_d) / ln d` for `f ~ c d^pow e^{exp d}`.
fn log_rate(g: Growth) -> f64 {
    if g.exp > 0.0 {
        f64::INFINITY
    } else if g.exp < 0.0 {
        f64::NEG_INFINITY
    } else {
        g.pow
    }
}

fn ratio_growth(num: Growth, den: Growth) -> Growth {
    Growth {
        pow: num.pow - den.pow,
        exp: num.exp - den.exp,
        exact: num.exact && den.exact,
    }
}

/// 1-2-5 grid from 2 up to `min(cap, d_max)`.
pub fn default_grid(family: &ParameterFamily, cap: u64) -> Vec<u64> {
    let top = family.d_max().map_or(cap, |m| m.min(cap));
    let mut out = vec![];
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let d = m * decade;
            if d > top {
                break 'outer;
            }
            if d >= 2 {
                out.push(d);
            }
        }
        decade *= 10;
    }
    if out.last() != Some(&top) && top >= 2 {
        out.push(top);
    }
    out
}

fn empirical(grid: &[u64], f: impl Fn(u64) -> Result<f64>) -> Result<LimitEstimate> {
    let mut ds: Vec<u64> = grid.iter().copied().filter(|&d| d >= 2).collect();
    ds.sort_unstable();
    ds.dedup();
    if ds.is_empty() {
        return Err(Error::Precondition("empirical grid needs some d >= 2".into()));
    }
    let vals = ds
        .iter()
        .map(|&d| f(d).map(|x| x / (d as f64).ln()))
        .collect::<Result<Vec<_>>>()?;
    let inf = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let stabilized = match vals.as_slice() {
        [.., a, b] => (a - b).abs() <= 1e-3 * a.abs().max(b.abs()).max(1e-3),
        _ => false,
    };
    Ok(LimitEstimate {
        value: inf,
        provenance: Provenance::Empirical { stabilized },
    })
}

pub fn a_star(family: &ParameterFamily, mode: &Mode) -> Result<LimitEstimate> {
    match mode {
        Mode::Analytic => {
            let g = growth(&family.beta, Sequence::Beta)?.expect("beta_j > 0");
            Ok(LimitEstimate::analytic(-log_rate(g)))
        }
        Mode::Empirical(grid) => empirical(grid, |d| Ok(-family.beta(d)?.ln())),
    }
}

pub fn b_star(family: &ParameterFamily, mode: &Mode) -> Result<LimitEstimate> {
    match mode {
        Mode::Analytic => {
            let b = growth(&family.beta, Sequence::Beta)?.expect("beta_j > 0");
            let a = growth(&family.alpha, Sequence::Alpha)?.ok_or(Error::ZeroAlpha { j: 1 })?;
            Ok(LimitEstimate::analytic(log_rate(ratio_growth(a, b))))
        }
        Mode::Empirical(grid) => empirical(grid, |d| {
            let a = family.alpha(d)?;
            if a == 0.0 {
                return Err(Error::ZeroAlpha { j: d });
            }
            Ok((a / family.beta(d)?).ln())
        }),
    }
}

/// Analytic value when the rules allow it, otherwise the empirical estimate.
fn best(
    f: impl Fn(&ParameterFamily, &Mode) -> Result<LimitEstimate>,
    family: &ParameterFamily,
    grid: &[u64],
) -> Result<LimitEstimate> {
    match f(family, &Mode::Analytic) {
        Err(Error::AnalyticUnsupported { .. }) => f(family, &Mode::Empirical(grid.to_vec())),
        other => other,
    }
}

/// The hypothesis set a verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// Absolute criterion; no side conditions.
    AbsDecay,
    /// Normalized criterion with `alpha_j <= c beta_j`.
    NorBoundedRatio,
    /// Normalized criterion with `r_j` non-decreasing, `r_1 > 0`, `sum alpha_j <= c d alpha_d`.
    NorGrowingRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    /// `None` when undecidable.
    pub holds: Option<bool>,
    pub analytic: bool,
    /// Largest value of the relevant ratio over the probe range.
    pub constant: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spt {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TractabilityVerdict {
    pub criterion: Criterion,
    pub pt: bool,
    pub qpt: bool,
    pub uwt: bool,
    pub wt: bool,
    pub spt: Spt,
    pub a_star: LimitEstimate,
    pub b_star: Option<LimitEstimate>,
    /// Defined only when `spt` is true.
    pub exponent: Option<f64>,
    pub sigma_1: f64,
    /// Hypothesis sets that produced the verdict.
    pub fired: Vec<Hypothesis>,
    pub hypothesis_report: Vec<HypothesisCheck>,
}

/// `max{2/(A_*-1), 2/(sigma_1-1)}`, for `A_* > 1`.
pub fn decay_exponent(a_star: f64, sigma_1: f64) -> f64 {
    (2.0 / (a_star - 1.0)).max(2.0 / (sigma_1 - 1.0))
}

/// `max{2/B_*, 2/(sigma_1-1)}`, for `B_* > 0`.
pub fn ratio_exponent(b_star: f64, sigma_1: f64) -> f64 {
    (2.0 / b_star).max(2.0 / (sigma_1 - 1.0))
}

/// Heuristic boundedness of a supremum along a grid: relative growth below `1e-6`
/// over the last decade, or decade-to-decade increments shrinking by at least a
/// factor 0.8.
pub fn appears_bounded(grid: &[u64], values: &[f64]) -> bool {
    let Some(&last) = grid.last() else {
        return false;
    };
    let sup_upto = |limit: f64| {
        grid.iter()
            .zip(values)
            .filter(|(&d, _)| d as f64 <= limit * (1.0 + 1e-12))
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let last = last as f64;
    let (s0, s1, s2) = (sup_upto(last / 100.0), sup_upto(last / 10.0), sup_upto(last));
    if !s1.is_finite() || !s2.is_finite() {
        return false;
    }
    if s2 - s1 <= 1e-6 * s1.abs() {
        return true;
    }
    s0.is_finite() && s1 > s0 && (s2 - s1) <= 0.8 * (s1 - s0)
}

fn ratio_bounded_check(family: &ParameterFamily, grid: &[u64]) -> Result<HypothesisCheck> {
    let probe = *grid.last().unwrap_or(&1);
    let constant = Some(family.max_ratio(probe)?);
    let analytic = (|| -> Result<Option<bool>> {
        let b = growth(&family.beta, Sequence::Beta)?.expect("beta_j > 0");
        let Some(a) = growth(&family.alpha, Sequence::Alpha)? else {
            return Ok(Some(true));
        };
        let r = ratio_growth(a, b);
        Ok(Some(r.exp < 0.0 || (r.exp == 0.0 && r.pow <= 0.0)))
    })();
    let (holds, analytic, note) = match analytic {
        Ok(h) => (h, true, "closed-form growth of alpha_j/beta_j".to_string()),
        Err(Error::AnalyticUnsupported { .. }) => {
            let rs = grid.iter().map(|&d| family.ratio_r(d)).collect::<Result<Vec<_>>>()?;
            (
                Some(appears_bounded(grid, &rs)),
                false,
                format!("running max of alpha_j/beta_j over d <= {probe}"),
            )
        }
        Err(e) => return Err(e),
    };
    Ok(HypothesisCheck {
        hypothesis: Hypothesis::NorBoundedRatio,
        holds,
        analytic,
        constant,
        note,
    })
}

fn growing_ratio_check(family: &ParameterFamily, grid: &[u64]) -> Result<HypothesisCheck> {
    let probe = *grid.last().unwrap_or(&1);
    let fail = |note: String| HypothesisCheck {
        hypothesis: Hypothesis::NorGrowingRatio,
        holds: Some(false),
        analytic: false,
        constant: None,
        note,
    };
    let alpha_g = match growth(&family.alpha, Sequence::Alpha) {
        Ok(None) => return Ok(HypothesisCheck {
            analytic: true,
            ..fail("alpha_j = 0, so r_1 = 0".into())
        }),
        Ok(Some(g)) => Some(g),
        Err(Error::AnalyticUnsupported { .. }) => None,
        Err(e) => return Err(e),
    };
    let beta_g = match growth(&family.beta, Sequence::Beta) {
        Ok(g) => g,
        Err(Error::AnalyticUnsupported { .. }) => None,
        Err(e) => return Err(e),
    };

    // r_j non-decreasing with r_1 > 0
    let monotone_analytic = match (alpha_g, beta_g) {
        (Some(a), Some(b)) if family.alpha(1)? > 0.0 => {
            let r = ratio_growth(a, b);
            if !a.exact && a.pow > 0.0 && b.exact && b.pow <= 0.0 && b.exp <= 0.0 {
                Some(true)
            } else if r.exact && r.pow >= 0.0 && r.exp >= 0.0 {
                Some(true)
            } else if r.exact && r.pow <= 0.0 && r.exp <= 0.0 {
                Some(false)
            } else {
                None
            }
        }
        _ => None,
    };
    let (monotone, mut analytic) = match monotone_analytic {
        Some(m) => (m, true),
        None => (family.validate_ratio_monotone(probe)?.is_pass(), false),
    };
    if !monotone {
        return Ok(HypothesisCheck {
            analytic,
            ..fail(format!("r_j = alpha_j/beta_j not non-decreasing with r_1 > 0 (d <= {probe})"))
        });
    }

    // sum_{j<=d} alpha_j <= c d alpha_d
    let mut ratios = Vec::with_capacity(grid.len());
    let mut sum = 0.0;
    let mut gi = 0;
    for d in 1..=probe {
        let a = family.alpha(d)?;
        sum += a;
        if gi < grid.len() && grid[gi] == d {
            ratios.push(if a > 0.0 { sum / (d as f64 * a) } else { f64::INFINITY });
            gi += 1;
        }
    }
    let constant = family.sum_ratio_constant(probe)?;
    let sum_ok = match alpha_g {
        Some(a) => a.exp > 0.0 || (a.exp == 0.0 && a.pow > -1.0),
        None => {
            analytic = false;
            appears_bounded(grid, &ratios)
        }
    };
    Ok(HypothesisCheck {
        hypothesis: Hypothesis::NorGrowingRatio,
        holds: Some(sum_ok),
        analytic,
        constant: Some(constant),
        note: if sum_ok {
            "r_j non-decreasing and sum alpha_j / (d alpha_d) bounded".into()
        } else {
            format!("sum alpha_j / (d alpha_d) unbounded (max {constant:.6e} for d <= {probe})")
        },
    })
}

fn from_a(a: &LimitEstimate, sigma_1: f64) -> (Spt, Option<f64>) {
    if a.value > 1.0 {
        (Spt::True, Some(decay_exponent(a.value, sigma_1)))
    } else {
        (Spt::False, None)
    }
}

pub fn spt_verdict(family: &ParameterFamily, crit: Criterion) -> Result<TractabilityVerdict> {
    let mut grid = default_grid(family, 100_000);
    let probe = grid.last().copied().unwrap_or(1);
    // closed-form beta_j can underflow to zero long before the grid ends
    if let Validation::Fail {
        j,
        clause: Clause::BetaNotPositive,
    } = family.validate(probe)?
    {
        if family.beta.is_closed_form() && j > 2 {
            grid.retain(|&d| d < j);
            grid.push(j - 1);
            grid.dedup();
        }
    }
    spt_verdict_on(family, crit, &grid)
}

/// As [`spt_verdict`], with an explicit probe grid for the empirical checks.
pub fn spt_verdict_on(family: &ParameterFamily, crit: Criterion, grid: &[u64]) -> Result<TractabilityVerdict> {
    let probe = grid.iter().copied().max().unwrap_or(1).max(1);
    family.ensure_valid(probe)?;
    let sigma_1 = family.sigma(1)?;
    let a = best(a_star, family, grid)?;
    let b = match best(b_star, family, grid) {
        Ok(b) => Some(b),
        Err(Error::ZeroAlpha { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut report = vec![];
    let mut fired = vec![];
    let (spt, exponent) = match crit {
        Criterion::Abs => {
            fired.push(Hypothesis::AbsDecay);
            report.push(HypothesisCheck {
                hypothesis: Hypothesis::AbsDecay,
                holds: Some(true),
                analytic: true,
                constant: None,
                note: "no side conditions".into(),
            });
            from_a(&a, sigma_1)
        }
        Criterion::Nor => {
            let bounded = ratio_bounded_check(family, grid)?;
            let growing = growing_ratio_check(family, grid)?;
            let mut outcomes = vec![];
            if bounded.holds == Some(true) {
                fired.push(Hypothesis::NorBoundedRatio);
                outcomes.push(from_a(&a, sigma_1));
            }
            if growing.holds == Some(true) {
                if let Some(b) = &b {
                    fired.push(Hypothesis::NorGrowingRatio);
                    outcomes.push(if b.value > 0.0 {
                        (Spt::True, Some(ratio_exponent(b.value, sigma_1)))
                    } else {
                        (Spt::False, None)
                    });
                }
            }
            report.push(bounded);
            report.push(growing);
            match outcomes.as_slice() {
                [] => (Spt::Unknown, None),
                [one] => *one,
                [x, y] if x.0 == y.0 => {
                    let e = match (x.1, y.1) {
                        (Some(p), Some(q)) => Some(p.min(q)),
                        _ => None,
                    };
                    (x.0, e)
                }
                _ => {
                    report.push(HypothesisCheck {
                        hypothesis: Hypothesis::NorGrowingRatio,
                        holds: None,
                        analytic: false,
                        constant: None,
                        note: "both hypothesis sets hold but their verdicts disagree".into(),
                    });
                    (Spt::Unknown, None)
                }
            }
        }
    };
    Ok(TractabilityVerdict {
        criterion: crit,
        pt: true,
        qpt: true,
        uwt: true,
        wt: true,
        spt,
        a_star: a,
        b_star: b,
        exponent,
        sigma_1,
        fired,
        hypothesis_report: report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauRow {
    pub tau: f64,
    pub d: u64,
    /// `(tau-trace)^{1/tau} d^{-1/tau}` (absolute criterion only).
    pub pt_witness: Option<f64>,
    /// `(tau-trace)^{1/tau}` (absolute) or `(tau-trace)^{1/tau} / trace` (normalized).
    pub spt_witness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSummary {
    pub tau: f64,
    pub pt_sup: Option<f64>,
    pub pt_bounded: Option<bool>,
    pub spt_sup: f64,
    /// Grid point where the supremum is attained.
    pub spt_argmax: u64,
    /// Heuristic plateau decision, see [`appears_bounded`].
    pub spt_bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauScan {
    pub criterion: Criterion,
    pub rows: Vec<TauRow>,
    pub summary: Vec<TauSummary>,
}

/// Witness suprema of the tau-sum criteria over `d_grid`, for each `tau`.
pub fn tau_criterion_scan(
    family: &ParameterFamily,
    crit: Criterion,
    taus: &[f64],
    d_grid: &[u64],
) -> Result<TauScan> {
    let mut grid = d_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.first() == Some(&0) {
        return Err(Error::ZeroDimension);
    }
    let mut acc = TraceAccumulator::new(family, taus, DEFAULT_TOL)?;
    let mut rows = Vec::with_capacity(grid.len() * taus.len());
    let mut per_tau: Vec<Vec<(f64, Option<f64>)>> = vec![vec![]; taus.len()];
    for &d in &grid {
        acc.extend_to(d)?;
        let trace = acc.trace().value;
        for (i, &tau) in taus.iter().enumerate() {
            let root = acc.tau_trace(i).value.powf(1.0 / tau);
            let (pt, spt) = match crit {
                Criterion::Abs => (Some(root * (d as f64).powf(-1.0 / tau)), root),
                Criterion::Nor => (None, root / trace),
            };
            per_tau[i].push((spt, pt));
        }
    }
    for (i, &tau) in taus.iter().enumerate() {
        for (gi, &d) in grid.iter().enumerate() {
            let (spt, pt) = per_tau[i][gi];
            rows.push(TauRow {
                tau,
                d,
                pt_witness: pt,
                spt_witness: spt,
            });
        }
    }
    let summary = taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let spt: Vec<f64> = per_tau[i].iter().map(|x| x.0).collect();
            let (argmax, sup) = spt
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (gi, &v)| if v > bv { (gi, v) } else { (bi, bv) });
            let pt: Option<Vec<f64>> = per_tau[i].iter().map(|x| x.1).collect();
            TauSummary {
                tau,
                pt_sup: pt.as_ref().map(|p| p.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                pt_bounded: pt.as_ref().map(|p| appears_bounded(&grid, p)),
                spt_sup: sup,
                spt_argmax: grid.get(argmax).copied().unwrap_or(0),
                spt_bounded: appears_bounded(&grid, &spt),
            }
        })
        .collect();
    Ok(TauScan {
        criterion: crit,
        rows,
        summary,
    })
}

/// Smallest `tau` for which `2 tau / (1 - tau) > p`, i.e. `p / (2 + p)`.
pub fn tau_threshold(p: f64) -> f64 {
    p / (2.0 + p) + EPSILON
}
