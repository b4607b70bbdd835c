//! Certified evaluation of `zeta(p)` and of power tails `sum_{k>K} k^{-p}` for real `p > 1`.
//!
//! Both are computed as a short direct sum followed by an Euler-Maclaurin tail
//! with correction terms through `B_10`. For `f(x) = x^{-p}` every derivative has
//! constant sign, so the Euler-Maclaurin remainder after the `B_10` term is
//! bounded by the magnitude of the `B_12` term; the start index of the tail is
//! chosen so that this bound meets the requested tolerance. The returned
//! [`BoundedValue`] also carries a floating-point rounding allowance.

use std::f64::EPSILON;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::POLE_GUARD;

/// Relative allowance for a short chain of correctly rounded operations.
pub(crate) const SLOP: f64 = 16.0 * EPSILON;

/// Relative error of a single computed eigenvalue `beta / k^sigma` (`powf` plus a division).
pub(crate) const EIGEN_REL: f64 = 2.0 * EPSILON;

/// Default per-evaluation target for Euler-Maclaurin remainders.
pub const DEFAULT_TOL: f64 = 1e-14;

/// A number with a rigorous absolute error bound: the quantity it stands for lies in
/// `[value - abs_error, value + abs_error]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedValue {
    pub value: f64,
    pub abs_error: f64,
}

impl BoundedValue {
    pub fn new(value: f64, abs_error: f64) -> Self {
        debug_assert!(abs_error >= 0.0 && abs_error.is_finite(), "bad bound {abs_error}");
        BoundedValue { value, abs_error }
    }

    pub fn exact(value: f64) -> Self {
        BoundedValue::new(value, 0.0)
    }

    pub fn zero() -> Self {
        BoundedValue::exact(0.0)
    }

    /// Smallest value consistent with the bound.
    pub fn lo(&self) -> f64 {
        self.value - self.abs_error
    }

    /// Largest value consistent with the bound.
    pub fn hi(&self) -> f64 {
        self.value + self.abs_error
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    /// True when the two brackets intersect.
    pub fn overlaps(&self, other: &BoundedValue) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }

    pub fn scale(self, c: f64) -> Self {
        let value = c * self.value;
        BoundedValue::new(value, c.abs() * self.abs_error + EPSILON * value.abs())
    }

    pub fn mul(self, other: BoundedValue) -> Self {
        let value = self.value * other.value;
        BoundedValue::new(
            value,
            self.value.abs() * other.abs_error
                + other.value.abs() * self.abs_error
                + self.abs_error * other.abs_error
                + EPSILON * value.abs(),
        )
    }

    /// Quotient of two brackets with strictly positive lower ends.
    pub fn div(self, other: BoundedValue) -> Self {
        debug_assert!(other.lo() > 0.0);
        let value = self.value / other.value;
        let lo = self.lo() / other.hi();
        let hi = self.hi() / other.lo();
        BoundedValue::new(
            value,
            (value - lo).max(hi - value).max(0.0) + 2.0 * EPSILON * value.abs(),
        )
    }

    /// Square root, with the lower end clamped at zero.
    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    /// `x^t` for `t > 0` on a non-negative quantity (the map is monotone).
    pub fn powf(self, t: f64) -> Self {
        let value = self.value.max(0.0).powf(t);
        let lo = self.lo().max(0.0).powf(t);
        let hi = self.hi().max(0.0).powf(t);
        BoundedValue::new(
            value,
            (value - lo).max(hi - value).max(0.0) + 2.0 * EPSILON * value.max(hi),
        )
    }
}

impl Add for BoundedValue {
    type Output = BoundedValue;

    fn add(self, rhs: BoundedValue) -> BoundedValue {
        let value = self.value + rhs.value;
        BoundedValue::new(value, self.abs_error + rhs.abs_error + EPSILON * value.abs())
    }
}

impl Sub for BoundedValue {
    type Output = BoundedValue;

    fn sub(self, rhs: BoundedValue) -> BoundedValue {
        let value = self.value - rhs.value;
        BoundedValue::new(value, self.abs_error + rhs.abs_error + EPSILON * value.abs())
    }
}

impl Sum for BoundedValue {
    fn sum<I: Iterator<Item = BoundedValue>>(iter: I) -> BoundedValue {
        let mut value = NeumaierSum::new();
        let mut err = 0.0;
        for b in iter {
            value.add(b.value);
            err += b.abs_error;
        }
        let total = value.bounded(0.0);
        BoundedValue::new(total.value, total.abs_error + err * (1.0 + EPSILON))
    }
}

impl fmt::Display for BoundedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.1e}", self.value, self.abs_error)
    }
}

/// Kahan-Babuska-Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    count: u64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs_sum += x.abs();
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// The sum with a bound covering accumulation error plus a relative error of
    /// `term_rel` in each summand.
    pub fn bounded(&self, term_rel: f64) -> BoundedValue {
        let n = self.count as f64;
        let rel = term_rel + 2.0 * EPSILON + n * EPSILON * EPSILON;
        BoundedValue::new(self.value(), self.abs_sum * rel)
    }
}

// B_{2i} / (2i)! for i = 1..=6.
const EM_COEFFS: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

fn check_pole(p: f64) -> Result<()> {
    if p.is_nan() || p <= 1.0 + POLE_GUARD {
        Err(Error::PoleProximity { p })
    } else {
        Ok(())
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name: "tol",
            value: tol,
            domain: "(0, inf)",
        })
    }
}

/// Start index `M` for which the `B_12` remainder bound drops below `target`.
fn em_start(p: f64, target: f64) -> f64 {
    let ln_c = EM_COEFFS[5].abs().ln();
    let ln_rising: f64 = (0..11).map(|i| (p + i as f64).ln()).sum();
    let m = ((ln_c + ln_rising - target.ln()) / (p + 11.0)).exp();
    m.ceil().max(2.0)
}

/// `sum_{k >= m} k^{-p}` via Euler-Maclaurin: `(value, remainder_bound, magnitude)`.
fn em_tail(m: f64, p: f64) -> (f64, f64, f64) {
    let base = m.powf(-p);
    let integral = m * base / (p - 1.0);
    let half = 0.5 * base;
    let mut acc = integral + half;
    let mut magnitude = integral.abs() + half.abs();
    // t_i = p (p+1) ... (p+2i-2) m^{-p-2i+1}
    let mut t = base * p / m;
    for (i, c) in EM_COEFFS[..5].iter().enumerate() {
        let term = c * t;
        acc += term;
        magnitude += term.abs();
        let a = p + (2 * i + 1) as f64;
        t *= a * (a + 1.0) / (m * m);
    }
    let remainder = (EM_COEFFS[5] * t).abs();
    (acc, remainder, magnitude)
}

/// `sum_{k > k0} k^{-p}` with the Euler-Maclaurin remainder pushed below `target`.
///
/// Callers guarantee `p > 1 + POLE_GUARD` and `target > 0`. The bound returned is
/// whatever is achieved: remainder (at most `target`) plus rounding.
pub(crate) fn power_tail(k0: u64, p: f64, target: f64) -> BoundedValue {
    let mut m = em_start(p, target).max(k0 as f64 + 1.0);
    let (mut em, mut rem, mut mag) = em_tail(m, p);
    while rem > target && m < 1e15 {
        m *= 2.0;
        (em, rem, mag) = em_tail(m, p);
    }
    let mut direct = NeumaierSum::new();
    let first = k0 + 1;
    let last = m as u64; // exclusive
    for k in (first..last).rev() {
        direct.add((k as f64).powf(-p));
    }
    let value = direct.value() + em;
    let rounding = SLOP * (direct.value().abs() + mag);
    BoundedValue::new(value, rem + rounding)
}

/// Riemann zeta `zeta(p) = sum_{k>=1} k^{-p}` for real `p > 1`, with `abs_error <= tol`.
pub fn zeta(p: f64, tol: f64) -> Result<BoundedValue> {
    tail_power_sum(0, p, tol)
}

/// `sum_{k=K+1}^inf k^{-p}` with `abs_error <= tol`.
pub fn tail_power_sum(k: u64, p: f64, tol: f64) -> Result<BoundedValue> {
    check_pole(p)?;
    check_tol(tol)?;
    let v = power_tail(k, p, 0.5 * tol);
    if v.abs_error > tol {
        return Err(Error::ToleranceUnattainable {
            tol,
            achieved: v.abs_error,
        });
    }
    Ok(v)
}

/// `sum_{k=1}^K k^{-p}`, summed directly (smallest terms first) for moderate `K`
/// and as `zeta(p) - tail(K)` beyond that.
pub fn partial_power_sum(k: u64, p: f64) -> Result<BoundedValue> {
    if k <= 1 << 20 {
        if p.is_nan() {
            return Err(Error::PoleProximity { p });
        }
        let mut s = NeumaierSum::new();
        for i in (1..=k).rev() {
            s.add((i as f64).powf(-p));
        }
        Ok(s.bounded(EPSILON))
    } else {
        check_pole(p)?;
        Ok(power_tail(0, p, DEFAULT_TOL) - power_tail(k, p, DEFAULT_TOL))
    }
}

/// Memo for `zeta(p)` across runs of equal arguments, which is the common case when
/// walking coordinates of a family with constant or slowly changing `sigma_j`.
#[derive(Debug, Clone)]
pub(crate) struct ZetaMemo {
    target: f64,
    last: Option<(f64, BoundedValue)>,
}

impl ZetaMemo {
    pub(crate) fn new(target: f64) -> Self {
        ZetaMemo { target, last: None }
    }

    pub(crate) fn get(&mut self, p: f64) -> Result<BoundedValue> {
        if let Some((q, v)) = self.last {
            if q == p {
                return Ok(v);
            }
        }
        check_pole(p)?;
        let v = power_tail(0, p, self.target);
        self.last = Some((p, v));
        Ok(v)
    }
}
