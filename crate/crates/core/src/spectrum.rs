//! Eigenvalues of the covariance operator of an additive Korobov field.
//!
//! The operator has one constant eigenfunction with eigenvalue `sum_j alpha_j` and,
//! for each coordinate `j` and frequency `k >= 1`, a cosine/sine pair sharing the
//! eigenvalue `beta_j / k^sigma_j`. This module enumerates that multiset in
//! non-increasing order ([`EigenStream`]), counts it above a level
//! ([`count_at_level`], [`LevelScan`]), and sums it ([`trace`], [`tau_trace`]).
//!
//! Equal eigenvalues are ordered constant first, then by smaller `j`, smaller `k`,
//! and cosine before sine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::EPSILON;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ParameterFamily, POLE_GUARD};
use crate::special::{power_tail, BoundedValue, NeumaierSum, ZetaMemo, EIGEN_REL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

/// Identifies one eigenfunction: the constant, or `sqrt(2) cos/sin(2 pi k x_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EigenLabel {
    Constant,
    Oscillatory { j: u64, k: u64, parity: Parity },
}

impl EigenLabel {
    pub fn osc(j: u64, k: u64, parity: Parity) -> Self {
        EigenLabel::Oscillatory { j, k, parity }
    }

    /// Position among equal eigenvalues; smaller comes first.
    pub fn tie_key(&self) -> (u8, u64, u64, u8) {
        match *self {
            EigenLabel::Constant => (0, 0, 0, 0),
            EigenLabel::Oscillatory { j, k, parity } => (1, j, k, parity as u8),
        }
    }
}

impl fmt::Display for EigenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenLabel::Constant => f.write_str("constant"),
            EigenLabel::Oscillatory { j, k, parity } => {
                let p = match parity {
                    Parity::Cos => "cos",
                    Parity::Sin => "sin",
                };
                write!(f, "({j},{k},{p})")
            }
        }
    }
}

/// The canonical floating-point value of the eigenvalue `beta / k^sigma`.
#[inline]
pub fn oscillatory_eigenvalue(beta: f64, sigma: f64, k: u64) -> f64 {
    beta / (k as f64).powf(sigma)
}

/// The constant-mode eigenvalue `sum_{j<=d} alpha_j`, accumulated left to right.
pub fn constant_eigenvalue(family: &ParameterFamily, d: u64) -> Result<f64> {
    let mut s = NeumaierSum::new();
    for j in 1..=d {
        s.add(family.alpha(j)?);
    }
    Ok(s.value())
}

fn constant_bounded(family: &ParameterFamily, d: u64) -> Result<BoundedValue> {
    let mut s = NeumaierSum::new();
    for j in 1..=d {
        s.add(family.alpha(j)?);
    }
    Ok(s.bounded(EPSILON))
}

/// `#{k >= 1 : beta / k^sigma >= level}`, consistent with [`oscillatory_eigenvalue`].
///
/// The closed form is `floor((beta/level)^{1/sigma})`; when the root lands within
/// `1e-9` of an integer both neighbouring candidates are re-checked against the
/// eigenvalue expression itself.
pub fn coordinate_count(beta: f64, sigma: f64, level: f64) -> u64 {
    if !(beta >= level) {
        return 0;
    }
    let x = (beta / level).powf(1.0 / sigma).min(1e18);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        let r = r as u64;
        if r >= 1 && oscillatory_eigenvalue(beta, sigma, r) >= level {
            r
        } else {
            r.saturating_sub(1).max(1)
        }
    } else {
        x.floor() as u64
    }
}

#[derive(Debug, Clone, Copy)]
struct Head {
    value: f64,
    label: EigenLabel,
    beta: f64,
    sigma: f64,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Head {}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Head {
    // max-heap: larger value first, then smaller tie key
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.label.tie_key().cmp(&self.label.tie_key()))
    }
}

/// Lazy non-increasing enumeration of the eigenvalues of the `d`-dimensional field.
///
/// Coordinates enter the frontier only once the emission level has dropped to
/// their leading eigenvalue `beta_j`, so memory is proportional to the number of
/// coordinates touched so far rather than to `d`. The stream is infinite. A zero
/// constant eigenvalue is never reached (infinitely many positive eigenvalues
/// precede it), so it is not emitted.
#[derive(Debug, Clone)]
pub struct EigenStream {
    family: ParameterFamily,
    d: u64,
    heap: BinaryHeap<Head>,
    next_coord: u64,
    pending: Option<(f64, f64)>,
    emitted_count: u64,
    emitted_sum: NeumaierSum,
}

impl EigenStream {
    pub fn new(family: &ParameterFamily, d: u64) -> Result<Self> {
        family.ensure_valid(d)?;
        let mut heap = BinaryHeap::new();
        let alpha_sum = constant_eigenvalue(family, d)?;
        if alpha_sum > 0.0 {
            heap.push(Head {
                value: alpha_sum,
                label: EigenLabel::Constant,
                beta: 0.0,
                sigma: 0.0,
            });
        }
        Ok(EigenStream {
            pending: Some((family.beta(1)?, family.sigma(1)?)),
            family: family.clone(),
            d,
            heap,
            next_coord: 1,
            emitted_count: 0,
            emitted_sum: NeumaierSum::new(),
        })
    }

    pub fn dimension(&self) -> u64 {
        self.d
    }

    pub fn emitted_count(&self) -> u64 {
        self.emitted_count
    }

    /// Bracket on the sum of everything emitted so far.
    pub fn emitted_sum(&self) -> BoundedValue {
        self.emitted_sum.bounded(EIGEN_REL)
    }

    /// Number of coordinates that have entered the frontier.
    pub fn active_coordinates(&self) -> u64 {
        self.next_coord - 1
    }

    fn refill(&mut self) {
        while let Some((beta, sigma)) = self.pending {
            if self.heap.peek().is_some_and(|h| beta < h.value) {
                break;
            }
            self.heap.push(Head {
                value: beta,
                label: EigenLabel::osc(self.next_coord, 1, Parity::Cos),
                beta,
                sigma,
            });
            self.next_coord += 1;
            self.pending = if self.next_coord <= self.d {
                let j = self.next_coord;
                Some((
                    self.family.beta(j).expect("family validated through d"),
                    self.family.sigma(j).expect("family validated through d"),
                ))
            } else {
                None
            };
        }
    }

    /// Emits the largest eigenvalue not yet emitted.
    pub fn next_eigenvalue(&mut self) -> (f64, EigenLabel) {
        self.refill();
        let head = self.heap.pop().expect("frontier is never empty");
        if let EigenLabel::Oscillatory { j, k, parity } = head.label {
            let next = match parity {
                Parity::Cos => Head {
                    label: EigenLabel::osc(j, k, Parity::Sin),
                    ..head
                },
                Parity::Sin => Head {
                    value: oscillatory_eigenvalue(head.beta, head.sigma, k + 1),
                    label: EigenLabel::osc(j, k + 1, Parity::Cos),
                    ..head
                },
            };
            self.heap.push(next);
        }
        self.emitted_count += 1;
        self.emitted_sum.add(head.value);
        (head.value, head.label)
    }
}

impl Iterator for EigenStream {
    type Item = (f64, EigenLabel);

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_eigenvalue())
    }
}

/// `sum_{k=1}^m k^{-sigma}` for the "above level" side of a coordinate.
fn head_sum(m: u64, sigma: f64, target: f64) -> BoundedValue {
    if m <= 64 {
        let mut s = NeumaierSum::new();
        for k in (1..=m).rev() {
            s.add((k as f64).powf(-sigma));
        }
        s.bounded(EPSILON)
    } else {
        power_tail(0, sigma, target) - power_tail(m, sigma, target)
    }
}

/// Number of eigenvalues `>= level` together with a bracket on their sum.
///
/// Walks coordinates only while `beta_j >= level`, so the cost is proportional to
/// the number of coordinates that actually reach the level.
pub fn count_at_level(
    family: &ParameterFamily,
    d: u64,
    level: f64,
    tol: f64,
) -> Result<(u64, BoundedValue)> {
    if !(level > 0.0) {
        return Err(Error::OutOfDomain {
            name: "level",
            value: level,
            domain: "(0, inf)",
        });
    }
    family.ensure_valid(d)?;
    let alpha = constant_bounded(family, d)?;
    let mut count = 0u64;
    let mut above = BoundedValue::zero();
    if alpha.value > 0.0 && alpha.value >= level {
        count += 1;
        above = alpha;
    }
    let mut parts = Vec::new();
    for j in 1..=d {
        let beta = family.beta(j)?;
        if beta < level {
            break;
        }
        let sigma = family.sigma(j)?;
        let m = coordinate_count(beta, sigma, level);
        count += 2 * m;
        parts.push(head_sum(m, sigma, tol).scale(2.0 * beta));
    }
    Ok((count, above + parts.into_iter().sum()))
}

/// `sum_j alpha_j + 2 sum_j beta_j zeta(sigma_j)`, the sum of all eigenvalues.
pub fn trace(family: &ParameterFamily, d: u64, tol: f64) -> Result<BoundedValue> {
    family.ensure_valid(d)?;
    let mut memo = ZetaMemo::new(tol);
    let mut parts = Vec::with_capacity(d.min(1 << 20) as usize);
    for j in 1..=d {
        let z = memo.get(family.sigma(j)?)?;
        parts.push(z.scale(2.0 * family.beta(j)?));
    }
    let osc: BoundedValue = parts.into_iter().sum();
    Ok(constant_bounded(family, d)? + osc)
}

fn check_tau(family: &ParameterFamily, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::OutOfDomain {
            name: "tau",
            value: tau,
            domain: "(0, 1)",
        });
    }
    let product = tau * family.sigma(1)?;
    if product <= 1.0 + POLE_GUARD {
        return Err(Error::Divergent { product });
    }
    Ok(())
}

/// `sum_i lambda_i^tau = (sum_j alpha_j)^tau + 2 sum_j beta_j^tau zeta(tau sigma_j)`.
///
/// The constant mode enters as a single eigenvalue, hence `(sum alpha)^tau`.
pub fn tau_trace(family: &ParameterFamily, d: u64, tau: f64, tol: f64) -> Result<BoundedValue> {
    family.ensure_valid(d)?;
    check_tau(family, tau)?;
    let mut memo = ZetaMemo::new(tol);
    let mut parts = Vec::with_capacity(d.min(1 << 20) as usize);
    for j in 1..=d {
        let z = memo.get(tau * family.sigma(j)?)?;
        parts.push(z.scale(2.0 * family.beta(j)?.powf(tau)));
    }
    let osc: BoundedValue = parts.into_iter().sum();
    Ok(constant_bounded(family, d)?.powf(tau) + osc)
}

/// Incremental accumulation of `trace(d)` and `tau_trace(d)` for growing `d`.
#[derive(Debug, Clone)]
pub struct TraceAccumulator<'a> {
    family: &'a ParameterFamily,
    taus: Vec<f64>,
    d: u64,
    alpha: NeumaierSum,
    osc: NeumaierSum,
    osc_err: f64,
    tau_osc: Vec<(NeumaierSum, f64)>,
    memo: ZetaMemo,
    tau_memos: Vec<ZetaMemo>,
}

impl<'a> TraceAccumulator<'a> {
    /// Each `tau` must satisfy `0 < tau < 1` and `tau * sigma_1 > 1`.
    pub fn new(family: &'a ParameterFamily, taus: &[f64], tol: f64) -> Result<Self> {
        for &t in taus {
            check_tau(family, t)?;
        }
        Ok(TraceAccumulator {
            family,
            taus: taus.to_vec(),
            d: 0,
            alpha: NeumaierSum::new(),
            osc: NeumaierSum::new(),
            osc_err: 0.0,
            tau_osc: vec![(NeumaierSum::new(), 0.0); taus.len()],
            memo: ZetaMemo::new(tol),
            tau_memos: vec![ZetaMemo::new(tol); taus.len()],
        })
    }

    pub fn dimension(&self) -> u64 {
        self.d
    }

    /// Extends the sums to cover coordinates up to `d`; validates each new coordinate.
    pub fn extend_to(&mut self, d: u64) -> Result<()> {
        if d <= self.d {
            return Ok(());
        }
        self.family.check_dimension(d)?;
        let mut prev_beta = if self.d == 0 { 1.0 } else { self.family.beta(self.d)? };
        let mut prev_sigma = if self.d == 0 { 1.0 } else { self.family.sigma(self.d)? };
        for j in self.d + 1..=d {
            let a = self.family.alpha(j)?;
            let b = self.family.beta(j)?;
            let s = self.family.sigma(j)?;
            if a < 0.0 || b <= 0.0 || b > prev_beta || s < prev_sigma {
                return self.family.ensure_valid(j);
            }
            prev_beta = b;
            prev_sigma = s;
            self.alpha.add(a);
            let z = self.memo.get(s)?;
            self.osc.add(2.0 * b * z.value);
            self.osc_err += 2.0 * b * z.abs_error;
            for (i, &t) in self.taus.iter().enumerate() {
                let z = self.tau_memos[i].get(t * s)?;
                let w = 2.0 * b.powf(t);
                self.tau_osc[i].0.add(w * z.value);
                self.tau_osc[i].1 += w * z.abs_error;
            }
        }
        self.d = d;
        Ok(())
    }

    pub fn trace(&self) -> BoundedValue {
        let osc = self.osc.bounded(4.0 * EPSILON);
        self.alpha.bounded(EPSILON) + BoundedValue::new(osc.value, osc.abs_error + self.osc_err)
    }

    pub fn tau_trace(&self, i: usize) -> BoundedValue {
        let (s, e) = &self.tau_osc[i];
        let osc = s.bounded(6.0 * EPSILON);
        self.alpha.bounded(EPSILON).powf(self.taus[i]) + BoundedValue::new(osc.value, osc.abs_error + e)
    }
}

/// Per-level statistics: how many eigenvalues are `>= level` and the mass of the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStats {
    pub level: f64,
    pub count: u64,
    pub below: BoundedValue,
}

const TAIL_TABLE: usize = 2048;
const PAR_CHUNK: usize = 16_384;

/// Precomputed coordinate data for repeated level queries at one dimension.
///
/// Holds `beta_j`, `sigma_j` and suffix sums of the per-coordinate traces, so this
/// uses `O(d)` memory; each query then costs `O(#{j : beta_j >= level})`.
#[derive(Debug, Clone)]
pub struct LevelScan {
    d: u64,
    alpha_sum: BoundedValue,
    betas: Vec<f64>,
    sigmas: Vec<f64>,
    // suffix[j] = sum_{i >= j} 2 beta_i zeta(sigma_i), 0-based
    suffix: Vec<f64>,
    suffix_err: Vec<f64>,
    trace: BoundedValue,
    target: f64,
    // tails T(m, sigma) for m < TAIL_TABLE when sigma_j is constant
    uniform_tails: Option<Vec<BoundedValue>>,
}

impl LevelScan {
    pub fn new(family: &ParameterFamily, d: u64, tol: f64) -> Result<Self> {
        family.ensure_valid(d)?;
        let n = d as usize;
        let mut betas = Vec::with_capacity(n);
        let mut sigmas = Vec::with_capacity(n);
        let mut coord = Vec::with_capacity(n);
        let mut memo = ZetaMemo::new(tol);
        for j in 1..=d {
            let b = family.beta(j)?;
            let s = family.sigma(j)?;
            coord.push(memo.get(s)?.scale(2.0 * b));
            betas.push(b);
            sigmas.push(s);
        }
        let mut suffix = vec![0.0; n + 1];
        let mut suffix_err = vec![0.0; n + 1];
        let mut acc = NeumaierSum::new();
        let mut err = 0.0;
        for i in (0..n).rev() {
            acc.add(coord[i].value);
            err += coord[i].abs_error;
            let b = acc.bounded(0.0);
            suffix[i] = b.value;
            suffix_err[i] = b.abs_error + err * (1.0 + EPSILON);
        }
        let alpha_sum = constant_bounded(family, d)?;
        let trace = alpha_sum + BoundedValue::new(suffix[0], suffix_err[0]);
        let uniform_tails = match sigmas.first() {
            Some(&s0) if sigmas.iter().all(|&s| s == s0) => Some(
                (0..TAIL_TABLE as u64)
                    .map(|m| power_tail(m, s0, tol))
                    .collect(),
            ),
            _ => None,
        };
        Ok(LevelScan {
            d,
            alpha_sum,
            betas,
            sigmas,
            suffix,
            suffix_err,
            trace,
            target: tol,
            uniform_tails,
        })
    }

    pub fn dimension(&self) -> u64 {
        self.d
    }

    pub fn trace(&self) -> BoundedValue {
        self.trace
    }

    /// The constant eigenvalue as enumerated.
    pub fn alpha_sum(&self) -> f64 {
        self.alpha_sum.value
    }

    /// Largest eigenvalue.
    pub fn top(&self) -> f64 {
        self.alpha_sum.value.max(self.betas[0])
    }

    fn active(&self, level: f64) -> usize {
        self.betas.partition_point(|&b| b >= level)
    }

    fn coord_tail(&self, i: usize, m: u64) -> BoundedValue {
        match &self.uniform_tails {
            Some(t) if (m as usize) < TAIL_TABLE => t[m as usize],
            _ => power_tail(m, self.sigmas[i], self.target),
        }
    }

    fn chunk_stats(&self, range: std::ops::Range<usize>, level: f64) -> (u64, NeumaierSum, f64) {
        let mut count = 0;
        let mut sum = NeumaierSum::new();
        let mut err = 0.0;
        for i in range {
            let b = self.betas[i];
            let m = coordinate_count(b, self.sigmas[i], level);
            count += 2 * m;
            let t = self.coord_tail(i, m);
            sum.add(2.0 * b * t.value);
            err += 2.0 * b * t.abs_error;
        }
        (count, sum, err)
    }

    /// Count of eigenvalues `>= level` and a bracket on the sum of all smaller ones.
    pub fn at(&self, level: f64) -> LevelStats {
        let active = self.active(level);
        let chunks: Vec<(u64, NeumaierSum, f64)> = if active > 2 * PAR_CHUNK {
            (0..active.div_ceil(PAR_CHUNK))
                .into_par_iter()
                .map(|c| self.chunk_stats(c * PAR_CHUNK..((c + 1) * PAR_CHUNK).min(active), level))
                .collect()
        } else {
            vec![self.chunk_stats(0..active, level)]
        };
        let mut count = 0u64;
        let mut sum = NeumaierSum::new();
        let mut err = 0.0;
        for (c, s, e) in chunks {
            count += c;
            sum.add(s.value());
            err += s.bounded(2.0 * EPSILON).abs_error + e;
        }
        let mut below = BoundedValue::new(sum.value(), sum.bounded(0.0).abs_error + err)
            + BoundedValue::new(self.suffix[active], self.suffix_err[active]);
        if self.alpha_sum.value > 0.0 {
            if self.alpha_sum.value >= level {
                count += 1;
            } else {
                below = below + self.alpha_sum;
            }
        }
        LevelStats {
            level,
            count,
            below,
        }
    }

    /// Eigenvalues `lambda` with `lo <= lambda < hi`, one entry per cosine/sine pair
    /// (multiplicity 2) plus the constant mode (multiplicity 1), unsorted.
    pub fn between(&self, lo: f64, hi: f64) -> Vec<(f64, EigenLabel, u64)> {
        let mut out = Vec::new();
        if self.alpha_sum.value > 0.0 && self.alpha_sum.value >= lo && self.alpha_sum.value < hi {
            out.push((self.alpha_sum.value, EigenLabel::Constant, 1));
        }
        for i in 0..self.active(lo) {
            let (b, s) = (self.betas[i], self.sigmas[i]);
            let from = coordinate_count(b, s, hi);
            let to = coordinate_count(b, s, lo);
            for k in from + 1..=to {
                out.push((
                    oscillatory_eigenvalue(b, s, k),
                    EigenLabel::osc(i as u64 + 1, k, Parity::Cos),
                    2,
                ));
            }
        }
        out
    }
}
