//! Minimal average-case errors and information complexity `n(eps)`.
//!
//! The optimal rank-`n` approximation keeps the `n` largest eigenvalues, so
//! `e(n)^2` is the tail `sum_{i>n} lambda_i`, and
//! `n(eps) = min { n : tail(n) <= eps^2 CRI^2 }` with `CRI^2 = 1` (absolute) or the
//! trace (normalized). Every tail is a [`BoundedValue`]; the returned `n` is
//! certified when the bounds decide both `tail(n) <= threshold` and
//! `tail(n-1) > threshold`, and otherwise comes back flagged with the bracket of
//! candidates the bounds cannot separate.
//!
//! Two independent routes compute `n`: the heap path walks the eigenvalue stream
//! one emission at a time, and the level-set path bisects on an eigenvalue level
//! using closed-form per-coordinate counts, then resolves the last gap exactly.

use std::f64::EPSILON;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterFamily;
use crate::special::{BoundedValue, DEFAULT_TOL, EIGEN_REL};
use crate::spectrum::{trace, EigenStream, LevelScan};

/// Error criterion: absolute, or normalized by the initial error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Abs,
    Nor,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Abs => "abs",
            Criterion::Nor => "nor",
        })
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "abs" => Ok(Criterion::Abs),
            "nor" => Ok(Criterion::Nor),
            other => Err(format!("unknown criterion '{other}' (expected abs or nor)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    /// Heap path up to the budget, level-set path beyond it.
    Auto,
    Heap,
    LevelSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathUsed {
    Heap,
    LevelSet,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityOptions {
    /// Target for each zeta / power-tail remainder.
    pub tol: f64,
    /// Maximum emissions on the heap path before switching (or failing, if forced).
    pub heap_budget: u64,
    pub path: PathChoice,
}

impl Default for ComplexityOptions {
    fn default() -> Self {
        ComplexityOptions {
            tol: DEFAULT_TOL,
            heap_budget: 1_000_000,
            path: PathChoice::Auto,
        }
    }
}

impl ComplexityOptions {
    pub fn with_path(path: PathChoice) -> Self {
        ComplexityOptions {
            path,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityResult {
    /// Smallest `n` whose tail is certainly below the threshold.
    pub n: u64,
    pub tail_at_n: BoundedValue,
    /// `eps^2 CRI^2`.
    pub threshold: BoundedValue,
    pub certified: bool,
    /// `(n_lo, n_hi)` when the bounds cannot pick a single answer: the true `n` lies
    /// in this range and `n == n_hi`. Tightening `tol` is the remedy.
    pub bracket: Option<(u64, u64)>,
    pub path: PathUsed,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name: "eps",
            value: eps,
            domain: "(0, 1)",
        })
    }
}

/// `eps^2 CRI_d^2` for the given criterion.
pub fn threshold(crit: Criterion, eps: f64, trace: BoundedValue) -> BoundedValue {
    let e2 = BoundedValue::new(eps * eps, EPSILON * eps * eps);
    match crit {
        Criterion::Abs => e2,
        Criterion::Nor => e2.mul(trace),
    }
}

/// `e(n) = sqrt(trace - sum_{i<=n} lambda_i)`; `e(0)` is the initial error.
pub fn minimal_error(family: &ParameterFamily, d: u64, n: u64, tol: f64) -> Result<BoundedValue> {
    let tr = trace(family, d, tol)?;
    let mut stream = EigenStream::new(family, d)?;
    for _ in 0..n {
        stream.next_eigenvalue();
    }
    Ok((tr - stream.emitted_sum()).sqrt())
}

fn certain(thr: BoundedValue) -> impl Fn(&BoundedValue) -> bool {
    move |t: &BoundedValue| t.hi() <= thr.lo()
}

fn possible(thr: BoundedValue) -> impl Fn(&BoundedValue) -> bool {
    move |t: &BoundedValue| t.lo() <= thr.hi()
}

fn heap_path(
    family: &ParameterFamily,
    d: u64,
    crit: Criterion,
    eps: f64,
    opts: &ComplexityOptions,
) -> Result<ComplexityResult> {
    let tr = trace(family, d, opts.tol)?;
    let thr = threshold(crit, eps, tr);
    let (is_certain, is_possible) = (certain(thr), possible(thr));
    let mut stream = EigenStream::new(family, d)?;
    let mut n_lo = None;
    let mut n = 0u64;
    loop {
        let tail = if n == 0 { tr } else { tr - stream.emitted_sum() };
        if n_lo.is_none() && is_possible(&tail) {
            n_lo = Some(n);
        }
        if is_certain(&tail) {
            let n_lo = n_lo.unwrap_or(n);
            return Ok(ComplexityResult {
                n,
                tail_at_n: tail,
                threshold: thr,
                certified: n_lo == n,
                bracket: (n_lo != n).then_some((n_lo, n)),
                path: PathUsed::Heap,
            });
        }
        if n >= opts.heap_budget {
            return Err(Error::BudgetExceeded {
                budget: opts.heap_budget,
            });
        }
        stream.next_eigenvalue();
        n += 1;
    }
}

/// Largest gap (in eigenvalue count) left for exact resolution after bisection.
const GAP_MAX: u64 = 1 << 16;
/// Gap size at which adjacent floating-point levels no longer separate eigenvalues.
const GAP_LIMIT: u64 = 1 << 26;

struct LevelHit {
    n: u64,
    tail: BoundedValue,
    prev_tail: Option<BoundedValue>,
}

/// Smallest `n` with `pred(tail(n))`, for a predicate monotone in the tail.
fn level_search(scan: &LevelScan, pred: &dyn Fn(&BoundedValue) -> bool) -> Result<LevelHit> {
    let tr = scan.trace();
    if pred(&tr) {
        return Ok(LevelHit {
            n: 0,
            tail: tr,
            prev_tail: None,
        });
    }
    // `hi` keeps nothing above it, `lo` keeps the top eigenvalue
    let mut hi = scan.at(f64::from_bits(scan.top().to_bits() + 1));
    let mut lo = scan.at(scan.top());
    while !pred(&lo.below) {
        hi = lo;
        let next = lo.level * 0.5;
        if next < 1e-300 {
            return Err(Error::ToleranceUnattainable {
                tol: 0.0,
                achieved: lo.below.abs_error,
            });
        }
        lo = scan.at(next);
    }
    while lo.count - hi.count > GAP_MAX {
        let mid = (lo.level * hi.level).sqrt();
        if !(mid > lo.level && mid < hi.level) {
            break;
        }
        let st = scan.at(mid);
        if pred(&st.below) {
            lo = st;
        } else {
            hi = st;
        }
    }

    if lo.count - hi.count > GAP_LIMIT {
        return Err(Error::ToleranceUnattainable {
            tol: 0.0,
            achieved: hi.level - lo.level,
        });
    }
    let mut gap = scan.between(lo.level, hi.level);
    gap.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.tie_key().cmp(&b.1.tie_key())));
    let mut n = hi.count;
    let mut tail = hi.below;
    let mut i = 0;
    while i < gap.len() {
        let value = gap[i].0;
        let mut mult = 0u64;
        while i < gap.len() && gap[i].0 == value {
            mult += gap[i].2;
            i += 1;
        }
        let take = |m: u64| {
            if m == 0 {
                tail
            } else {
                let x = m as f64 * value;
                tail - BoundedValue::new(x, x * (EIGEN_REL + EPSILON))
            }
        };
        if pred(&take(mult)) {
            // smallest m in 1..=mult with pred(take(m))
            let (mut a, mut b) = (0u64, mult);
            while b - a > 1 {
                let c = a + (b - a) / 2;
                if pred(&take(c)) {
                    b = c;
                } else {
                    a = c;
                }
            }
            return Ok(LevelHit {
                n: n + b,
                tail: take(b),
                prev_tail: Some(take(b - 1)),
            });
        }
        n += mult;
        tail = take(mult);
    }
    // rounding left the walk just short of the lower level, which satisfies pred
    Ok(LevelHit {
        n: lo.count,
        tail: lo.below,
        prev_tail: Some(tail),
    })
}

fn level_path(
    family: &ParameterFamily,
    d: u64,
    crit: Criterion,
    eps: f64,
    opts: &ComplexityOptions,
) -> Result<ComplexityResult> {
    let scan = LevelScan::new(family, d, opts.tol)?;
    let thr = threshold(crit, eps, scan.trace());
    let hit = level_search(&scan, &certain(thr))?;
    let certified = hit.prev_tail.is_none_or(|p| p.lo() > thr.hi());
    let bracket = if certified {
        None
    } else {
        let lo = level_search(&scan, &possible(thr))?;
        Some((lo.n.min(hit.n), hit.n))
    };
    Ok(ComplexityResult {
        n: hit.n,
        tail_at_n: hit.tail,
        threshold: thr,
        certified: bracket.is_none(),
        bracket,
        path: PathUsed::LevelSet,
    })
}

/// Information complexity `n(eps)` of the `d`-dimensional field under `crit`.
pub fn info_complexity(
    family: &ParameterFamily,
    d: u64,
    eps: f64,
    crit: Criterion,
    opts: &ComplexityOptions,
) -> Result<ComplexityResult> {
    check_eps(eps)?;
    family.ensure_valid(d)?;
    match opts.path {
        PathChoice::Heap => heap_path(family, d, crit, eps, opts),
        PathChoice::LevelSet => level_path(family, d, crit, eps, opts),
        PathChoice::Auto => match heap_path(family, d, crit, eps, opts) {
            Err(Error::BudgetExceeded { .. }) => level_path(family, d, crit, eps, opts),
            other => other,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Rule;
    use std::f64::consts::PI;

    fn unit() -> ParameterFamily {
        ParameterFamily::new(Rule::constant(0.0), Rule::constant(1.0), Rule::constant(2.0))
    }

    fn both(family: &ParameterFamily, d: u64, eps: f64, crit: Criterion) -> (ComplexityResult, ComplexityResult) {
        let h = info_complexity(family, d, eps, crit, &ComplexityOptions::with_path(PathChoice::Heap)).unwrap();
        let l = info_complexity(family, d, eps, crit, &ComplexityOptions::with_path(PathChoice::LevelSet)).unwrap();
        (h, l)
    }

    /// Oracle for the unit family: explicit list of `1/k^2` (each twice), sorted.
    fn unit_tail(n: usize) -> f64 {
        let mut v: Vec<f64> = (1..=200_000u64).flat_map(|k| [1.0 / (k * k) as f64; 2]).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        PI * PI / 3.0 - v[..n].iter().sum::<f64>()
    }

    #[test]
    fn minimal_error_examples() {
        let e0 = minimal_error(&unit(), 1, 0, 1e-14).unwrap();
        assert!((e0.value - (PI * PI / 3.0).sqrt()).abs() < 1e-12);
        assert!((e0.value - 1.813_799_364_234_218).abs() < 1e-9);
        let e2 = minimal_error(&unit(), 1, 2, 1e-14).unwrap();
        assert!((e2.value - unit_tail(2).sqrt()).abs() < 1e-12);
        assert!((e2.value - 1.135_724).abs() < 1e-6);
        let mut prev = e0.value;
        for n in [1, 5, 20, 100, 1000] {
            let e = minimal_error(&unit(), 1, n, 1e-14).unwrap().value;
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn complexity_examples() {
        assert!(unit_tail(3) > 0.9025 && unit_tail(4) <= 0.9025);
        let (h, l) = both(&unit(), 1, 0.95, Criterion::Abs);
        assert_eq!((h.n, l.n), (4, 4));
        assert!(h.certified && l.certified);
        assert!((h.tail_at_n.value - 0.789_868_133_696_452_9).abs() < 1e-12);

        let (h, l) = both(&unit(), 1, 0.5, Criterion::Nor);
        assert_eq!((h.n, l.n), (4, 4));
        assert!((h.threshold.value - 0.25 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nor_near_one() {
        // tail(1) = trace - 1 <= (1 - eps^2 ... ) once lambda_1 >= (1 - eps^2) trace
        let tr = PI * PI / 3.0;
        let eps = (1.0 - 1.0 / tr).sqrt() + 1e-6;
        let (h, l) = both(&unit(), 1, eps, Criterion::Nor);
        assert_eq!((h.n, l.n), (1, 1));
        let (h, _) = both(&unit(), 1, 0.999_999, Criterion::Nor);
        assert_eq!(h.n, 1);
    }

    #[test]
    fn abs_can_be_zero() {
        let tiny = ParameterFamily::new(Rule::constant(0.0), Rule::constant(0.01), Rule::constant(2.0));
        let (h, l) = both(&tiny, 1, 0.5, Criterion::Abs);
        assert_eq!((h.n, l.n), (0, 0));
        assert!(h.certified);
    }

    #[test]
    fn eps_domain() {
        for eps in [0.0, 1.0, -0.3, 1.5, f64::NAN] {
            assert!(matches!(
                info_complexity(&unit(), 1, eps, Criterion::Nor, &ComplexityOptions::default()),
                Err(Error::OutOfDomain { name: "eps", .. })
            ));
        }
    }

    #[test]
    fn budget_forces_level_set() {
        let opts = ComplexityOptions {
            heap_budget: 10,
            ..Default::default()
        };
        let r = info_complexity(&unit(), 1, 0.1, Criterion::Abs, &opts).unwrap();
        assert_eq!(r.path, PathUsed::LevelSet);
        let forced = ComplexityOptions {
            heap_budget: 10,
            path: PathChoice::Heap,
            ..Default::default()
        };
        assert!(matches!(
            info_complexity(&unit(), 1, 0.1, Criterion::Abs, &forced),
            Err(Error::BudgetExceeded { budget: 10 })
        ));
        let (h, l) = both(&unit(), 1, 0.1, Criterion::Abs);
        assert_eq!(h.n, l.n);
        assert_eq!(r.n, h.n);
    }

    #[test]
    fn massive_ties_resolve_exactly() {
        // 2 * 5000 eigenvalues equal to 1 at the top, then 1/4 ...
        let flat = ParameterFamily::new(Rule::constant(0.0), Rule::constant(1.0), Rule::constant(3.0));
        for eps in [0.3, 0.5, 0.7, 0.9] {
            let (h, l) = both(&flat, 5000, eps, Criterion::Nor);
            assert_eq!(h.n, l.n, "eps={eps}");
            assert!(h.certified && l.certified);
        }
    }

    #[test]
    fn ambiguity_is_reported() {
        // place the ABS threshold exactly on tail(4) of the unit family
        let t4 = unit_tail(4);
        let eps = t4.sqrt();
        let r = info_complexity(&unit(), 1, eps, Criterion::Abs, &ComplexityOptions::default()).unwrap();
        if !r.certified {
            let (lo, hi) = r.bracket.unwrap();
            assert!(lo <= 4 && 4 <= hi && hi == r.n);
        } else {
            assert!(r.n == 4 || r.n == 5);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn family() -> impl Strategy<Value = ParameterFamily> {
            (0.0f64..1.0, 0.1f64..1.0, 0.0f64..2.5, 1.3f64..4.0, 0.0f64..0.6)
                .prop_map(|(a, c, s, sig, t)| {
                    ParameterFamily::new(Rule::constant(a), Rule::power(c, s), Rule::power(sig, -t))
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(96))]

            #[test]
            fn paths_agree(f in family(), d in 1u64..=6, eps in 0.05f64..0.95, nor in any::<bool>()) {
                let crit = if nor { Criterion::Nor } else { Criterion::Abs };
                let h = info_complexity(&f, d, eps, crit, &ComplexityOptions::with_path(PathChoice::Heap));
                let l = info_complexity(&f, d, eps, crit, &ComplexityOptions::with_path(PathChoice::LevelSet)).unwrap();
                let Ok(h) = h else { return Ok(()) };
                if h.certified && l.certified {
                    prop_assert_eq!(h.n, l.n);
                }
            }

            #[test]
            fn monotone_in_eps(f in family(), d in 1u64..=5, e1 in 0.05f64..0.9, de in 0.001f64..0.09, nor in any::<bool>()) {
                let crit = if nor { Criterion::Nor } else { Criterion::Abs };
                let o = ComplexityOptions::default();
                let a = info_complexity(&f, d, e1, crit, &o).unwrap();
                let b = info_complexity(&f, d, e1 + de, crit, &o).unwrap();
                prop_assert!(a.n >= b.n);
            }

            #[test]
            fn abs_monotone_in_d(f in family(), d in 1u64..=6, eps in 0.05f64..0.9) {
                let o = ComplexityOptions::default();
                let a = info_complexity(&f, d, eps, Criterion::Abs, &o).unwrap();
                let b = info_complexity(&f, d + 1, eps, Criterion::Abs, &o).unwrap();
                prop_assert!(b.n >= a.n);
            }
        }
    }
}
