//! Acceptance criteria. Run with `--nocapture` to see one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use korobov_ibc::asymptotics::q_factor;
use korobov_ibc::complexity::{info_complexity, ComplexityOptions, ComplexityResult, Criterion, PathChoice};
use korobov_ibc::montecarlo::verify;
use korobov_ibc::oracle::{materialize, oracle_info_complexity};
use korobov_ibc::spectrum::trace;
use korobov_ibc::tractability::{spt_verdict, tau_criterion_scan, Hypothesis, Spt};
use korobov_ibc::{ParameterFamily, Rule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// timed criteria must not compete with each other for cores
static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, title: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn opts(path: PathChoice) -> ComplexityOptions {
    ComplexityOptions::with_path(path)
}

fn n_of(f: &ParameterFamily, d: u64, eps: f64, crit: Criterion) -> ComplexityResult {
    info_complexity(f, d, eps, crit, &ComplexityOptions::default()).unwrap()
}

/// Power or constant rules: `alpha >= 0`, `beta` in `(0, 1]` non-increasing,
/// `sigma` non-decreasing from above `sigma_min`.
fn random_family(rng: &mut ChaCha8Rng, sigma_min: f64, nonzero_alpha: bool) -> ParameterFamily {
    let alpha = match rng.random_range(0..3) {
        0 if !nonzero_alpha => Rule::constant(0.0),
        0 | 1 => Rule::constant(rng.random_range(0.05..1.5)),
        _ => Rule::power(rng.random_range(0.05..1.5), rng.random_range(-1.0..3.0)),
    };
    let beta = if rng.random_bool(0.2) {
        Rule::constant(rng.random_range(0.1..1.0))
    } else {
        Rule::power(rng.random_range(0.1..1.0), rng.random_range(0.0..3.0))
    };
    let sigma = if rng.random_bool(0.5) {
        Rule::constant(rng.random_range(sigma_min..4.0))
    } else {
        Rule::power(rng.random_range(sigma_min..3.0), -rng.random_range(0.0..0.5))
    };
    ParameterFamily::new(alpha, beta, sigma)
}

#[test]
fn criterion_01_closed_form_trace() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let f = ParameterFamily::new(Rule::constant(0.0), Rule::constant(1.0), Rule::constant(2.0));
    let t = Instant::now();
    let tr = trace(&f, 1, 1e-14).unwrap();
    let el = t.elapsed();
    let err = (tr.value - PI * PI / 3.0).abs();
    let pass = err <= 1e-12 && el < Duration::from_millis(1);
    report(1, "trace = pi^2/3", pass, format!("|err| = {err:.2e}, bound {:.1e}, {el:?}", tr.abs_error));
    assert!(pass);
}

#[test]
fn criterion_02_oracle_equivalence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (mut conclusive, mut inconclusive, mut mismatches) = (0, 0, vec![]);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_family(&mut rng, 1.5, false);
        let d = rng.random_range(1..=5);
        let spec = materialize(&f, d, 10_000, 1e-14).unwrap();
        for _ in 0..3 {
            let eps = rng.random_range(0.05..0.95);
            let crit = if rng.random_bool(0.5) { Criterion::Abs } else { Criterion::Nor };
            let Some(n) = oracle_info_complexity(&spec, eps, crit).unwrap().n() else {
                inconclusive += 1;
                continue;
            };
            conclusive += 1;
            for path in [PathChoice::Heap, PathChoice::LevelSet] {
                let r = info_complexity(&f, d, eps, crit, &opts(path)).unwrap();
                if r.n != n {
                    mismatches.push((seed, eps, crit, path, r.n, n));
                }
            }
        }
    }
    let el = t.elapsed();
    let pass = mismatches.is_empty() && conclusive > 0 && el < Duration::from_secs(60);
    report(
        2,
        "oracle equivalence",
        pass,
        format!("{conclusive} conclusive, {inconclusive} inconclusive, {} mismatches, {el:?}", mismatches.len()),
    );
    assert!(pass, "{mismatches:?}");
}

const SWEEP_EPS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[test]
fn criterion_03_sandwich() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let (mut checked, mut violations) = (0, vec![]);
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let f = random_family(&mut rng, 1.5, true);
        let z = f.zero_alpha();
        let d = rng.random_range(1..=10);
        for eps in SWEEP_EPS {
            let a = n_of(&f, d, eps, Criterion::Abs);
            let b = n_of(&z, d, eps, Criterion::Abs);
            assert!(a.certified && b.certified, "seed {seed} eps {eps}");
            checked += 1;
            if !(b.n <= a.n && a.n <= b.n + 1) {
                violations.push((seed, d, eps, b.n, a.n));
            }
        }
    }
    let pass = violations.is_empty();
    report(3, "sandwich with alpha zeroed", pass, format!("{checked} checks, {} violations", violations.len()));
    assert!(pass, "{violations:?}");
}

#[test]
fn criterion_04_nor_abs_scaling() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let (mut checked, mut skipped, mut violations) = (0, 0, vec![]);
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let f = random_family(&mut rng, 1.5, true);
        let d = rng.random_range(1..=10);
        let b1 = f.beta(1).unwrap();
        for eps in SWEEP_EPS {
            let scaled = eps * (2.0 * b1).sqrt();
            if scaled >= 1.0 {
                skipped += 1;
                continue;
            }
            let nor = n_of(&f, d, eps, Criterion::Nor);
            let abs = n_of(&f, d, scaled, Criterion::Abs);
            checked += 1;
            if nor.n > abs.n {
                violations.push((seed, d, eps, nor.n, abs.n));
            }
        }
    }
    let pass = violations.is_empty() && checked > 0;
    report(
        4,
        "NOR below ABS at eps sqrt(2 beta_1)",
        pass,
        format!("{checked} checks, {skipped} skipped (scaled eps >= 1), {} violations", violations.len()),
    );
    assert!(pass, "{violations:?}");
}

fn fit_exponent(eps: &[f64], n: &[u64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn sup_n(f: &ParameterFamily, grid: &[u64], eps: f64) -> u64 {
    grid.iter()
        .map(|&d| info_complexity(f, d, eps, Criterion::Abs, &opts(PathChoice::LevelSet)).unwrap().n)
        .max()
        .unwrap()
}

#[test]
#[ignore = "fails as specified: the d grid up to 1e4 does not reach sup_d n(eps) for small eps; see README"]
fn criterion_05_exponent_fit() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let f = ParameterFamily::new(Rule::constant(0.0), Rule::power(1.0, 2.0), Rule::constant(3.0));
    let eps: Vec<f64> = (0..=8).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let t = Instant::now();
    let grid = [10, 100, 1000, 10_000];
    let sups: Vec<u64> = eps.iter().map(|&e| sup_n(&f, &grid, e)).collect();
    let p = fit_exponent(&eps, &sups);
    let el = t.elapsed();
    let pass = (1.8..=2.3).contains(&p) && el < Duration::from_secs(300);
    report(5, "SPT exponent fit over d <= 1e4", pass, format!("p = {p:.4}, {el:?}"));

    let wide = [10, 100, 1000, 10_000, 100_000, 1_000_000, 10_000_000];
    let sups: Vec<u64> = eps.iter().map(|&e| sup_n(&f, &wide, e)).collect();
    println!("   diagnostic: same fit over d <= 1e7 gives p = {:.4}", fit_exponent(&eps, &sups));
    assert!(pass);
}

#[test]
fn criterion_06_growing_ratio_instance() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let f = ParameterFamily::new(Rule::constant(1.0), Rule::power(1.0, 0.5), Rule::constant(2.0));
    let v = spt_verdict(&f, Criterion::Nor).unwrap();
    let grid: Vec<u64> = (0..=6).map(|e| 10u64.pow(e)).collect();
    let scan = tau_criterion_scan(&f, Criterion::Nor, &[0.75], &grid).unwrap();
    let s = scan.summary[0];
    let pass = v.spt == Spt::True
        && v.exponent == Some(4.0)
        && v.fired.contains(&Hypothesis::NorGrowingRatio)
        && s.spt_bounded;
    report(
        6,
        "growing-ratio SPT instance",
        pass,
        format!(
            "spt {:?}, exponent {:?}, tau=0.75 witness sup {:.4} at d={}, bounded {}",
            v.spt, v.exponent, s.spt_sup, s.spt_argmax, s.spt_bounded
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_linear_regime() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let f = ParameterFamily::new(Rule::constant(0.0), Rule::power(1.0, 0.5), Rule::affine(1.0, 1.0));
    let t = Instant::now();
    let q = q_factor(0.6, 1.0, 0.5);
    let ratio = |d: u64| n_of(&f, d, 0.6, Criterion::Nor).n as f64 / (2.0 * q * d as f64);
    let (r2, r4) = (ratio(100), ratio(10_000));
    let el = t.elapsed();
    let pass = (0.8..=1.25).contains(&r4) && (r4 - 1.0).abs() < (r2 - 1.0).abs() && el < Duration::from_secs(300);
    report(7, "linear regime n ~ 2 Q d", pass, format!("ratio {r2:.4} at d=1e2, {r4:.4} at d=1e4, {el:?}"));
    assert!(pass);
}

#[test]
fn criterion_08_bounded_regime() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let f = ParameterFamily::new(Rule::constant(0.0), Rule::power(1.0, 2.0), Rule::affine(1.0, 1.0));
    let (a, b) = (n_of(&f, 1000, 0.5, Criterion::Nor), n_of(&f, 10_000, 0.5, Criterion::Nor));
    let pass = a.n == b.n && a.certified && b.certified;
    report(8, "bounded regime stabilizes", pass, format!("n = {} at d=1e3, {} at d=1e4", a.n, b.n));
    assert!(pass);
}

#[test]
fn criterion_09_monte_carlo() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let f = ParameterFamily::new(Rule::constant(0.0), Rule::constant(1.0), Rule::constant(2.0));
    let t = Instant::now();
    let r = verify(&f, 3, 1000, 10, 10_000, 2024).unwrap();
    let el = t.elapsed();
    let pass = r.pass && el < Duration::from_secs(30);
    report(
        9,
        "Monte Carlo projection error",
        pass,
        format!(
            "empirical {:.6} +- {:.6}, analytic [{:.6}, {:.6}], {el:?}",
            r.empirical, r.std_error, r.analytic_lo, r.analytic_hi
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_level_set_performance() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let f = ParameterFamily::new(Rule::constant(0.0), Rule::power(1.0, 0.5), Rule::constant(2.0));
    let t = Instant::now();
    let r = info_complexity(&f, 1_000_000, 0.5, Criterion::Nor, &opts(PathChoice::LevelSet)).unwrap();
    let el = t.elapsed();
    let pass = r.certified && el < Duration::from_secs(2);
    report(10, "level-set path at d = 1e6", pass, format!("n = {}, certified {}, {el:?}", r.n, r.certified));
    assert!(pass);
}
