mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use korobov_ibc::asymptotics::{classify, compare, predicted_n, Classification};
use korobov_ibc::complexity::{info_complexity, ComplexityOptions, Criterion, PathChoice};
use korobov_ibc::montecarlo::verify;
use korobov_ibc::oracle::{materialize, oracle_info_complexity, MAX_DEPTH, MAX_DIMENSION};
use korobov_ibc::spectrum::{EigenLabel, EigenStream};
use korobov_ibc::tractability::{spt_verdict, tau_criterion_scan, LimitEstimate, Provenance, TractabilityVerdict};
use korobov_ibc::{Error, ParameterFamily, Rule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use output::{fmt_f, num, opt_num, round_all, sink, write_csv, write_json, Format, Table};

/// Average-case complexity of additive random fields with Korobov marginals.
#[derive(Debug, Parser)]
#[command(name = "korobov-ibc", version)]
struct Cli {
    /// Parameter family JSON; defaults to alpha = 0, beta = 1, sigma = 2.
    #[arg(long, global = true)]
    family: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Target error for zeta and power-tail remainders.
    #[arg(long, global = true, default_value_t = 1e-14)]
    tol: f64,
    /// Exit with status 3 when a result is uncertified or a check fails.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum PathArg {
    Auto,
    Heap,
    LevelSet,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Largest eigenvalues with their labels.
    Spectrum {
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long, default_value_t = 10)]
        top: u64,
    },
    /// Information complexity over a d x eps grid.
    Complexity {
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        d: Vec<u64>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        eps: Vec<f64>,
        #[arg(long, default_value = "nor")]
        crit: Criterion,
        #[arg(long, value_enum, default_value = "auto")]
        path: PathArg,
    },
    /// SPT/PT verdict, optionally with tau-sum witness scans.
    Tractability {
        #[arg(long, default_value = "abs")]
        crit: Criterion,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        tau: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000,10000,100000")]
        d_grid: Vec<u64>,
    },
    /// Computed normalized complexity against the large-d regime prediction.
    Asymptotics {
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        d_grid: Vec<u64>,
        #[arg(long)]
        eps: f64,
    },
    /// Cross-check both complexity paths against the brute-force oracle.
    Check {
        /// Number of random instances (seeds `seed..seed+seeds`).
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Fixed dimension; random in 1..=5 when absent.
        #[arg(long)]
        d: Option<u64>,
        /// Oracle frequency cutoff per coordinate.
        #[arg(long = "k", default_value_t = 2000)]
        depth: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Monte Carlo check of the rank-n projection error.
    VerifyMc {
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long = "k", default_value_t = 1000)]
        depth: u64,
        #[arg(long, default_value_t = 2)]
        n: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
}

enum Failure {
    Usage(String),
    Numeric(String),
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ToleranceUnattainable { .. } | Error::BudgetExceeded { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            Failure::Closed
        } else {
            Failure::Usage(format!("output: {e}"))
        }
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_family(path: Option<&Path>) -> std::result::Result<ParameterFamily, Failure> {
    match path {
        None => Ok(ParameterFamily::new(Rule::constant(0.0), Rule::constant(1.0), Rule::constant(2.0))),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
        }
    }
}

fn check_eps(eps: f64) -> std::result::Result<(), Failure> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("eps = {eps} is outside (0, 1)")))
    }
}

fn check_dims(ds: &[u64]) -> std::result::Result<(), Failure> {
    match ds.iter().find(|&&d| d == 0) {
        Some(_) => Err(usage("dimensions must be at least 1")),
        None => Ok(()),
    }
}

fn emit(cli: &Cli, table: &Table, json: Value) -> std::result::Result<(), Failure> {
    let w = sink(cli.out.as_deref())?;
    match cli.format {
        Format::Csv => write_csv(w, table)?,
        Format::Json => write_json(w, &json)?,
    }
    Ok(())
}

fn label_parts(label: &EigenLabel) -> (String, String, String) {
    match label {
        EigenLabel::Constant => (String::new(), String::new(), String::new()),
        EigenLabel::Oscillatory { j, k, parity } => {
            (j.to_string(), k.to_string(), format!("{parity:?}").to_lowercase())
        }
    }
}

fn cmd_spectrum(cli: &Cli, family: &ParameterFamily, d: u64, top: u64) -> Outcome {
    check_dims(&[d])?;
    let stream = EigenStream::new(family, d)?;
    let mut table = Table::new(&["rank", "eigenvalue", "kind", "j", "k", "parity"]);
    let mut items = vec![];
    for (i, (value, label)) in stream.take(top as usize).enumerate() {
        let (j, k, p) = label_parts(&label);
        let kind = if label == EigenLabel::Constant { "constant" } else { "oscillatory" };
        table.push(vec![(i + 1).to_string(), fmt_f(value), kind.into(), j, k, p]);
        items.push(json!({"rank": i + 1, "eigenvalue": num(value), "label": label}));
    }
    emit(cli, &table, Value::Array(items))?;
    Ok(true)
}

fn cmd_complexity(cli: &Cli, family: &ParameterFamily, ds: &[u64], eps: &[f64], crit: Criterion, path: PathArg) -> Outcome {
    check_dims(ds)?;
    eps.iter().try_for_each(|&e| check_eps(e))?;
    if let Some(&dmax) = ds.iter().max() {
        family.ensure_valid(dmax)?;
    }
    let opts = ComplexityOptions {
        tol: cli.tol,
        path: match path {
            PathArg::Auto => PathChoice::Auto,
            PathArg::Heap => PathChoice::Heap,
            PathArg::LevelSet => PathChoice::LevelSet,
        },
        ..Default::default()
    };
    let cells: Vec<(u64, f64)> = ds.iter().flat_map(|&d| eps.iter().map(move |&e| (d, e))).collect();
    let results = cells
        .par_iter()
        .map(|&(d, e)| info_complexity(family, d, e, crit, &opts))
        .collect::<korobov_ibc::Result<Vec<_>>>()?;

    let header = [
        "d", "eps", "criterion", "n", "n_lo", "tail", "tail_err", "threshold", "threshold_err", "certified", "path",
    ];
    let mut table = Table::new(&header);
    let mut records = vec![];
    let mut all_certified = true;
    for (&(d, e), r) in cells.iter().zip(&results) {
        all_certified &= r.certified;
        let n_lo = r.bracket.map_or(r.n, |b| b.0);
        let path = serde_json::to_value(r.path).expect("serializable");
        let path = path.as_str().unwrap_or_default().to_string();
        table.push(vec![
            d.to_string(),
            fmt_f(e),
            crit.to_string(),
            r.n.to_string(),
            n_lo.to_string(),
            fmt_f(r.tail_at_n.value),
            fmt_f(r.tail_at_n.abs_error),
            fmt_f(r.threshold.value),
            fmt_f(r.threshold.abs_error),
            r.certified.to_string(),
            path.clone(),
        ]);
        records.push(json!({
            "d": d, "eps": num(e), "criterion": crit, "n": r.n, "n_lo": n_lo,
            "tail": num(r.tail_at_n.value), "tail_err": num(r.tail_at_n.abs_error),
            "threshold": num(r.threshold.value), "threshold_err": num(r.threshold.abs_error),
            "certified": r.certified, "path": path,
        }));
    }
    emit(cli, &table, Value::Array(records))?;
    Ok(all_certified)
}

fn limit_json(l: &LimitEstimate) -> Value {
    let (prov, stabilized) = match l.provenance {
        Provenance::Analytic => ("analytic", None),
        Provenance::Empirical { stabilized } => ("empirical", Some(stabilized)),
    };
    json!({"value": num(l.value), "provenance": prov, "stabilized": stabilized})
}

fn verdict_json(v: &TractabilityVerdict) -> Value {
    let report: Vec<Value> = v
        .hypothesis_report
        .iter()
        .map(|h| {
            json!({"hypothesis": h.hypothesis, "holds": h.holds, "analytic": h.analytic,
                   "constant": opt_num(h.constant), "note": h.note})
        })
        .collect();
    json!({
        "criterion": v.criterion, "pt": v.pt, "qpt": v.qpt, "uwt": v.uwt, "wt": v.wt, "spt": v.spt,
        "a_star": limit_json(&v.a_star), "b_star": v.b_star.as_ref().map(limit_json),
        "exponent": opt_num(v.exponent), "sigma_1": num(v.sigma_1), "fired": v.fired,
        "hypothesis_report": report,
    })
}

fn cmd_tractability(cli: &Cli, family: &ParameterFamily, crit: Criterion, taus: &[f64], grid: &[u64]) -> Outcome {
    check_dims(grid)?;
    if let Some(&t) = taus.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(usage(format!("tau = {t} is outside (0, 1)")));
    }
    let v = spt_verdict(family, crit)?;
    let verdict = verdict_json(&v);
    if taus.is_empty() {
        let mut table = Table::new(&["criterion", "pt", "spt", "a_star", "a_star_provenance", "b_star", "exponent", "fired"]);
        let prov = |l: &LimitEstimate| if l.is_analytic() { "analytic" } else { "empirical" };
        let fired: Vec<String> = verdict["fired"].as_array().into_iter().flatten().map(|x| x.as_str().unwrap_or("").to_string()).collect();
        table.push(vec![
            crit.to_string(),
            v.pt.to_string(),
            verdict["spt"].as_str().unwrap_or("").to_string(),
            fmt_f(v.a_star.value),
            prov(&v.a_star).into(),
            v.b_star.map_or(String::new(), |b| fmt_f(b.value)),
            v.exponent.map_or(String::new(), fmt_f),
            fired.join(";"),
        ]);
        emit(cli, &table, verdict)?;
    } else {
        let scan = tau_criterion_scan(family, crit, taus, grid)?;
        let mut table = Table::new(&["tau", "d", "pt_witness", "spt_witness"]);
        for r in &scan.rows {
            table.push(vec![fmt_f(r.tau), r.d.to_string(), r.pt_witness.map_or(String::new(), fmt_f), fmt_f(r.spt_witness)]);
        }
        let scan_json = round_all(serde_json::to_value(&scan).expect("serializable"));
        emit(cli, &table, json!({"verdict": verdict, "scan": scan_json}))?;
    }
    Ok(true)
}

fn cmd_asymptotics(cli: &Cli, family: &ParameterFamily, grid: &[u64], eps: f64) -> Outcome {
    check_dims(grid)?;
    check_eps(eps)?;
    let regime = match classify(family) {
        Classification::Applicable(r) => r,
        Classification::NotApplicable { reason } => {
            let mut table = Table::new(&["status", "reason"]);
            table.push(vec!["not_applicable".into(), reason.clone()]);
            emit(cli, &table, json!({"status": "not_applicable", "reason": reason}))?;
            return Ok(true);
        }
    };
    predicted_n(&regime, grid.first().copied().unwrap_or(1), eps)?;
    let t = compare(family, grid, eps)?;
    let mut table = Table::new(&["d", "n_computed", "n_predicted", "ratio"]);
    let mut rows = vec![];
    for r in &t.rows {
        table.push(vec![
            r.d.to_string(),
            r.n_computed.to_string(),
            r.n_predicted.map_or(String::new(), fmt_f),
            r.ratio.map_or(String::new(), fmt_f),
        ]);
        rows.push(json!({"d": r.d, "n_computed": r.n_computed, "n_predicted": opt_num(r.n_predicted), "ratio": opt_num(r.ratio)}));
    }
    let g = &t.regime;
    let regime = json!({"c": num(g.c), "s": num(g.s), "r": num(g.r), "eps0": num(g.eps0), "case_id": g.case_id});
    emit(cli, &table, json!({"status": "applicable", "regime": regime, "eps": num(eps), "rows": rows}))?;
    Ok(true)
}

fn random_family(rng: &mut ChaCha8Rng) -> ParameterFamily {
    let alpha = if rng.random_bool(0.3) {
        Rule::constant(0.0)
    } else {
        Rule::power(rng.random_range(0.05..1.5), rng.random_range(-1.0..3.0))
    };
    let beta = Rule::power(rng.random_range(0.1..1.0), rng.random_range(0.0..3.0));
    let sigma = Rule::power(rng.random_range(1.5..4.0), -rng.random_range(0.0..0.5));
    ParameterFamily::new(alpha, beta, sigma)
}

fn cmd_check(cli: &Cli, seeds: u64, fixed_d: Option<u64>, depth: u64, fault: bool) -> Outcome {
    if let Some(d) = fixed_d {
        if d == 0 || d > MAX_DIMENSION {
            return Err(usage(format!("d = {d} outside the oracle range 1..={MAX_DIMENSION}")));
        }
    }
    if depth == 0 || depth > MAX_DEPTH {
        return Err(usage(format!("k = {depth} outside the oracle range 1..={MAX_DEPTH}")));
    }
    let given = match &cli.family {
        Some(p) => Some(load_family(Some(p))?),
        None => None,
    };
    let instances = (0..seeds)
        .into_par_iter()
        .map(|i| -> korobov_ibc::Result<Vec<(u64, u64, f64, Criterion, Option<u64>, u64, u64)>> {
            let seed = cli.seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let family = given.clone().unwrap_or_else(|| random_family(&mut rng));
            let d = fixed_d.unwrap_or_else(|| rng.random_range(1..=5));
            let spec = materialize(&family, d, depth, cli.tol)?;
            let mut out = vec![];
            for _ in 0..3 {
                let eps = rng.random_range(0.05..0.95);
                let crit = if rng.random_bool(0.5) { Criterion::Abs } else { Criterion::Nor };
                let o = oracle_info_complexity(&spec, eps, crit)?.n();
                let run = |p| info_complexity(&family, d, eps, crit, &ComplexityOptions { tol: cli.tol, path: p, ..Default::default() });
                let heap = run(PathChoice::Heap)?.n + u64::from(fault);
                let level = run(PathChoice::LevelSet)?.n;
                out.push((seed, d, eps, crit, o, heap, level));
            }
            Ok(out)
        })
        .collect::<korobov_ibc::Result<Vec<_>>>()?;

    let mut table = Table::new(&["seed", "d", "eps", "criterion", "oracle_n", "heap_n", "level_n", "status"]);
    let mut records = vec![];
    let (mut conclusive, mut mismatches) = (0u64, 0u64);
    for (seed, d, eps, crit, o, heap, level) in instances.into_iter().flatten() {
        let status = match o {
            None if heap == level => "inconclusive",
            None => "mismatch",
            Some(n) if n == heap && n == level => "match",
            Some(_) => "mismatch",
        };
        conclusive += u64::from(o.is_some());
        mismatches += u64::from(status == "mismatch");
        table.push(vec![
            seed.to_string(),
            d.to_string(),
            fmt_f(eps),
            crit.to_string(),
            o.map_or(String::new(), |n| n.to_string()),
            heap.to_string(),
            level.to_string(),
            status.into(),
        ]);
        records.push(json!({"seed": seed, "d": d, "eps": num(eps), "criterion": crit, "oracle_n": o,
                            "heap_n": heap, "level_n": level, "status": status}));
    }
    let pass = mismatches == 0;
    eprintln!(
        "check: {} instances, {conclusive} conclusive, {mismatches} mismatches: {}",
        records.len(),
        if pass { "pass" } else { "FAIL" }
    );
    emit(
        cli,
        &table,
        json!({"pass": pass, "conclusive": conclusive, "mismatches": mismatches, "instances": records}),
    )?;
    Ok(pass)
}

fn cmd_verify_mc(cli: &Cli, family: &ParameterFamily, d: u64, depth: u64, n: u64, samples: u64) -> Outcome {
    check_dims(&[d])?;
    if samples == 0 {
        return Err(usage("samples must be at least 1"));
    }
    if depth == 0 {
        return Err(usage("k must be at least 1"));
    }
    let r = verify(family, d, depth, n, samples, cli.seed)?;
    let mut table = Table::new(&[
        "family", "d", "K", "n", "samples", "empirical", "analytic_lo", "analytic_hi", "std_error", "pass",
    ]);
    table.push(vec![
        serde_json::to_string(family).expect("serializable"),
        d.to_string(),
        depth.to_string(),
        n.to_string(),
        samples.to_string(),
        fmt_f(r.empirical),
        fmt_f(r.analytic_lo),
        fmt_f(r.analytic_hi),
        fmt_f(r.std_error),
        r.pass.to_string(),
    ]);
    emit(cli, &table, round_all(serde_json::to_value(&r).expect("serializable")))?;
    Ok(r.pass)
}

fn run(cli: &Cli) -> Outcome {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(usage(format!("tol = {} must be positive", cli.tol)));
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    let family = load_family(cli.family.as_deref())?;
    match &cli.cmd {
        Cmd::Spectrum { d, top } => cmd_spectrum(cli, &family, *d, *top),
        Cmd::Complexity { d, eps, crit, path } => cmd_complexity(cli, &family, d, eps, *crit, *path),
        Cmd::Tractability { crit, tau, d_grid } => cmd_tractability(cli, &family, *crit, tau, d_grid),
        Cmd::Asymptotics { d_grid, eps } => cmd_asymptotics(cli, &family, d_grid, *eps),
        Cmd::Check { seeds, d, depth, inject_fault } => cmd_check(cli, *seeds, *d, *depth, *inject_fault),
        Cmd::VerifyMc { d, depth, n, samples } => cmd_verify_mc(cli, &family, *d, *depth, *n, *samples),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.strict => {
            eprintln!("error: result not certified or check failed (--strict)");
            ExitCode::from(3)
        }
        Ok(false) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
