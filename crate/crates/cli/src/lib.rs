//! Command-line driver: configuration, orchestration, and file emission for
//! the solve / scan / threshold / verify / density run modes.
//!
//! Configuration is flat `key = value` text with dotted keys; `--override`
//! flags take precedence over the file, and the dedicated flags
//! (`--lambda`, `--seed`, `--out`) over both. Outputs are written
//! atomically and are byte-identical for identical (config, seed) pairs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use dmsol_core::averaging::{AveragingMeasure, DensityPiece, DispersionProfile};
use dmsol_core::diagnostics::{run_all_multi, DiagnosticsOptions};
use dmsol_core::io;
use dmsol_core::potentials::Potential;
use dmsol_core::solver::{energy_scan, solve, threshold_estimate, Init, Method, SolverConfig};
use dmsol_core::{Grid, Problem};

#[derive(Debug)]
enum CliError {
    /// Unusable configuration: exit code 2.
    Config(String),
    /// A run that started but failed (non-convergence, failed
    /// verification): exit code 1.
    Run(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Run(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Solve,
    Scan,
    Threshold,
    Verify,
    Density,
}

#[derive(Parser, Debug)]
#[command(name = "dmsol", version, about = "Dispersion-managed soliton ground states: solve, scan, verify")]
struct Cli {
    /// Run mode (may also be given as --mode)
    #[arg(value_enum)]
    mode: Option<Mode>,
    #[arg(long = "mode", value_enum)]
    mode_flag: Option<Mode>,
    /// Flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mass, either a scalar or an inclusive range start:stop:step
    #[arg(long)]
    lambda: Option<String>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// RNG seed (overrides solver.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Override any config key, repeatable: --override solver.tol=1e-9
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Merged configuration with typed accessors.
struct Config {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Config {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| CliError::Config(format!("{key}: {e}"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| CliError::Config(format!("{key}: {e}"))),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| CliError::Config(format!("{key}: {e}"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| CliError::Config(format!("{key}: {e}"))),
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut values = BTreeMap::new();
    let base_dir = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        for (k, v) in io::parse_key_values(&text).map_err(|e| CliError::Config(e.to_string()))? {
            values.insert(k, v);
        }
    }
    if let Some(lambda) = &cli.lambda {
        values.insert("lambda".into(), lambda.clone());
    }
    if let Some(seed) = cli.seed {
        values.insert("solver.seed".into(), seed.to_string());
    }
    for ov in &cli.overrides {
        let Some((k, v)) = ov.split_once('=') else {
            return Err(CliError::Config(format!("--override needs KEY=VALUE, got {ov:?}")));
        };
        values.insert(k.trim().into(), v.trim().into());
    }
    Ok(Config { values, base_dir })
}

fn parse_lambda_list(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Config(format!("lambda {spec:?}: {m}"));
    if let Some((a, rest)) = spec.split_once(':') {
        let (b, c) = rest.split_once(':').ok_or_else(|| bad("expected start:stop:step".into()))?;
        let (start, stop, step): (f64, f64, f64) = (
            a.trim().parse().map_err(|e| bad(format!("{e}")))?,
            b.trim().parse().map_err(|e| bad(format!("{e}")))?,
            c.trim().parse().map_err(|e| bad(format!("{e}")))?,
        );
        if !(step > 0.0 && stop >= start) {
            return Err(bad("need step > 0 and stop >= start".into()));
        }
        let count = ((stop - start) / step + 1.5).floor() as usize;
        let mut out: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
        out.retain(|l| *l <= stop + 1e-12 * step);
        Ok(out)
    } else {
        Ok(vec![spec.trim().parse().map_err(|e| bad(format!("{e}")))?])
    }
}

fn build_potential(cfg: &Config) -> Result<Potential, CliError> {
    let kind = cfg.get("potential.kind").unwrap_or("power");
    let cfg_err = |e: dmsol_core::Error| CliError::Config(e.to_string());
    let mut p = match kind {
        "power" => Potential::power(cfg.f64_or("potential.gamma", 4.0)?).map_err(cfg_err)?,
        "saturated_log" => {
            Potential::saturated_log(cfg.f64_or("potential.sigma", 1.0)?).map_err(cfg_err)?
        }
        "saturated_rational" => {
            Potential::saturated_rational(cfg.f64_or("potential.sigma", 1.0)?).map_err(cfg_err)?
        }
        other => {
            return Err(CliError::Config(format!(
                "potential.kind must be power | saturated_log | saturated_rational, got {other:?}"
            )))
        }
    };
    if let Some(a) = cfg.get("potential.a_star") {
        let a: f64 = a.parse().map_err(|e| CliError::Config(format!("potential.a_star: {e}")))?;
        p = p.with_a_star(a).map_err(cfg_err)?;
    }
    if let Some(g0) = cfg.get("potential.gamma0") {
        let g0: f64 = g0.parse().map_err(|e| CliError::Config(format!("potential.gamma0: {e}")))?;
        p = p.with_gamma0(g0).map_err(cfg_err)?;
    }
    Ok(p)
}

fn build_measure(cfg: &Config) -> Result<AveragingMeasure, CliError> {
    let cfg_err = |e: dmsol_core::Error| CliError::Config(e.to_string());
    let kind = cfg.get("psi.kind").unwrap_or("uniform_interval");
    let measure = match kind {
        "uniform" | "uniform_interval" => AveragingMeasure::uniform(
            cfg.f64_or("psi.r0", 0.0)?,
            cfg.f64_or("psi.r1", 1.0)?,
        )
        .map_err(cfg_err)?,
        "from_profile" => {
            let spec = cfg
                .get("psi.profile")
                .ok_or_else(|| CliError::Config("psi.kind = from_profile needs psi.profile".into()))?;
            let mut pieces = Vec::new();
            for part in spec.split(',') {
                let (v, t) = part
                    .split_once(':')
                    .ok_or_else(|| CliError::Config(format!("psi.profile piece {part:?}: expected value:duration")))?;
                pieces.push((
                    v.trim().parse().map_err(|e| CliError::Config(format!("psi.profile: {e}")))?,
                    t.trim().parse().map_err(|e| CliError::Config(format!("psi.profile: {e}")))?,
                ));
            }
            let prof = DispersionProfile::new(pieces).map_err(cfg_err)?;
            AveragingMeasure::from_profile(&prof).map_err(cfg_err)?
        }
        "tabulated" => {
            let spec = cfg
                .get("psi.pieces")
                .ok_or_else(|| CliError::Config("psi.kind = tabulated needs psi.pieces".into()))?;
            let mut pieces = Vec::new();
            for part in spec.split(',') {
                let cols: Vec<&str> = part.split(':').collect();
                if cols.len() != 3 {
                    return Err(CliError::Config(format!(
                        "psi.pieces entry {part:?}: expected lo:hi:value"
                    )));
                }
                let p: Result<Vec<f64>, _> = cols.iter().map(|c| c.trim().parse::<f64>()).collect();
                let p = p.map_err(|e| CliError::Config(format!("psi.pieces: {e}")))?;
                pieces.push(DensityPiece { lo: p[0], hi: p[1], value: p[2] });
            }
            AveragingMeasure::tabulated(pieces).map_err(cfg_err)?
        }
        other => {
            return Err(CliError::Config(format!(
                "psi.kind must be uniform_interval | from_profile | tabulated, got {other:?}"
            )))
        }
    };
    let nodes = cfg.usize_or("quadrature.nodes", 32)?;
    measure.with_nodes_per_piece(nodes).map_err(cfg_err)
}

fn build_problem(cfg: &Config, lambda: f64) -> Result<Problem, CliError> {
    let cfg_err = |e: dmsol_core::Error| CliError::Config(e.to_string());
    let grid = Grid::new(cfg.usize_or("grid.n", 1024)?, cfg.f64_or("grid.length", 40.0)?)
        .map_err(cfg_err)?;
    Problem::new(
        lambda,
        cfg.f64_or("d_av", 0.0)?,
        build_potential(cfg)?,
        build_measure(cfg)?,
        grid,
    )
    .map_err(cfg_err)
}

fn build_solver(cfg: &Config) -> Result<SolverConfig, CliError> {
    let method = match cfg.get("solver.method").unwrap_or("projected_gradient") {
        "projected_gradient" => Method::ProjectedGradient,
        "ekeland_fixed_point" => Method::EkelandFixedPoint,
        "spectral_renormalization" => Method::SpectralRenormalization,
        other => {
            return Err(CliError::Config(format!(
                "solver.method must be projected_gradient | ekeland_fixed_point | spectral_renormalization, got {other:?}"
            )))
        }
    };
    let init = match cfg.get("solver.init").unwrap_or("gaussian:2") {
        "random" | "random_bandlimited" => Init::RandomBandlimited,
        spec if spec.starts_with("gaussian") => {
            let sigma0 = spec
                .split_once(':')
                .map(|(_, s)| s.trim().parse::<f64>())
                .transpose()
                .map_err(|e| CliError::Config(format!("solver.init: {e}")))?
                .unwrap_or(2.0);
            Init::Gaussian { sigma0 }
        }
        spec if spec.starts_with("file:") => {
            let path = io::resolve_relative(&cfg.base_dir, &spec[5..]);
            let f = io::read_field_csv(&path).map_err(|e| CliError::Config(e.to_string()))?;
            Init::Field(f)
        }
        other => {
            return Err(CliError::Config(format!(
                "solver.init must be gaussian[:sigma0] | random_bandlimited | file:PATH, got {other:?}"
            )))
        }
    };
    Ok(SolverConfig {
        method,
        tol: cfg.f64_or("solver.tol", 1e-8)?,
        max_iter: cfg.usize_or("solver.max_iter", 20_000)?,
        step: cfg.f64_or("solver.step", 0.5)?,
        shrink: cfg.f64_or("solver.shrink", 0.5)?,
        armijo: cfg.f64_or("solver.armijo", 1e-4)?,
        theta: cfg.f64_or("solver.theta", 0.5)?,
        seed: cfg.u64_or("solver.seed", 0)?,
        restarts: cfg.usize_or("solver.restarts", 1)?,
        init,
    })
}

fn lambda_list(cfg: &Config, default: &str) -> Result<Vec<f64>, CliError> {
    parse_lambda_list(cfg.get("lambda").unwrap_or(default))
}

fn run_err(e: dmsol_core::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn mode_solve(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let lambda = lambda_list(cfg, "2.0")?;
    if lambda.len() != 1 {
        return Err(CliError::Config("solve expects a single lambda".into()));
    }
    let prob = build_problem(cfg, lambda[0])?;
    let solver = build_solver(cfg)?;
    if !prob.measure().is_probability() {
        eprintln!("warning: averaging density has total mass {} (not normalized)", prob.measure().total());
    }
    let result = solve(&prob, &solver).map_err(run_err)?;
    io::write_result(out, &result, prob.lambda(), prob.d_av()).map_err(run_err)?;
    let boundary = result.field.boundary_ratio();
    if boundary > 1e-10 {
        eprintln!(
            "warning: minimizer boundary magnitude is {boundary:.2e} of the peak; enlarge grid.length"
        );
    }
    println!(
        "solve: E = {}, omega = {}, residual = {}, iterations = {}, converged = {}",
        io::fmt_full(result.energy),
        io::fmt_full(result.multiplier),
        io::fmt_full(result.residual),
        result.iterations,
        result.converged
    );
    Ok(if result.converged { 0 } else { 1 })
}

fn mode_scan(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let lambdas = lambda_list(cfg, "0.5:2:0.5")?;
    if lambdas.len() < 2 {
        return Err(CliError::Config("scan expects a lambda range start:stop:step".into()));
    }
    let prob = build_problem(cfg, lambdas[0])?;
    let solver = build_solver(cfg)?;
    let scan = energy_scan(&prob, &lambdas, &solver).map_err(run_err)?;
    io::write_scan_csv(&out.join("energy_table.csv"), &scan.rows).map_err(run_err)?;
    if !scan.monotone {
        eprintln!("warning: energy table is not non-increasing in lambda");
    }
    for row in &scan.rows {
        println!(
            "scan: lambda = {} E = {} converged = {}",
            io::fmt_full(row.lambda),
            io::fmt_full(row.energy),
            row.converged
        );
    }
    Ok(if scan.rows.iter().all(|r| r.converged) && scan.monotone { 0 } else { 1 })
}

fn mode_threshold(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let lo = cfg.f64_or("threshold.lo", 0.05)?;
    let hi = cfg.f64_or("threshold.hi", 4.5)?;
    let tol = cfg.f64_or("threshold.tol", 0.05)?;
    let prob = build_problem(cfg, hi)?;
    let solver = build_solver(cfg)?;
    let est = threshold_estimate(&prob, (lo, hi), tol, &solver).map_err(run_err)?;
    let mut rec = String::new();
    let _ = writeln!(rec, "lambda_cr = {}", io::fmt_full(est.lambda_cr));
    let _ = writeln!(rec, "uncertainty = {}", io::fmt_full(est.uncertainty));
    let _ = writeln!(rec, "bracket_lo = {}", io::fmt_full(lo));
    let _ = writeln!(rec, "bracket_hi = {}", io::fmt_full(hi));
    io::atomic_write(&out.join("threshold.txt"), &rec).map_err(run_err)?;
    let mut csv = String::from("lambda,energy\n");
    for (l, e) in &est.evaluations {
        let _ = writeln!(csv, "{},{}", io::fmt_full(*l), io::fmt_full(*e));
    }
    io::atomic_write(&out.join("bisection.csv"), &csv).map_err(run_err)?;
    println!(
        "threshold: lambda_cr = {} +- {}",
        io::fmt_full(est.lambda_cr),
        io::fmt_full(est.uncertainty)
    );
    Ok(0)
}

fn mode_verify(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let lambda = lambda_list(cfg, "2.0")?;
    let prob = build_problem(cfg, lambda[0])?;
    let opts = DiagnosticsOptions {
        include_scan: cfg.bool_or("diagnostics.full", false)?,
        subadditivity_delta: cfg.f64_or("diagnostics.delta", 0.25)?,
        solver: build_solver(cfg)?,
        seed: cfg.u64_or("solver.seed", 12345)?,
        ..Default::default()
    };
    let suite = run_all_multi(&[prob], &opts).map_err(run_err)?;
    io::atomic_write(&out.join("report.txt"), &suite.to_string()).map_err(run_err)?;
    io::write_report_csv(&out.join("report.csv"), &suite).map_err(run_err)?;
    print!("{suite}");
    Ok(if suite.passed() { 0 } else { 1 })
}

fn mode_density(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let measure = build_measure(cfg)?;
    let samples = cfg.usize_or("density.samples", 512)?;
    let (lo, hi) = measure.support();
    let pad = 0.05 * (hi - lo);
    let mut csv = String::from("r,psi\n");
    for i in 0..samples {
        let r = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / (samples - 1) as f64;
        let _ = writeln!(csv, "{},{}", io::fmt_full(r), io::fmt_full(measure.psi(r)));
    }
    io::atomic_write(&out.join("density.csv"), &csv).map_err(run_err)?;
    let mut qcsv = String::from("r,weight\n");
    for node in measure.nodes() {
        let _ = writeln!(qcsv, "{},{}", io::fmt_full(node.r), io::fmt_full(node.weight));
    }
    io::atomic_write(&out.join("quadrature.csv"), &qcsv).map_err(run_err)?;
    let mut rec = String::new();
    let _ = writeln!(rec, "support_lo = {}", io::fmt_full(lo));
    let _ = writeln!(rec, "support_hi = {}", io::fmt_full(hi));
    let _ = writeln!(rec, "total = {}", io::fmt_full(measure.total()));
    let _ = writeln!(rec, "is_probability = {}", measure.is_probability());
    for p in [1.0, 2.0, 4.0] {
        let _ = writeln!(
            rec,
            "lp_norm_{} = {}",
            p,
            io::fmt_full(measure.density_lp_norm(p).map_err(run_err)?)
        );
    }
    io::atomic_write(&out.join("density.txt"), &rec).map_err(run_err)?;
    if !measure.is_probability() {
        eprintln!("warning: density total mass is {} (not a probability density)", measure.total());
    }
    println!("density: support [{}, {}], total {}", lo, hi, measure.total());
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let mode = match (cli.mode, cli.mode_flag) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config("conflicting positional mode and --mode".into()))
        }
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => {
            return Err(CliError::Config(
                "no mode given; expected solve | scan | threshold | verify | density".into(),
            ))
        }
    };
    let cfg = load_config(cli)?;
    let out = cli.out.clone();
    match mode {
        Mode::Solve => mode_solve(&cfg, &out),
        Mode::Scan => mode_scan(&cfg, &out),
        Mode::Threshold => mode_threshold(&cfg, &out),
        Mode::Verify => mode_verify(&cfg, &out),
        Mode::Density => mode_density(&cfg, &out),
    }
}

/// Parse arguments and run; returns the process exit code
/// (0 success, 1 run failure, 2 configuration error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success-style errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_ranges() {
        assert_eq!(parse_lambda_list("2.0").unwrap(), vec![2.0]);
        let r = parse_lambda_list("0.25:1:0.25").unwrap();
        assert_eq!(r, vec![0.25, 0.5, 0.75, 1.0]);
        assert!(parse_lambda_list("1:0:0.25").is_err());
        assert!(parse_lambda_list("a:b:c").is_err());
    }

    #[test]
    fn missing_mode_is_config_error() {
        assert_eq!(run(["dmsol"]), 2);
        assert_eq!(run(["dmsol", "--config", "/nonexistent/x.cfg", "solve"]), 2);
    }
}
