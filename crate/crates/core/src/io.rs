//! Text persistence: field CSV, result records, trace and report files.
//!
//! Everything is text. Fields go to CSV with 12 significant digits; scalar
//! records use 17 significant digits so f64 values round-trip exactly.
//! Writes are atomic (temp file in the target directory, then rename).

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralField};
use crate::diagnostics::SuiteReport;
use crate::solver::{ScanRow, SolveResult, TraceEntry};

pub const RESULT_FORMAT_VERSION: u32 = 1;

/// 17 significant digits; round-trips any f64.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// 12 significant digits; the field CSV precision.
pub fn fmt_field(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write `contents` to `path` atomically.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Field CSV: header `x,re,im`, one row per sample.
pub fn write_field_csv(path: &Path, f: &SpectralField) -> Result<()> {
    let mut out = String::with_capacity(f.grid().n() * 48);
    out.push_str("x,re,im\n");
    for (j, z) in f.samples().iter().enumerate() {
        out.push_str(&fmt_field(f.grid().x(j)));
        out.push(',');
        out.push_str(&fmt_field(z.re));
        out.push(',');
        out.push_str(&fmt_field(z.im));
        out.push('\n');
    }
    atomic_write(path, &out)
}

/// Read a field CSV back; the grid is reconstructed from the x column.
pub fn read_field_csv(path: &Path) -> Result<SpectralField> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x,re,im" => {}
        other => return Err(Error::Parse(format!("bad field CSV header: {other:?}"))),
    }
    let mut xs = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("field CSV row {} has {} columns", i + 2, cols.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))
        };
        xs.push(parse(cols[0])?);
        samples.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    if xs.len() < 8 {
        return Err(Error::Parse(format!("field CSV has only {} rows", xs.len())));
    }
    let dx = xs[1] - xs[0];
    let n = xs.len();
    let grid = Grid::new(n, dx * n as f64)?;
    SpectralField::new(grid, samples)
}

/// Scalar part of a stored solve, plus the context needed to interpret it.
#[derive(Debug, Clone)]
pub struct StoredResult {
    pub lambda: f64,
    pub d_av: f64,
    pub energy: f64,
    pub multiplier: f64,
    pub residual: f64,
    pub linf_cap: f64,
    pub kappa_star_at_cap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub collapsed: bool,
    pub field: SpectralField,
}

/// Parse flat `key = value` text; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!("line {}: expected key = value, got {raw:?}", i + 1)));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Write the result record, the field CSV, and the iteration trace into a
/// directory (`result.txt`, `soliton.csv`, `trace.csv`).
pub fn write_result(dir: &Path, r: &SolveResult, lambda: f64, d_av: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut rec = String::new();
    rec.push_str(&format!("format_version = {RESULT_FORMAT_VERSION}\n"));
    rec.push_str(&format!("lambda = {}\n", fmt_full(lambda)));
    rec.push_str(&format!("d_av = {}\n", fmt_full(d_av)));
    rec.push_str(&format!("energy = {}\n", fmt_full(r.energy)));
    rec.push_str(&format!("multiplier = {}\n", fmt_full(r.multiplier)));
    rec.push_str(&format!("residual = {}\n", fmt_full(r.residual)));
    rec.push_str(&format!("linf_cap = {}\n", fmt_full(r.linf_cap)));
    rec.push_str(&format!("kappa_star_at_cap = {}\n", fmt_full(r.kappa_star_at_cap)));
    rec.push_str(&format!("iterations = {}\n", r.iterations));
    rec.push_str(&format!("converged = {}\n", r.converged));
    rec.push_str(&format!("collapsed = {}\n", r.collapsed));
    rec.push_str("field_csv = soliton.csv\n");
    atomic_write(&dir.join("result.txt"), &rec)?;
    write_field_csv(&dir.join("soliton.csv"), &r.field)?;
    write_trace_csv(&dir.join("trace.csv"), &r.trace)?;
    Ok(())
}

/// Read a result directory back. The trace is not reloaded (it is a log
/// artifact, not part of the record contract).
pub fn read_result(dir: &Path) -> Result<StoredResult> {
    let text = fs::read_to_string(dir.join("result.txt"))?;
    let kv = parse_key_values(&text)?;
    let get = |key: &str| -> Result<&str> {
        kv.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("result record is missing {key}")))
    };
    let version: u32 = get("format_version")?
        .parse()
        .map_err(|e| Error::Parse(format!("format_version: {e}")))?;
    if version != RESULT_FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported result format version {version} (expected {RESULT_FORMAT_VERSION})"
        )));
    }
    let num = |key: &str| -> Result<f64> {
        get(key)?.parse::<f64>().map_err(|e| Error::Parse(format!("{key}: {e}")))
    };
    let boolean = |key: &str| -> Result<bool> {
        get(key)?.parse::<bool>().map_err(|e| Error::Parse(format!("{key}: {e}")))
    };
    let field = read_field_csv(&dir.join(get("field_csv")?))?;
    Ok(StoredResult {
        lambda: num("lambda")?,
        d_av: num("d_av")?,
        energy: num("energy")?,
        multiplier: num("multiplier")?,
        residual: num("residual")?,
        linf_cap: num("linf_cap")?,
        kappa_star_at_cap: num("kappa_star_at_cap")?,
        iterations: get("iterations")?.parse().map_err(|e| Error::Parse(format!("iterations: {e}")))?,
        converged: boolean("converged")?,
        collapsed: boolean("collapsed")?,
        field,
    })
}

pub fn write_trace_csv(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    let mut out = String::from("iteration,energy,residual\n");
    for (i, t) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", fmt_full(t.energy), fmt_full(t.residual)));
    }
    atomic_write(path, &out)
}

/// `energy_table.csv` rows for a scan.
pub fn write_scan_csv(path: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut out = String::from("lambda,energy,omega,cap,kappa_star,residual,converged\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_full(r.lambda),
            fmt_full(r.energy),
            fmt_full(r.multiplier),
            fmt_full(r.linf_cap),
            fmt_full(r.kappa_star),
            fmt_full(r.residual),
            r.converged
        ));
    }
    atomic_write(path, &out)
}

/// Machine-readable verification report: one record per check.
pub fn write_report_csv(path: &Path, suite: &SuiteReport) -> Result<()> {
    let mut out = String::from("name,lhs,rhs,margin,tol,passed\n");
    for r in &suite.reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.name,
            fmt_full(r.lhs),
            fmt_full(r.rhs),
            fmt_full(r.margin()),
            fmt_full(r.tol),
            r.passed
        ));
    }
    atomic_write(path, &out)
}

/// Resolve a path relative to a base directory unless it is absolute.
pub fn resolve_relative(base: &Path, p: &str) -> PathBuf {
    let pb = PathBuf::from(p);
    if pb.is_absolute() {
        pb
    } else {
        base.join(pb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::AveragingMeasure;
    use crate::nonlinearity::Problem;
    use crate::potentials::Potential;
    use crate::propagator::gaussian_pulse;
    use crate::solver::{solve, SolverConfig};

    #[test]
    fn field_csv_roundtrip_precision() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(128, 20.0).unwrap();
        let f = gaussian_pulse(1.3, 0.7, &grid).unwrap().scaled(Complex64::new(1.0, 0.25));
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &f).unwrap();
        let g = read_field_csv(&path).unwrap();
        assert_eq!(g.grid().n(), 128);
        assert!((g.grid().length() - 20.0).abs() < 1e-9);
        let peak = f.samples().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in f.samples().iter().zip(g.samples()) {
            assert!((a - b).norm() <= 1e-11 * peak);
        }
    }

    #[test]
    fn result_record_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let prob = Problem::new(
            1.0,
            0.0,
            Potential::power(4.0).unwrap(),
            AveragingMeasure::uniform(0.0, 1.0).unwrap().with_nodes_per_piece(16).unwrap(),
            Grid::new(128, 20.0).unwrap(),
        )
        .unwrap();
        let cfg = SolverConfig { tol: 1e-6, max_iter: 2000, ..Default::default() };
        let r = solve(&prob, &cfg).unwrap();
        write_result(dir.path(), &r, 1.0, 0.0).unwrap();
        let back = read_result(dir.path()).unwrap();
        assert_eq!(back.energy.to_bits(), r.energy.to_bits());
        assert_eq!(back.multiplier.to_bits(), r.multiplier.to_bits());
        assert_eq!(back.residual.to_bits(), r.residual.to_bits());
        assert_eq!(back.iterations, r.iterations);
        assert_eq!(back.converged, r.converged);
        let peak = r.field.samples().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in r.field.samples().iter().zip(back.field.samples()) {
            assert!((a - b).norm() <= 1e-11 * peak);
        }
    }

    #[test]
    fn version_mismatch_and_truncation_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        atomic_write(&dir.path().join("result.txt"), "format_version = 99\n").unwrap();
        assert!(read_result(dir.path()).is_err());
        atomic_write(&dir.path().join("f.csv"), "x,re,im\n1.0,2.0\n").unwrap();
        assert!(read_field_csv(&dir.path().join("f.csv")).is_err());
        assert!(parse_key_values("novalue\n").is_err());
    }

    #[test]
    fn full_precision_formatting() {
        let x = -1.2345678901234567e-8;
        let s = fmt_full(x);
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
