//! Orchestration of one configured experiment and its output files.
//!
//! Output directory layout:
//!
//! - `eigenvalues.csv`: `scheme,level,h,index,re,im,residual`, ascending in the spectral order
//!   within each level.
//! - `orders.csv`: `scheme,quantity,index,i,order` where `quantity` is `lambda`, `u` or `phi`,
//!   `index` the eigenvalue index on the finest level, `i` the level of the formula and `order`
//!   a number or `undefined`.
//! - `run.json`: configuration echo, DOF counts, timings, warnings, soft-check flags and per-level
//!   solver records.
//! - `config.echo`: the configuration in input syntax.
//! - `plotdata/{scheme}_lambda_{index}.dat`: rows `h |lambda_h - lambda_finest|`.
//!
//! Floating-point values are written with 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::config::{ConfigError, RunConfig};
use crate::eigen::{verify_conjugate_closure, ClosureReport, EigenPair};
use crate::mesh::MeshError;
use crate::multilevel::{
    algorithm1, build_hierarchy, convergence_report, single_level_solve, ConvergenceReport, LevelHierarchy, LevelRecord,
    MultilevelError,
};

/// Tolerance of the conjugate-closure check applied to every level.
pub const CLOSURE_TOL: f64 = 1e-6;

pub const EIGENVALUES_HEADER: &str = "scheme,level,h,index,re,im,residual";
pub const ORDERS_HEADER: &str = "scheme,quantity,index,i,order";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("domain: {0}")]
    Mesh(#[from] MeshError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for configuration and input errors, 3 for solver and output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Mesh(_) | RunError::Input(_) => 2,
            RunError::Solver(_) | RunError::Io { .. } => 3,
        }
    }
}

fn classify(err: MultilevelError) -> RunError {
    match err {
        MultilevelError::InvalidMesh(m) => RunError::Input(format!("invalid initial mesh: {m}")),
        MultilevelError::Assembly(e @ AssemblyError::OutOfBounds { .. }) => RunError::Input(e.to_string()),
        other => RunError::Solver(other.to_string()),
    }
}

/// Eigenpairs of one scheme on each completed level.
#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub name: &'static str,
    pub pairs: Vec<Vec<EigenPair>>,
    pub converged: Vec<bool>,
    pub seconds: Vec<f64>,
    /// Enrichment records (multi-level scheme only).
    pub records: Vec<LevelRecord>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl SchemeResult {
    fn new(name: &'static str) -> Self {
        SchemeResult {
            name,
            pairs: Vec::new(),
            converged: Vec::new(),
            seconds: Vec::new(),
            records: Vec::new(),
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn eigenvalues(&self, level: usize) -> Vec<Complex64> {
        self.pairs[level].iter().map(|p| p.lambda).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub dofs: Vec<usize>,
    pub mesh_sizes: Vec<f64>,
    pub build_seconds: f64,
    pub schemes: Vec<SchemeResult>,
    /// `(scheme, level, report)` for every completed level.
    pub closure: Vec<(&'static str, usize, ClosureReport)>,
    pub reports: Vec<(&'static str, ConvergenceReport)>,
    pub warnings: Vec<String>,
    pub flags: Vec<String>,
    pub partial: bool,
}

impl RunResult {
    pub fn scheme(&self, name: &str) -> Option<&SchemeResult> {
        self.schemes.iter().find(|s| s.name == name)
    }

    pub fn report(&self, name: &str) -> Option<&ConvergenceReport> {
        self.reports.iter().find(|(n, _)| *n == name).map(|(_, r)| r)
    }

    /// First solver error message, if any scheme failed.
    pub fn error(&self) -> Option<&str> {
        self.schemes.iter().find_map(|s| s.error.as_deref())
    }
}

/// Builds the hierarchy and runs the configured schemes without writing files.
///
/// Configuration and input problems are returned as errors; solver failures are recorded in the
/// result, which then holds the completed levels and `partial = true`.
pub fn execute(config: &RunConfig) -> Result<(RunResult, LevelHierarchy), RunError> {
    let material = config.material().map_err(|e| RunError::Input(e.to_string()))?;
    let mesh = config.initial_mesh()?;
    let t0 = Instant::now();
    let h = build_hierarchy(mesh, config.levels, config.degrees(), &material, config.bform).map_err(classify)?;
    let build_seconds = t0.elapsed().as_secs_f64();
    let mut result = RunResult {
        config: config.clone(),
        dofs: h.levels.iter().map(|l| l.dim()).collect(),
        mesh_sizes: h.levels.iter().map(|l| l.h).collect(),
        build_seconds,
        schemes: Vec::new(),
        closure: Vec::new(),
        reports: Vec::new(),
        warnings: Vec::new(),
        flags: Vec::new(),
        partial: false,
    };

    if config.mode.single() {
        let mut s = SchemeResult::new("single");
        for level in 0..h.levels.len() {
            let t = Instant::now();
            match single_level_solve(&h, level, &config.solver) {
                Ok(r) => {
                    if !r.converged {
                        s.warnings.push(format!(
                            "single: level {level} did not converge in {} restarts (max residual {:.3e})",
                            r.restarts,
                            r.max_residual()
                        ));
                    }
                    s.converged.push(r.converged);
                    s.pairs.push(r.pairs);
                    s.seconds.push(t.elapsed().as_secs_f64());
                }
                Err(e) => {
                    s.error = Some(format!("single: level {level}: {e}"));
                    break;
                }
            }
        }
        result.schemes.push(s);
    }

    if config.mode.multi() {
        let mut s = SchemeResult::new("multi");
        let t = Instant::now();
        match algorithm1(&h, &config.solver) {
            Ok(r) => {
                if !r.coarse_converged {
                    s.warnings.push("multi: coarse solve did not converge".into());
                }
                s.warnings.extend(r.warnings.iter().map(|w| format!("multi: {w}")));
                s.converged = vec![true; r.pairs.len()];
                s.converged[0] = r.coarse_converged;
                s.seconds = r.records.iter().map(|rec| rec.seconds).collect();
                s.pairs = r.pairs;
                s.records = r.records;
            }
            Err(e) => {
                s.error = Some(format!("multi: {e}"));
                s.seconds.push(t.elapsed().as_secs_f64());
            }
        }
        result.schemes.push(s);
    }

    for s in &result.schemes {
        result.warnings.extend(s.warnings.iter().cloned());
        for level in 0..s.pairs.len() {
            let report = verify_conjugate_closure(&s.eigenvalues(level), CLOSURE_TOL);
            for v in &report.violations {
                result.warnings.push(format!(
                    "{}: level {level}: eigenvalue {} = {}{:+}i has no conjugate partner",
                    s.name, v.index, v.re, v.im
                ));
            }
            result.closure.push((s.name, level, report));
        }
        if s.error.is_some() {
            result.partial = true;
        } else if s.pairs.len() == h.levels.len() {
            let report = convergence_report(&h, &s.pairs);
            result.flags.extend(report.flags.iter().map(|f| format!("{}: {f}", s.name)));
            result.reports.push((s.name, report));
        }
    }
    Ok((result, h))
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn eigenvalues_csv(r: &RunResult) -> String {
    let mut s = String::from(EIGENVALUES_HEADER);
    s.push('\n');
    for scheme in &r.schemes {
        for (level, pairs) in scheme.pairs.iter().enumerate() {
            for (index, p) in pairs.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{level},{},{index},{},{},{}",
                    scheme.name,
                    num(r.mesh_sizes[level]),
                    num(p.lambda.re),
                    num(p.lambda.im),
                    num(p.residual)
                );
            }
        }
    }
    s
}

pub fn orders_csv(r: &RunResult) -> String {
    let mut s = String::from(ORDERS_HEADER);
    s.push('\n');
    let mut rows = |scheme: &str, quantity: &str, index: usize, orders: &[Option<f64>]| {
        for (k, o) in orders.iter().enumerate() {
            let v = o.map(num).unwrap_or_else(|| "undefined".into());
            let _ = writeln!(s, "{scheme},{quantity},{index},{},{v}", k + 1);
        }
    };
    for (name, report) in &r.reports {
        for seq in &report.sequences {
            rows(name, "lambda", seq.index, &seq.orders);
            if let Some(u) = &seq.u_orders {
                rows(name, "u", seq.index, u);
            }
            if let Some(phi) = &seq.phi_orders {
                rows(name, "phi", seq.index, phi);
            }
        }
    }
    s
}

/// Human-readable table with the content of `eigenvalues.csv` and the eigenvalue orders.
pub fn print_table(r: &RunResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<7} {:>5} {:>10} {:>5} {:>20} {:>20} {:>10}",
        "scheme", "level", "h", "index", "Re lambda", "Im lambda", "residual"
    );
    for scheme in &r.schemes {
        for (level, pairs) in scheme.pairs.iter().enumerate() {
            for (index, p) in pairs.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{:<7} {:>5} {:>10.4e} {:>5} {:>20.11e} {:>20.11e} {:>10.2e}",
                    scheme.name, level, r.mesh_sizes[level], index, p.lambda.re, p.lambda.im, p.residual
                );
            }
        }
    }
    for (name, report) in &r.reports {
        if report.sequences.first().is_none_or(|q| q.orders.is_empty()) {
            continue;
        }
        let _ = writeln!(s, "\norders ({name})");
        for seq in &report.sequences {
            let o: Vec<String> = seq
                .orders
                .iter()
                .map(|o| o.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()))
                .collect();
            let _ = writeln!(s, "  lambda_{:<3} {}", seq.index, o.join("  "));
        }
    }
    for w in r.warnings.iter().chain(&r.flags) {
        let _ = writeln!(s, "note: {w}");
    }
    s
}

fn run_json(r: &RunResult) -> serde_json::Value {
    let schemes: Vec<serde_json::Value> = r
        .schemes
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "levels_completed": s.pairs.len(),
                "converged": s.converged,
                "seconds": s.seconds,
                "records": s.records,
                "error": s.error,
            })
        })
        .collect();
    let closure: Vec<serde_json::Value> = r
        .closure
        .iter()
        .map(|(name, level, rep)| json!({ "scheme": name, "level": level, "closed": rep.is_closed(), "violations": rep.violations }))
        .collect();
    let reports: serde_json::Map<String, serde_json::Value> = r
        .reports
        .iter()
        .map(|(name, rep)| (name.to_string(), serde_json::to_value(rep).unwrap_or_default()))
        .collect();
    json!({
        "config": r.config.to_json(),
        "dofs": r.dofs,
        "mesh_sizes": r.mesh_sizes,
        "timings": { "build_seconds": r.build_seconds },
        "closure_tol": CLOSURE_TOL,
        "schemes": schemes,
        "closure": closure,
        "convergence": reports,
        "warnings": r.warnings,
        "flags": r.flags,
        "partial": r.partial,
        "error": r.error(),
    })
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes every output file of `r` into `dir`.
pub fn write_outputs(r: &RunResult, dir: &Path) -> Result<(), RunError> {
    let io = |source| RunError::Io {
        path: dir.display().to_string(),
        source,
    };
    let plot = dir.join("plotdata");
    fs::create_dir_all(&plot).map_err(io)?;
    write(&dir.join("eigenvalues.csv"), &eigenvalues_csv(r))?;
    write(&dir.join("orders.csv"), &orders_csv(r))?;
    write(&dir.join("config.echo"), &r.config.to_text())?;
    let text = serde_json::to_string_pretty(&run_json(r)).unwrap_or_default();
    write(&dir.join("run.json"), &text)?;
    for (name, report) in &r.reports {
        for seq in &report.sequences {
            let Some(Some((fre, fim))) = seq.values.last() else { continue };
            let fine = Complex64::new(*fre, *fim);
            let mut s = String::from("# h |lambda_h - lambda_finest|\n");
            for (level, v) in seq.values.iter().enumerate().take(seq.values.len() - 1) {
                if let Some((re, im)) = v {
                    let _ = writeln!(s, "{} {}", num(r.mesh_sizes[level]), num((Complex64::new(*re, *im) - fine).norm()));
                }
            }
            write(&plot.join(format!("{name}_lambda_{}.dat", seq.index)), &s)?;
        }
    }
    Ok(())
}

/// Runs the configured experiment and writes its outputs.
///
/// After a solver failure the completed levels are still written, `run.json` is marked partial
/// and the failure is returned.
pub fn run(config: &RunConfig) -> Result<RunResult, RunError> {
    let (result, _) = execute(config)?;
    write_outputs(&result, &config.output_dir)?;
    match result.error() {
        Some(e) => Err(RunError::Solver(e.to_string())),
        None => Ok(result),
    }
}

/// Outcome of a dry-run validation.
#[derive(Debug, Clone)]
pub struct CheckSummary {
    pub case: crate::assembly::Case,
    pub dofs: Vec<usize>,
    pub mesh_sizes: Vec<f64>,
}

/// Validates a configuration without solving: mesh, coefficient bounds on the coarse level and
/// the DOF count of every level.
pub fn check(config: &RunConfig) -> Result<CheckSummary, RunError> {
    let material = config.material().map_err(|e| RunError::Input(e.to_string()))?;
    let mesh = config.initial_mesh()?;
    let issues = mesh.validate();
    if !issues.is_empty() {
        let text: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        return Err(RunError::Input(format!("invalid initial mesh: {}", text.join("; "))));
    }
    let mut mesh = std::sync::Arc::new(mesh);
    let mut dofs = Vec::new();
    let mut mesh_sizes = Vec::new();
    for level in 0..=config.levels {
        if level > 0 {
            mesh = std::sync::Arc::new(mesh.refine_red());
        }
        let ps = crate::fespace::ProductSpace::new(mesh.clone(), config.degrees())
            .map_err(|e| RunError::Input(e.to_string()))?;
        if level == 0 {
            crate::assembly::assemble_a(&ps, &material).map_err(|e| RunError::Input(e.to_string()))?;
        }
        dofs.push(ps.system_dim());
        mesh_sizes.push(mesh.mesh_size());
    }
    Ok(CheckSummary {
        case: material.case,
        dofs,
        mesh_sizes,
    })
}

/// Parses an `eigenvalues.csv` back into `(scheme, level, index, lambda, residual)` rows.
pub fn parse_eigenvalues_csv(text: &str) -> Result<Vec<(String, usize, usize, Complex64, f64)>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(EIGENVALUES_HEADER) {
        return Err("unexpected header".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(format!("row {}: expected 7 fields", i + 2));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 2));
            let u = |s: &str| s.parse::<usize>().map_err(|e| format!("row {}: {e}", i + 2));
            Ok((f[0].to_string(), u(f[1])?, u(f[3])?, Complex64::new(p(f[4])?, p(f[5])?), p(f[6])?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn small(mode: &str) -> RunConfig {
        let text = format!(
            "[domain]\nbuiltin = unit_square\nh0 = 0.5\n[coefficient]\nn = 16\n[discretization]\nlevels = 2\n[solver]\nk = 4\nmode = {mode}\n"
        );
        RunConfig::parse(&text, Path::new("/nonexistent")).unwrap()
    }

    #[test]
    fn csv_round_trip_and_agreement() {
        let (r, h) = execute(&small("both")).unwrap();
        assert!(!r.partial);
        assert_eq!(r.dofs.len(), h.levels.len());
        let csv = eigenvalues_csv(&r);
        let rows = parse_eigenvalues_csv(&csv).unwrap();
        let total: usize = r.schemes.iter().flat_map(|s| s.pairs.iter()).map(|p| p.len()).sum();
        assert_eq!(rows.len(), total);
        assert!(total >= 2 * 3 * 4);
        for (scheme, level, index, lambda, _) in &rows {
            let p = &r.scheme(scheme).unwrap().pairs[*level][*index];
            assert!((p.lambda - lambda).norm() <= 1e-11 * lambda.norm());
        }
        assert!(r.closure.iter().all(|(_, _, c)| c.is_closed()), "{}", print_table(&r));
        let orders = orders_csv(&r);
        assert!(orders.starts_with(ORDERS_HEADER));
        assert!(orders.lines().count() > 1);
        assert!(print_table(&r).contains("Re lambda"));
    }

    #[test]
    fn out_of_bounds_coefficient_is_an_input_error() {
        let mut c = small("single");
        c.n = crate::coefficient::parse_coefficient("x1 + 16").unwrap();
        c.n_s = 16.0;
        c.n_b = 16.5;
        let err = execute(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }

    #[test]
    fn writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small("single");
        c.levels = 1;
        c.output_dir = PathBuf::from(dir.path());
        run(&c).unwrap();
        for f in ["eigenvalues.csv", "orders.csv", "run.json", "config.echo"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
        assert_eq!(json["partial"], false);
        assert_eq!(json["dofs"].as_array().unwrap().len(), 2);
    }
}
