//! The four commands behind the `prior-ci` binary.
//!
//! Every output file starts with `#` header lines recording the tool
//! version, the configuration hash and the seed. Numbers are written with
//! 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, LoadedConfig, Mode};
use crate::optimizer::{solve, SolveError};
use crate::quadrature::{e1_bound, e2_bound, e3_bound, lemma2_value, truncation_point, Evaluator, QuadratureError};
use crate::regression::{fit, new_interval, standard_interval, RegressionData, RegressionError};
use crate::spline::{fmt_f64, IntervalFunctions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("configuration mismatch: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Usage(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    /// 2 configuration, 3 numerical non-convergence, 4 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Mismatch(_) | CliError::Usage(_) => 2,
            CliError::NotConverged(_) | CliError::Numerical(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::Mismatch(m) => CliError::Mismatch(m),
            QuadratureError::InvalidConfig(m) => CliError::Config(ConfigError::Invalid(m)),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Quadrature(q) => q.into(),
            SolveError::Grid(m) | SolveError::Infeasible(m) => CliError::Config(ConfigError::Invalid(m)),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<RegressionError> for CliError {
    fn from(e: RegressionError) -> Self {
        match e {
            RegressionError::DofMismatch { .. } => CliError::Mismatch(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Files written and a one-line summary for the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn header(cfg: &LoadedConfig) -> String {
    format!(
        "# prior-ci {VERSION}\n# config_sha256 = {}\n# seed = {}\n",
        cfg.sha256, cfg.config.run.seed
    )
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(&path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Runs the command selected by `run.mode`.
pub fn run(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let run = &cfg.config.run;
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| CliError::Usage(format!("mode {:?} needs {flag}", run.mode)))
    };
    match run.mode {
        Mode::Solve => cmd_solve(cfg),
        Mode::Curves => cmd_curves(cfg, &need(&run.functions, "--functions")?),
        Mode::Apply => cmd_apply(cfg, &need(&run.functions, "--functions")?, &need(&run.data, "--data")?),
        Mode::Bounds => cmd_bounds(cfg),
    }
}

/// Solves for the interval functions and writes `functions.txt` and
/// `solve_report.txt`. Both files are written even when the solve fails,
/// in which case the result is [`CliError::NotConverged`].
pub fn cmd_solve(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let c = &cfg.config;
    let problem = c.problem_config()?;
    let report = solve(&problem, &c.grid()?, &c.quadrature_spec()?, &c.solver_options())?;
    let f = IntervalFunctions::build(problem.layout(), report.z_star.clone()).map_err(|e| CliError::Numerical(e.to_string()))?;
    let head = header(cfg);
    let files = vec![
        write(c.run.out.join("functions.txt"), &format!("{head}{}", f.to_table()))?,
        write(c.run.out.join("solve_report.txt"), &format!("{head}{}", report.to_text()))?,
    ];
    let summary = format!(
        "converged = {}, objective = {}, min dense coverage = {} at gamma = {}, iterations = {}, restarts = {}",
        report.converged, report.objective_value, report.min_coverage_dense, report.argmin_gamma, report.iterations, report.restarts
    );
    if !report.converged {
        return Err(CliError::NotConverged(format!("{} ({summary}); diagnostics in {}", report.message, files[1].display())));
    }
    Ok(Outcome { files, summary })
}

fn read_functions(path: &Path) -> Result<IntervalFunctions, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    IntervalFunctions::from_table(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn check_match(f: &IntervalFunctions, cfg: &LoadedConfig) -> Result<(), CliError> {
    let layout = cfg.config.problem_config()?.layout();
    let mut diffs = Vec::new();
    if f.m() != layout.m {
        diffs.push(format!("m {} vs {}", f.m().get(), layout.m.get()));
    }
    if f.alpha() != layout.alpha {
        diffs.push(format!("alpha {} vs {}", f.alpha(), layout.alpha));
    }
    if f.knots().positions() != layout.knots.positions() {
        diffs.push(format!("knots {:?} vs {:?}", f.knots().positions(), layout.knots.positions()));
    }
    if f.layout().s_end != layout.s_end {
        diffs.push(format!("s_end {} vs {}", f.layout().s_end.as_str(), layout.s_end.as_str()));
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("functions file vs config: {}", diffs.join(", "))))
    }
}

/// Coverage and scaled expected length of the functions in `functions`
/// over the dense grid, written to `curves.csv` as `gamma,coverage,e,e2`.
pub fn cmd_curves(cfg: &LoadedConfig, functions: &Path) -> Result<Outcome, CliError> {
    let c = &cfg.config;
    let f = read_functions(functions)?;
    check_match(&f, cfg)?;
    let ev = Evaluator::new(&c.problem_config()?, &c.quadrature_spec()?)?;
    let grid = c.grid()?;
    let rows = grid
        .dense_gammas
        .par_iter()
        .map(|&g| Ok((g, ev.coverage_at(g, &f)?, ev.scaled_length_at(g, &f)?)))
        .collect::<Result<Vec<_>, QuadratureError>>()?;
    let mut out = header(cfg);
    out.push_str("gamma,coverage,e,e2\n");
    let mut min = (f64::INFINITY, f64::NAN);
    for &(g, cov, e) in &rows {
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(g), fmt_f64(cov), fmt_f64(e), fmt_f64(e * e));
        if cov < min.0 {
            min = (cov, g);
        }
    }
    let file = write(c.run.out.join("curves.csv"), &out)?;
    Ok(Outcome {
        files: vec![file],
        summary: format!("{} rows, min coverage = {} at gamma = {}", rows.len(), min.0, min.1),
    })
}

/// Fits the regression in `data` and writes the standard and new intervals
/// to `intervals.csv`.
pub fn cmd_apply(cfg: &LoadedConfig, functions: &Path, data: &Path) -> Result<Outcome, CliError> {
    let c = &cfg.config;
    let r = c
        .regression
        .as_ref()
        .ok_or_else(|| CliError::Usage("mode apply needs a [regression] section".into()))?;
    let f = read_functions(functions)?;
    check_match(&f, cfg)?;
    let rd = RegressionData::from_csv_path(
        data,
        &r.response,
        &r.predictors,
        r.intercept,
        DVector::from_column_slice(&r.a),
        DVector::from_column_slice(&r.c),
        r.t_shift,
    )?;
    let s = fit(&rd)?;
    if s.degenerate {
        return Err(CliError::Data("the fit is degenerate (zero residuals)".into()));
    }
    let std_iv = standard_interval(&s, f.alpha())?;
    let new_iv = new_interval(&s, &f)?;
    let mut out = header(cfg);
    let _ = writeln!(out, "# m = {}", s.m.get());
    let _ = writeln!(out, "# theta_hat = {}", fmt_f64(s.theta_hat));
    let _ = writeln!(out, "# tau_hat = {}", fmt_f64(s.tau_hat));
    let _ = writeln!(out, "# sigma_hat = {}", fmt_f64(s.sigma_hat));
    let _ = writeln!(out, "# rho = {}", fmt_f64(s.rho));
    let mut summary = format!("gamma_stat = {}, standard half-width = {}, new half-width = {}", s.gamma_stat, std_iv.half_width, new_iv.half_width);
    // The functions carry a coverage guarantee only for the rho they were
    // solved for.
    if (s.rho - c.problem.rho).abs() > 1e-9 {
        let warning = format!("data rho = {} differs from the configured rho = {}", s.rho, c.problem.rho);
        let _ = writeln!(out, "# warning = {warning}");
        summary.push_str(&format!("; warning: {warning}"));
    }
    out.push_str("interval,lower,center,upper,half_width,gamma_stat\n");
    for (name, iv) in [("standard", std_iv), ("new", new_iv)] {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            fmt_f64(iv.lower),
            fmt_f64(iv.center),
            fmt_f64(iv.upper),
            fmt_f64(iv.half_width),
            fmt_f64(s.gamma_stat)
        );
    }
    let file = write(c.run.out.join("intervals.csv"), &out)?;
    Ok(Outcome { files: vec![file], summary })
}

/// Truncation bounds over a grid of `c`, plus the selected truncation
/// point, written to `bounds.csv`.
pub fn cmd_bounds(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let c = &cfg.config;
    let m = c.dof()?;
    let q = &c.quadrature;
    let num = |e: crate::special::DomainError| CliError::Numerical(e.to_string());
    let selected = match q.c {
        Some(v) => v,
        None => truncation_point(m, q.eps, q.max_s_dev).map_err(num)?,
    };
    let b = &c.bounds;
    let n = ((b.c_end - b.c_start) / b.c_step + 1e-9).floor() as usize;
    let mut cs: Vec<f64> = (0..=n).map(|i| b.c_start + i as f64 * b.c_step).collect();
    cs.push(selected);
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    let mut out = header(cfg);
    let _ = writeln!(out, "# m = {}", m.get());
    let _ = writeln!(out, "# eps = {}", fmt_f64(q.eps));
    let _ = writeln!(out, "# max_s_dev = {}", fmt_f64(q.max_s_dev));
    let _ = writeln!(out, "# truncation_point = {}", fmt_f64(selected));
    out.push_str("c,e1_bound,e2_bound,e3_bound,lemma2_value\n");
    for &cv in &cs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(cv),
            fmt_f64(e1_bound(cv, m).map_err(num)?),
            fmt_f64(e2_bound(cv, m, q.max_s_dev).map_err(num)?),
            fmt_f64(e3_bound(cv, m, q.max_s_dev).map_err(num)?),
            fmt_f64(lemma2_value(cv, m).map_err(num)?)
        );
    }
    let file = write(c.run.out.join("bounds.csv"), &out)?;
    Ok(Outcome {
        files: vec![file],
        summary: format!("truncation point c = {selected} for eps = {}", q.eps),
    })
}
