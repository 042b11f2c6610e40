//! Run configuration: a TOML file with the sections `[problem]`, `[grid]`,
//! `[quadrature]`, `[solver]`, `[regression]`, `[bounds]` and `[run]`.
//!
//! Any key can be overridden from the environment as
//! `PRIOR_CI__<SECTION>__<KEY>=<value>`, where the value is read as a TOML
//! literal and falls back to a plain string. The SHA-256 of the effective
//! configuration (after overrides) is recorded in every output header.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optimizer::{ConstraintGrid, SolverOptions};
use crate::quadrature::{Method, PanelParams, ProblemConfig, QuadratureSpec, DEFAULT_ABS_TOL, DEFAULT_EPS, DEFAULT_MAX_S_DEV};
use crate::special::DegreesOfFreedom;
use crate::spline::{KnotGrid, SEnd};

pub const ENV_PREFIX: &str = "PRIOR_CI__";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Solve,
    Curves,
    Apply,
    Bounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub m: u32,
    pub rho: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub lambda: f64,
    pub d: f64,
    #[serde(default = "default_q")]
    pub q: usize,
    /// Explicit knot positions; overrides the equally spaced grid.
    #[serde(default)]
    pub knots: Option<Vec<f64>>,
    #[serde(default)]
    pub s_end: SEnd,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_q() -> usize {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub delta: f64,
    pub big_m: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { delta: 0.5, big_m: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    /// Target for every truncation bound when `c` is not given.
    pub eps: f64,
    pub c: Option<f64>,
    pub max_s_dev: f64,
    pub abs_tol: f64,
    pub split_at: f64,
    pub split_threshold: f64,
    pub method: Method,
    pub panel: PanelParams,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            c: None,
            max_s_dev: DEFAULT_MAX_S_DEV,
            abs_tol: DEFAULT_ABS_TOL,
            split_at: 2.0,
            split_threshold: 3.0,
            method: Method::Panel,
            panel: PanelParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_iterations: usize,
    pub restart_cap: usize,
    pub cov_slack: f64,
    pub step_tol: f64,
    pub feas_tol: f64,
    pub oscillation_limit: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            max_iterations: o.max_iterations,
            restart_cap: o.restart_cap,
            cov_slack: o.cov_slack,
            step_tol: o.step_tol,
            feas_tol: o.feas_tol,
            oscillation_limit: o.oscillation_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSection {
    pub response: String,
    pub predictors: Vec<String>,
    #[serde(default)]
    pub intercept: bool,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub t_shift: f64,
}

/// The `c` grid of the bounds table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub c_start: f64,
    pub c_end: f64,
    pub c_step: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            c_start: 0.5,
            c_end: 10.0,
            c_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    pub out: PathBuf,
    pub functions: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads; `0` lets the thread pool decide.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            mode: Mode::Solve,
            out: PathBuf::from("out"),
            functions: None,
            data: None,
            seed: 0,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub regression: Option<RegressionSection>,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub run: RunSection,
}

/// A parsed configuration together with the hash of its effective text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sha256: String,
}

/// One `section.key = value` override.
pub type Override = (String, String, toml::Value);

/// Parses `text`, applies `overrides` in order and validates the result.
pub fn load_str(text: &str, overrides: &[Override]) -> Result<LoadedConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for (section, key, value) in overrides {
        let entry = table
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(sec) = entry else {
            return Err(ConfigError::Invalid(format!("{section} is not a section")));
        };
        sec.insert(key.clone(), value.clone());
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    // Hash the re-serialised config so formatting and comments in the
    // source file do not matter. The output directory and thread count do
    // not change any result, so they are left out.
    let mut hashed = config.clone();
    hashed.run.out = RunSection::default().out;
    hashed.run.threads = 0;
    let canonical = toml::to_string(&hashed).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let sha256 = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(LoadedConfig { config, sha256 })
}

/// Reads a config file and applies environment overrides followed by
/// `extra` overrides.
pub fn load_path(path: &std::path::Path, extra: &[Override]) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut overrides = env_overrides(std::env::vars())?;
    overrides.extend_from_slice(extra);
    load_str(&text, &overrides)
}

/// Collects `PRIOR_CI__SECTION__KEY=value` pairs, sorted so the result does
/// not depend on environment order.
pub fn env_overrides<I: IntoIterator<Item = (String, String)>>(vars: I) -> Result<Vec<Override>, ConfigError> {
    let mut out = Vec::new();
    for (name, value) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let (section, key) = rest
            .split_once("__")
            .ok_or_else(|| ConfigError::Invalid(format!("{name}: expected {ENV_PREFIX}<SECTION>__<KEY>")))?;
        out.push((section.to_ascii_lowercase(), key.to_ascii_lowercase(), value));
    }
    out.sort();
    Ok(out.into_iter().map(|(s, k, v)| (s, k, parse_literal(&v))).collect())
}

fn parse_literal(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

impl RunConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.problem_config()?;
        self.grid()?;
        if let Some(c) = self.quadrature.c {
            if !(c > 0.0 && c.is_finite()) {
                return invalid(format!("quadrature.c must be positive, got {c}"));
            }
        } else if !(self.quadrature.eps > 0.0 && self.quadrature.eps < 1.0) {
            return invalid(format!("quadrature.eps must lie in (0, 1), got {}", self.quadrature.eps));
        }
        if !(self.quadrature.max_s_dev > 0.0) {
            return invalid("quadrature.max_s_dev must be positive".into());
        }
        let b = &self.bounds;
        if !(b.c_start > 0.0 && b.c_end >= b.c_start && b.c_step > 0.0) {
            return invalid("bounds needs 0 < c_start <= c_end and c_step > 0".into());
        }
        if let Some(r) = &self.regression {
            if r.a.len() != r.c.len() {
                return invalid("regression.a and regression.c differ in length".into());
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> Result<DegreesOfFreedom, ConfigError> {
        DegreesOfFreedom::new(self.problem.m).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn problem_config(&self) -> Result<ProblemConfig, ConfigError> {
        let p = &self.problem;
        let invalid = |e: String| ConfigError::Invalid(e);
        let knots = match &p.knots {
            Some(x) => {
                let k = KnotGrid::from_positions(x.clone(), false).map_err(|e| invalid(e.to_string()))?;
                if (k.d() - p.d).abs() > 1e-12 * p.d {
                    return Err(invalid(format!("last knot {} differs from d = {}", k.d(), p.d)));
                }
                k
            }
            None => KnotGrid::equally_spaced(p.d, p.q).map_err(|e| invalid(e.to_string()))?,
        };
        Ok(ProblemConfig::new(self.dof()?, p.rho, p.alpha, p.lambda, knots)
            .map_err(|e| invalid(e.to_string()))?
            .with_s_end(p.s_end))
    }

    pub fn grid(&self) -> Result<ConstraintGrid, ConfigError> {
        ConstraintGrid::new(self.grid.delta, self.grid.big_m).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn quadrature_spec(&self) -> Result<QuadratureSpec, ConfigError> {
        let q = &self.quadrature;
        let mut spec = match q.c {
            Some(c) => QuadratureSpec::with_c(c, q.max_s_dev),
            None => QuadratureSpec::for_problem(self.dof()?, q.eps, q.max_s_dev).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        };
        spec.abs_tol = q.abs_tol;
        spec.split_at = q.split_at;
        spec.split_threshold = q.split_threshold;
        spec.method = q.method;
        spec.panel = q.panel;
        Ok(spec)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            max_iterations: s.max_iterations,
            restart_cap: s.restart_cap,
            cov_slack: s.cov_slack,
            step_tol: s.step_tol,
            feas_tol: s.feas_tol,
            oscillation_limit: s.oscillation_limit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[problem]
m = 1
rho = 0.4
alpha = 0.05
lambda = 0.2
d = 30.0
q = 7
"#;

    fn lit(section: &str, key: &str, value: &str) -> Override {
        (section.into(), key.into(), parse_literal(value))
    }

    #[test]
    fn output_location_does_not_enter_the_hash() {
        let a = load_str(EXAMPLE, &[]).unwrap();
        let b = load_str(EXAMPLE, &[lit("run", "out", "elsewhere"), lit("run", "threads", "3")]).unwrap();
        assert_eq!(a.sha256, b.sha256);
        let c = load_str(EXAMPLE, &[lit("run", "seed", "9")]).unwrap();
        assert_ne!(a.sha256, c.sha256);
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let c = load_str(EXAMPLE, &[]).unwrap().config;
        assert_eq!(c.grid, GridSection::default());
        assert_eq!(c.run.mode, Mode::Solve);
        assert!(c.regression.is_none());
        let grid = c.grid().unwrap();
        assert_eq!(grid.gammas.len(), 101);
        let spec = c.quadrature_spec().unwrap();
        assert!(spec.c > 5.0 && spec.c < 5.5, "{}", spec.c);
    }

    #[test]
    fn overrides_apply_in_order_and_change_the_hash() {
        let base = load_str(EXAMPLE, &[]).unwrap();
        let o = vec![
            lit("problem", "rho", "-0.3"),
            lit("run", "mode", "bounds"),
            lit("problem", "knots", "[0, 10, 30]"),
        ];
        let c = load_str(EXAMPLE, &o).unwrap();
        assert_eq!(c.config.problem.rho, -0.3);
        assert_eq!(c.config.run.mode, Mode::Bounds);
        assert_eq!(c.config.problem_config().unwrap().knots.positions(), &[0.0, 10.0, 30.0]);
        assert_ne!(c.sha256, base.sha256);
        // Formatting and comments do not affect the hash.
        let reformatted = format!("# comment\n{}", EXAMPLE.replace("30.0", "30"));
        assert_eq!(load_str(&reformatted, &[]).unwrap().sha256, base.sha256);
    }

    #[test]
    fn env_names_map_to_section_and_key() {
        let vars = vec![
            ("PRIOR_CI__SOLVER__MAX_ITERATIONS".to_string(), "7".to_string()),
            ("HOME".to_string(), "/root".to_string()),
            ("PRIOR_CI__GRID__DELTA".to_string(), "0.25".to_string()),
        ];
        let o = env_overrides(vars).unwrap();
        assert_eq!(o.len(), 2);
        assert_eq!(o[0], lit("grid", "delta", "0.25"));
        let c = load_str(EXAMPLE, &o).unwrap().config;
        assert_eq!(c.solver.max_iterations, 7);
        assert_eq!(c.grid.delta, 0.25);
        assert!(env_overrides(vec![("PRIOR_CI__NOSECTION".to_string(), "1".to_string())]).is_err());
    }

    #[test]
    fn malformed_and_invalid_configs_rejected() {
        assert!(matches!(load_str("[problem\nm = 1", &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(load_str(&EXAMPLE.replace("rho = 0.4", "rho = 1.0"), &[]), Err(ConfigError::Invalid(_))));
        assert!(matches!(load_str(&EXAMPLE.replace("m = 1", "m = 0"), &[]), Err(ConfigError::Invalid(_))));
        assert!(matches!(load_str(&format!("{EXAMPLE}typo = 3\n"), &[]), Err(ConfigError::Parse(_))));
        let knots_mismatch = vec![lit("problem", "knots", "[0, 10, 20]")];
        assert!(matches!(load_str(EXAMPLE, &knots_mismatch), Err(ConfigError::Invalid(_))));
    }
}
