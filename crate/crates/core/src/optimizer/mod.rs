//! Constrained minimisation of the criterion over the free knot values.
//!
//! Sequential quadratic programming with exact derivatives on the fixed
//! product rule: each iteration solves a convex QP built from the
//! Lagrangian Hessian (eigenvalues floored), the linearised coverage
//! constraints on the γ grid, the box bounds and a trust-region cap. Steps
//! are accepted by a ratio test on an ℓ1 merit function, with a
//! second-order correction when a step is rejected. Converged solutions
//! are verified on a dense γ grid and checked for spurious oscillation of
//! `b`; either failure triggers a restart from the current point.

pub mod constraints;
pub mod qp;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

pub use constraints::{ConstraintValue, Discretization};
pub use qp::{solve_qp, QpError, QpSolution};

use crate::quadrature::{Evaluator, ProblemConfig, QuadratureError, QuadratureSpec};
use crate::spline::{fmt_f64, parse_f64, DecisionVector, IntervalFunctions, KnotGrid, SplineError, B_BOUND, S_UPPER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("invalid constraint grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("malformed solve report: {0}")]
    Parse(String),
}

/// The finite γ grid `{0, Δ, 2Δ, ..., M}` and the dense verification grid
/// with spacing `Δ/10` on `[0, 2M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGrid {
    pub delta: f64,
    pub big_m: f64,
    pub gammas: Vec<f64>,
    pub dense_gammas: Vec<f64>,
}

impl Default for ConstraintGrid {
    fn default() -> Self {
        Self::new(0.5, 50.0).expect("default grid is valid")
    }
}

fn uniform_grid(step: f64, end: f64) -> Vec<f64> {
    let n = (end / step - 1e-9).ceil() as usize;
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    v.push(end);
    v
}

impl ConstraintGrid {
    pub fn new(delta: f64, big_m: f64) -> Result<Self, SolveError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(SolveError::Grid(format!("delta must be positive, got {delta}")));
        }
        if !(big_m >= delta && big_m.is_finite()) {
            return Err(SolveError::Grid(format!("M must be at least delta, got {big_m}")));
        }
        Ok(Self {
            delta,
            big_m,
            gammas: uniform_grid(delta, big_m),
            dense_gammas: uniform_grid(delta / 10.0, 2.0 * big_m),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub restart_cap: usize,
    pub cov_slack: f64,
    /// Convergence when the SQP step is below `step_tol · (1 + ‖z‖∞)`.
    pub step_tol: f64,
    /// Largest tolerated constraint violation at convergence.
    pub feas_tol: f64,
    /// Sign changes of `b'` on `[-d, d]` above which `b` counts as
    /// oscillating; `None` uses the number of knots.
    pub oscillation_limit: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            restart_cap: 3,
            cov_slack: 1e-4,
            step_tol: 1e-9,
            feas_tol: 1e-10,
            oscillation_limit: None,
        }
    }
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub z_star: DecisionVector,
    pub objective_value: f64,
    pub min_coverage_dense: f64,
    pub argmin_gamma: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// `max(0, (1 - α) - coverage(γ))` on the constraint grid.
    pub constraint_violations: Vec<f64>,
    pub converged: bool,
    pub verified: bool,
    pub oscillating: bool,
    /// `(γ, coverage)` on the dense grid.
    pub coverage_curve: Vec<(f64, f64)>,
    /// `(γ, e²)` on the constraint grid extended to `2M`.
    pub length_sq_curve: Vec<(f64, f64)>,
    pub message: String,
}

/// `(1 - α) - coverage(γ)`; feasible iff `<= 0`.
pub fn coverage_constraint(
    z: &DecisionVector,
    gamma: f64,
    cfg: &ProblemConfig,
    quad: &QuadratureSpec,
) -> Result<f64, SolveError> {
    let f = IntervalFunctions::build(cfg.layout(), z.clone())?;
    let cov = crate::quadrature::coverage_probability(gamma, &f, cfg, quad)?;
    Ok((1.0 - cfg.alpha) - cov)
}

/// Minimum coverage over the dense grid, its location, and whether it is
/// at least `1 - α - cov_slack`.
pub fn verify(
    z: &DecisionVector,
    cfg: &ProblemConfig,
    grid: &ConstraintGrid,
    quad: &QuadratureSpec,
    cov_slack: f64,
) -> Result<(f64, f64, bool), SolveError> {
    let ev = Evaluator::new(cfg, quad)?;
    let f = IntervalFunctions::build(cfg.layout(), z.clone())?;
    let curve = coverage_curve(&ev, &f, &grid.dense_gammas)?;
    Ok(summarise(&curve, cfg.alpha, cov_slack))
}

fn coverage_curve(ev: &Evaluator, f: &IntervalFunctions, gammas: &[f64]) -> Result<Vec<(f64, f64)>, QuadratureError> {
    gammas.par_iter().map(|&g| ev.coverage_at(g, f).map(|c| (g, c))).collect()
}

fn summarise(curve: &[(f64, f64)], alpha: f64, cov_slack: f64) -> (f64, f64, bool) {
    let (g, c) = curve
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |acc, (g, c)| if c < acc.1 { (g, c) } else { acc });
    (c, g, c >= 1.0 - alpha - cov_slack)
}

/// True when `b'` changes sign more than `limit` times (default `q`) on a
/// fine grid over `[-d, d]`. `b'` is even, so each turning point on
/// `(0, d)` counts twice.
pub fn oscillation_check(z: &DecisionVector, knots: &KnotGrid, limit: Option<usize>) -> bool {
    let q = knots.q();
    let sp = crate::spline::b_spline_from(knots, &z.b_vals);
    let limit = limit.unwrap_or(q);
    let n = 400 * (q - 1);
    let d = knots.d();
    let scale = z.b_vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let tol = 1e-9 * scale / d;
    let mut last = 0i8;
    let mut changes = 0;
    for i in 0..=n {
        let x = -d + 2.0 * d * i as f64 / n as f64;
        let dv = sp.derivative(x.abs());
        let sign = if dv > tol {
            1
        } else if dv < -tol {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last != 0 && sign != last {
                changes += 1;
            }
            last = sign;
        }
    }
    changes > limit
}

struct Bounds {
    lo: DVector<f64>,
    hi: DVector<f64>,
}

fn bounds_for(cfg: &ProblemConfig) -> Result<Bounds, SolveError> {
    let q = cfg.knots.q();
    let n_b = q - 2;
    let n = 2 * q - 3;
    let t = cfg.t_quant();
    let floor = 0.25 * t;
    if t > S_UPPER {
        return Err(SolveError::Infeasible(format!(
            "t quantile {t} exceeds the upper bound {S_UPPER} on s, so the standard interval is not admissible"
        )));
    }
    let mut lo = DVector::from_element(n, -B_BOUND);
    let mut hi = DVector::from_element(n, B_BOUND);
    for i in n_b..n {
        lo[i] = floor;
        hi[i] = S_UPPER;
    }
    Ok(Bounds { lo, hi })
}

struct Iterate {
    z: DVector<f64>,
    f: IntervalFunctions,
    cons: Vec<ConstraintValue>,
}

struct Sqp<'a> {
    disc: &'a Discretization,
    gammas: &'a [f64],
    bounds: Bounds,
    q: usize,
    opts: &'a SolverOptions,
    /// Internal scale of the criterion.
    obj_scale: f64,
    /// Internal scale of the coverage constraints.
    con_scale: f64,
}

fn max_violation(cons: &[ConstraintValue]) -> f64 {
    cons.iter().fold(0.0f64, |a, c| a.max(c.value))
}

struct Step {
    d: DVector<f64>,
    mult: Vec<f64>,
}

impl<'a> Sqp<'a> {
    fn functions(&self, z: &DVector<f64>) -> Result<IntervalFunctions, SolveError> {
        let dv = DecisionVector::from_flat(z.as_slice(), self.q)?;
        Ok(IntervalFunctions::build(self.disc.config().layout(), dv)?)
    }

    fn evaluate(&self, z: DVector<f64>, with_grad: bool) -> Result<Iterate, SolveError> {
        let f = self.functions(&z)?;
        let cons = self
            .gammas
            .par_iter()
            .map(|&g| self.disc.constraint(g, &f, with_grad))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Iterate { z, f, cons })
    }

    fn objective(&self, z: &DVector<f64>) -> f64 {
        let t = self.disc.config().t_quant();
        let n_b = self.q - 2;
        let g = self.disc.objective_grad();
        (n_b..z.len()).map(|i| g[i] * (z[i] - t)).sum::<f64>() * self.obj_scale
    }

    fn penalty(&self, values: impl Iterator<Item = f64>) -> f64 {
        let tol = self.opts.feas_tol;
        values.map(|v| (v - tol).max(0.0)).sum::<f64>() * self.con_scale
    }

    fn merit(&self, it: &Iterate, nu: f64) -> f64 {
        self.objective(&it.z) + nu * self.penalty(it.cons.iter().map(|c| c.value))
    }

    fn lagrangian_hessian(&self, it: &Iterate, mult: &[f64]) -> DMatrix<f64> {
        let n = it.z.len();
        let parts: Vec<DMatrix<f64>> = it
            .cons
            .par_iter()
            .zip(mult.par_iter())
            .filter(|(_, &m)| m > 0.0)
            .map(|(c, &m)| self.disc.constraint_hessian(c.gamma, &it.f) * (m * self.con_scale))
            .collect();
        let mut h = DMatrix::zeros(n, n);
        for p in parts {
            h += p;
        }
        let eig = SymmetricEigen::new(h);
        let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let floor = 1e-8 * top.max(1e-3);
        let vals = eig.eigenvalues.map(|v| v.max(floor));
        &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
    }

    /// The QP subproblem, with violated linearisations relaxed by `theta`.
    fn subproblem(
        &self,
        it: &Iterate,
        h: &DMatrix<f64>,
        cap: f64,
        theta: f64,
        soc: Option<(&[f64], &DVector<f64>)>,
    ) -> Result<QpSolution, QpError> {
        let n = it.z.len();
        let n_g = it.cons.len();
        let tol = self.opts.feas_tol;
        let mut a = DMatrix::zeros(n_g + 2 * n, n);
        let mut b = DVector::zeros(n_g + 2 * n);
        for (r, c) in it.cons.iter().enumerate() {
            let g = c.grad.as_ref().expect("gradients evaluated");
            for j in 0..n {
                a[(r, j)] = -g[j] * self.con_scale;
            }
            // With a correction, linearise around the trial point's values.
            let v = match soc {
                Some((vals, d)) => vals[r] - g.dot(d) - tol,
                None => c.value - tol,
            };
            b[r] = if v > 0.0 { theta * v } else { v } * self.con_scale;
        }
        for j in 0..n {
            a[(n_g + 2 * j, j)] = 1.0;
            b[n_g + 2 * j] = (self.bounds.lo[j] - it.z[j]).max(-cap);
            a[(n_g + 2 * j + 1, j)] = -1.0;
            b[n_g + 2 * j + 1] = -(self.bounds.hi[j] - it.z[j]).min(cap);
        }
        let g = self.disc.objective_grad() * self.obj_scale;
        solve_qp(h, &g, &a, &b)
    }

    fn step(&self, it: &Iterate, h: &DMatrix<f64>, cap: f64, soc: Option<(&[f64], &DVector<f64>)>) -> Result<Step, String> {
        let thetas: &[f64] = if soc.is_some() { &[1.0] } else { &[1.0, 0.5, 0.1, 0.0] };
        for &theta in thetas {
            match self.subproblem(it, h, cap, theta, soc) {
                Ok(s) => {
                    return Ok(Step {
                        mult: s.multipliers.iter().take(it.cons.len()).copied().collect(),
                        d: s.x,
                    })
                }
                Err(QpError::Infeasible) => continue,
                Err(e) => return Err(format!("QP failure: {e}")),
            }
        }
        Err("QP subproblem infeasible after relaxation".into())
    }

    fn clamp(&self, mut z: DVector<f64>) -> DVector<f64> {
        for j in 0..z.len() {
            z[j] = z[j].clamp(self.bounds.lo[j], self.bounds.hi[j]);
        }
        z
    }

    /// Trust-region SQP on the ℓ1 merit function.
    fn run(&self, start: DVector<f64>, iter_budget: usize) -> Result<(Iterate, usize, bool, String), SolveError> {
        let n = start.len();
        let mut it = self.evaluate(start, true)?;
        let t = self.disc.config().t_quant();
        let mut cap = (0.25 * t).max(0.5);
        let min_cap = 1e-3 * self.opts.step_tol;
        let mut nu: f64 = 1.0;
        let mut iterations = 0;
        // Multiplier estimate for the first Hessian.
        let mut h = DMatrix::identity(n, n) * 1e-3;
        for _ in 0..3 {
            match self.step(&it, &h, cap, None) {
                Ok(s) => h = self.lagrangian_hessian(&it, &s.mult),
                Err(msg) => return Ok((it, iterations, false, msg)),
            }
        }
        loop {
            if iterations >= iter_budget {
                return Ok((it, iterations, false, "iteration limit reached".into()));
            }
            iterations += 1;
            let step = match self.step(&it, &h, cap, None) {
                Ok(s) => s,
                Err(msg) => return Ok((it, iterations, false, msg)),
            };
            let d = &step.d;
            let dmax = d.amax();
            let zmax = it.z.amax();
            let viol = max_violation(&it.cons);
            if dmax <= self.opts.step_tol * (1.0 + zmax) && viol <= 10.0 * self.opts.feas_tol {
                return Ok((it, iterations, true, "converged".into()));
            }
            let mu_max = step.mult.iter().fold(0.0f64, |a, &m| a.max(m));
            nu = nu.max(1.5 * mu_max + 1e-8);
            let g = self.disc.objective_grad() * self.obj_scale;
            let lin = it.cons.iter().map(|c| c.value + c.grad.as_ref().expect("gradients").dot(d));
            let predicted = -(g.dot(d) + 0.5 * d.dot(&(&h * d))) + nu * (self.penalty(it.cons.iter().map(|c| c.value)) - self.penalty(lin));
            let phi0 = self.merit(&it, nu);
            let noise = 1e-14 * (1.0 + phi0.abs());
            if predicted <= noise && viol <= 10.0 * self.opts.feas_tol {
                return Ok((it, iterations, true, "converged".into()));
            }
            let trial = self.evaluate(self.clamp(&it.z + d), false)?;
            let mut ratio = (phi0 - self.merit(&trial, nu)) / predicted;
            let mut accepted = None;
            if ratio >= 0.1 {
                accepted = Some(trial);
            } else {
                // Second-order correction: re-solve with the constraint values
                // observed at the trial point.
                let vals: Vec<f64> = trial.cons.iter().map(|c| c.value).collect();
                if let Ok(corr) = self.step(&it, &h, cap, Some((&vals, d))) {
                    let second = self.evaluate(self.clamp(&it.z + &corr.d), false)?;
                    let r2 = (phi0 - self.merit(&second, nu)) / predicted;
                    if r2 >= 0.1 {
                        ratio = r2;
                        accepted = Some(second);
                    }
                }
            }
            if let Some(trial) = accepted {
                if ratio > 0.25 && dmax >= 0.9 * cap {
                    cap = (2.0 * cap).min(4.0 * S_UPPER);
                }
                it = self.evaluate(trial.z, true)?;
                h = self.lagrangian_hessian(&it, &step.mult);
            } else {
                cap = 0.25 * dmax.min(cap);
                if cap < min_cap {
                    if dmax <= 1e3 * self.opts.step_tol * (1.0 + zmax) && viol <= 1e3 * self.opts.feas_tol {
                        return Ok((it, iterations, true, "converged (merit at noise level)".into()));
                    }
                    return Ok((it, iterations, false, "trust region collapsed".into()));
                }
            }
        }
    }
}

/// Minimises the criterion subject to the coverage constraints on
/// `grid.gammas`, the `s` floor `t/4`, and the box bounds, starting from
/// the standard interval.
pub fn solve(cfg: &ProblemConfig, grid: &ConstraintGrid, quad: &QuadratureSpec, opts: &SolverOptions) -> Result<SolveReport, SolveError> {
    let ev = Evaluator::new(cfg, quad)?;
    let disc = Discretization::new(ev.clone());
    let q = cfg.knots.q();
    let bounds = bounds_for(cfg)?;
    let gscale = disc.objective_grad().amax();
    let sqp = Sqp {
        disc: &disc,
        gammas: &grid.gammas,
        bounds,
        q,
        opts,
        obj_scale: 1.0 / gscale.max(1.0),
        con_scale: 1.0,
    };
    let t = cfg.t_quant();
    let mut z = DVector::from_vec(DecisionVector::standard(q, t).to_flat());
    let start = sqp.evaluate(z.clone(), true)?;
    let cmax = start
        .cons
        .iter()
        .map(|c| c.grad.as_ref().map_or(0.0, |g| g.amax()))
        .fold(0.0f64, f64::max);
    let sqp = Sqp {
        con_scale: if cmax > 0.0 { 1.0 / cmax } else { 1.0 },
        ..sqp
    };
    let mut iterations = 0;
    let mut restarts = 0;
    loop {
        let (it, used, sqp_ok, message) = sqp.run(z, opts.max_iterations)?;
        iterations += used;
        let z_star = DecisionVector::from_flat(it.z.as_slice(), q)?;
        let curve = coverage_curve(&ev, &it.f, &grid.dense_gammas)?;
        let (min_cov, argmin, verified) = summarise(&curve, cfg.alpha, opts.cov_slack);
        let oscillating = oscillation_check(&z_star, &cfg.knots, opts.oscillation_limit);
        let done = sqp_ok && verified && !oscillating;
        if done || restarts >= opts.restart_cap {
            let length_gammas = uniform_grid(grid.delta, 2.0 * grid.big_m);
            let length_sq_curve = length_gammas
                .par_iter()
                .map(|&g| ev.scaled_length_at(g, &it.f).map(|e| (g, e * e)))
                .collect::<Result<Vec<_>, _>>()?;
            let message = if done {
                message
            } else if !sqp_ok {
                message
            } else if !verified {
                format!("dense verification failed: minimum coverage {min_cov} at gamma {argmin}")
            } else {
                "spurious oscillation in b".into()
            };
            return Ok(SolveReport {
                objective_value: ev.objective(&it.f)?,
                constraint_violations: it.cons.iter().map(|c| c.value.max(0.0)).collect(),
                z_star,
                min_coverage_dense: min_cov,
                argmin_gamma: argmin,
                iterations,
                restarts,
                converged: done,
                verified,
                oscillating,
                coverage_curve: curve,
                length_sq_curve,
                message,
            });
        }
        restarts += 1;
        z = it.z;
    }
}

impl SolveReport {
    /// Key-value header followed by CSV blocks for `z`, the constraint
    /// violations, the dense coverage curve and the squared scaled length.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kv = |out: &mut String, k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv(&mut out, "converged", self.converged.to_string());
        kv(&mut out, "verified", self.verified.to_string());
        kv(&mut out, "oscillating", self.oscillating.to_string());
        kv(&mut out, "objective_value", fmt_f64(self.objective_value));
        kv(&mut out, "min_coverage_dense", fmt_f64(self.min_coverage_dense));
        kv(&mut out, "argmin_gamma", fmt_f64(self.argmin_gamma));
        kv(&mut out, "iterations", self.iterations.to_string());
        kv(&mut out, "restarts", self.restarts.to_string());
        kv(&mut out, "message", self.message.replace('\n', " "));
        out.push_str("\n[z]\nkind,index,value\n");
        for (i, v) in self.z_star.b_vals.iter().enumerate() {
            let _ = writeln!(out, "b,{i},{}", fmt_f64(*v));
        }
        for (i, v) in self.z_star.s_vals.iter().enumerate() {
            let _ = writeln!(out, "s,{i},{}", fmt_f64(*v));
        }
        out.push_str("\n[constraint_violations]\nindex,violation\n");
        for (i, v) in self.constraint_violations.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", fmt_f64(*v));
        }
        out.push_str("\n[coverage]\ngamma,coverage\n");
        for (g, c) in &self.coverage_curve {
            let _ = writeln!(out, "{},{}", fmt_f64(*g), fmt_f64(*c));
        }
        out.push_str("\n[length_sq]\ngamma,e2\n");
        for (g, e) in &self.length_sq_curve {
            let _ = writeln!(out, "{},{}", fmt_f64(*g), fmt_f64(*e));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SolveError> {
        let bad = |m: String| SolveError::Parse(m);
        let num = |s: &str| parse_f64(s).map_err(|e| bad(e.to_string()));
        let mut header = std::collections::HashMap::new();
        let mut section = String::new();
        let mut skip_header_row = false;
        let (mut b_vals, mut s_vals) = (Vec::new(), Vec::new());
        let mut viol = Vec::new();
        let mut cov = Vec::new();
        let mut len = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                skip_header_row = true;
                continue;
            }
            if section.is_empty() {
                let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            if skip_header_row {
                skip_header_row = false;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let want = if section == "z" { 3 } else { 2 };
            if cols.len() != want {
                return Err(bad(format!("wrong number of columns in [{section}]: {line:?}")));
            }
            match section.as_str() {
                "z" => match cols[0] {
                    "b" => b_vals.push(num(cols[2])?),
                    "s" => s_vals.push(num(cols[2])?),
                    other => return Err(bad(format!("unknown z kind {other:?}"))),
                },
                "constraint_violations" => viol.push(num(cols[1])?),
                "coverage" => cov.push((num(cols[0])?, num(cols[1])?)),
                "length_sq" => len.push((num(cols[0])?, num(cols[1])?)),
                other => return Err(bad(format!("unknown section [{other}]"))),
            }
        }
        let get = |k: &str| header.get(k).cloned().ok_or_else(|| bad(format!("missing key {k}")));
        let flag = |k: &str| -> Result<bool, SolveError> { get(k)?.parse().map_err(|_| bad(format!("bad boolean for {k}"))) };
        let int = |k: &str| -> Result<usize, SolveError> { get(k)?.parse().map_err(|_| bad(format!("bad integer for {k}"))) };
        Ok(Self {
            z_star: DecisionVector::new(b_vals, s_vals),
            objective_value: num(&get("objective_value")?)?,
            min_coverage_dense: num(&get("min_coverage_dense")?)?,
            argmin_gamma: num(&get("argmin_gamma")?)?,
            iterations: int("iterations")?,
            restarts: int("restarts")?,
            constraint_violations: viol,
            converged: flag("converged")?,
            verified: flag("verified")?,
            oscillating: flag("oscillating")?,
            coverage_curve: cov,
            length_sq_curve: len,
            message: get("message")?,
        })
    }
}
