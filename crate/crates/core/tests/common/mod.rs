//! Helpers shared by the integration tests: the worked-example problem and
//! quadrature oracles that do not go through the crate's own integrators.

#![allow(dead_code)]

use prior_ci::optimizer::{solve, ConstraintGrid, SolveReport, SolverOptions};
use prior_ci::quadrature::{ProblemConfig, QuadratureSpec};
use prior_ci::special::DegreesOfFreedom;
use prior_ci::spline::{IntervalFunctions, KnotGrid};
use statrs::distribution::{ChiSquared, Continuous};

pub fn dof(m: u32) -> DegreesOfFreedom {
    DegreesOfFreedom::new(m).unwrap()
}

/// rho = 0.4, m = 1, alpha = 0.05, d = 30, lambda = 0.2, seven equally
/// spaced knots.
pub fn worked_example() -> (ProblemConfig, QuadratureSpec) {
    let m = dof(1);
    let cfg = ProblemConfig::new(m, 0.4, 0.05, 0.2, KnotGrid::equally_spaced(30.0, 7).unwrap()).unwrap();
    let quad = QuadratureSpec::for_problem(m, 1e-5, 10.0).unwrap();
    (cfg, quad)
}

pub fn solve_worked_example(delta: f64) -> (ProblemConfig, QuadratureSpec, SolveReport, IntervalFunctions) {
    let (cfg, quad) = worked_example();
    let grid = ConstraintGrid::new(delta, 50.0).unwrap();
    let report = solve(&cfg, &grid, &quad, &SolverOptions::default()).unwrap();
    let f = IntervalFunctions::build(cfg.layout(), report.z_star.clone()).unwrap();
    (cfg, quad, report, f)
}

/// Density of `W = sqrt(Q/m)`, `Q ~ chi^2_m`, from the chi-square density.
pub fn f_w(w: f64, m: u32) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let mf = f64::from(m);
    // ln_pdf avoids the overflow of Gamma(m/2) in the direct density.
    2.0 * mf * w * ChiSquared::new(mf).unwrap().ln_pdf(mf * w * w).exp()
}

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    assert!(delta.is_finite(), "non-finite integrand on [{a}, {b}]");
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`, started from `pieces` equal
/// subintervals so narrow peaks are not missed.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let xm = 0.5 * (x0 + x1);
            let (f0, fm, f1) = (f(x0), f(xm), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_step(&f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// `∫_c^∞ w f_W(w) dw` by brute force.
pub fn tail_first_moment(c: f64, m: u32) -> f64 {
    let upper = c.max(1.0) + 10.0 + 60.0 / f64::from(m).sqrt();
    simpson(|w| w * f_w(w, m), c, upper, 1e-13, 400)
}
