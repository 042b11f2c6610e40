//! Coverage probability, scaled expected length and the minimisation
//! criterion as truncated double integrals over `(w, x)`.
//!
//! With `k - k†` the difference of conditional coverage probabilities,
//!
//! ```text
//! coverage(γ) = (1 - α) + ∫_0^c ∫_{-d}^{d} (k - k†) φ(wx - γ) dx  w f_W(w) dw
//! e(γ)        = 1 + 1/(t E(W)) ∫_0^c ∫_{-d}^{d} (s(|x|) - t) φ(wx - γ) dx  w² f_W(w) dw
//! criterion   = λ (∫_0^d s - d t) + ∫_0^c ∫_0^d (s(x) - t) φ(wx) dx  w² f_W(w) dw
//! ```
//!
//! Two evaluation routes are provided: a fixed product Gauss rule
//! ([`rule::ProductRule`]) and nested adaptive Gauss-Kronrod integration.
//! When `c >= split_threshold` the outer integral is split at `split_at`.

pub mod bounds;
pub mod gauss;
pub mod rule;

use std::cell::Cell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bounds::{e1_bound, e2_bound, e3_bound, lemma2_value, truncation_point};
pub use gauss::{gauss_legendre, integrate_adaptive, AdaptiveOptions, Estimate};
pub use rule::{InnerRange, OuterNode, PanelParams, ProductRule};

use crate::special::{self, normal_pdf, std_normal_interval, DegreesOfFreedom, DomainError};
use crate::spline::{IntervalFunctions, IntervalLayout, KnotGrid, SEnd, SplineError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge: estimate {estimate}, error estimate {error_estimate} > tolerance {tolerance}")]
    NotConverged {
        estimate: f64,
        error_estimate: f64,
        tolerance: f64,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("interval functions do not match the problem: {0}")]
    Mismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<SplineError> for QuadratureError {
    fn from(e: SplineError) -> Self {
        QuadratureError::InvalidConfig(e.to_string())
    }
}

/// One instance of the constrained minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub m: DegreesOfFreedom,
    pub rho: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub knots: KnotGrid,
    pub s_end: SEnd,
}

impl ProblemConfig {
    pub fn new(
        m: DegreesOfFreedom,
        rho: f64,
        alpha: f64,
        lambda: f64,
        knots: KnotGrid,
    ) -> Result<Self, QuadratureError> {
        if !(rho.abs() < 1.0) {
            return Err(QuadratureError::InvalidConfig(format!("|rho| must be < 1, got {rho}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(QuadratureError::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(QuadratureError::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            m,
            rho,
            alpha,
            lambda,
            knots,
            s_end: SEnd::Natural,
        })
    }

    pub fn with_s_end(mut self, s_end: SEnd) -> Self {
        self.s_end = s_end;
        self
    }

    pub fn layout(&self) -> IntervalLayout {
        IntervalLayout::new(self.knots.clone(), self.m, self.alpha, self.s_end)
            .expect("alpha validated on construction")
    }

    pub fn t_quant(&self) -> f64 {
        special::t_quantile(self.m, 1.0 - self.alpha / 2.0).expect("alpha validated on construction")
    }

    /// Conditional standard deviation `sqrt(1 - ρ²)`.
    pub fn cond_sd(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }
}

/// Evaluation route for the double integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fixed product Gauss rule.
    #[default]
    Panel,
    /// Nested adaptive Gauss-Kronrod to `abs_tol`.
    Adaptive,
}

/// Controls for every double-integral evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Outer truncation point.
    pub c: f64,
    pub split_at: f64,
    pub split_threshold: f64,
    pub abs_tol: f64,
    /// Assumed `max_y |s(y) - t|` in the truncation bounds.
    pub max_s_dev: f64,
    pub method: Method,
    pub panel: PanelParams,
    /// Panel budget of each adaptive 1-D integration.
    pub max_panels: usize,
}

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_ABS_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_S_DEV: f64 = 10.0;

impl QuadratureSpec {
    /// Truncation point chosen so all three bounds are at most `eps`.
    pub fn for_problem(m: DegreesOfFreedom, eps: f64, max_s_dev: f64) -> Result<Self, QuadratureError> {
        let c = truncation_point(m, eps, max_s_dev)?;
        Ok(Self::with_c(c, max_s_dev))
    }

    pub fn with_c(c: f64, max_s_dev: f64) -> Self {
        Self {
            c,
            split_at: 2.0,
            split_threshold: 3.0,
            abs_tol: DEFAULT_ABS_TOL,
            max_s_dev,
            method: Method::Panel,
            panel: PanelParams::default(),
            max_panels: 2000,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn splits(&self) -> bool {
        self.c >= self.split_threshold
    }

    /// Outer integration breakpoints `[0, c]`, or `[0, split_at, c]` when
    /// the split applies.
    pub fn outer_breaks(&self) -> Vec<f64> {
        if self.splits() && self.split_at > 0.0 && self.split_at < self.c {
            vec![0.0, self.split_at, self.c]
        } else {
            vec![0.0, self.c]
        }
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(QuadratureError::InvalidConfig(format!("truncation point must be positive, got {}", self.c)));
        }
        if !(self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidConfig("abs_tol must be positive".into()));
        }
        if self.panel.order == 0 || !(self.panel.u_step > 0.0) || !(self.panel.u_cut > 0.0) || !(self.panel.max_x_width > 0.0) {
            return Err(QuadratureError::InvalidConfig("invalid panel parameters".into()));
        }
        Ok(())
    }
}

/// Reusable evaluator for one `(ProblemConfig, QuadratureSpec)` pair.
#[derive(Debug, Clone)]
pub struct Evaluator {
    cfg: ProblemConfig,
    quad: QuadratureSpec,
    rule: ProductRule,
    expected_w: f64,
}

impl Evaluator {
    pub fn new(cfg: &ProblemConfig, quad: &QuadratureSpec) -> Result<Self, QuadratureError> {
        quad.validate()?;
        let rule = ProductRule::new(cfg.m, &quad.outer_breaks(), cfg.knots.positions(), quad.panel);
        Ok(Self {
            cfg: cfg.clone(),
            quad: *quad,
            rule,
            expected_w: special::expected_w(cfg.m),
        })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn rule(&self) -> &ProductRule {
        &self.rule
    }

    fn check(&self, f: &IntervalFunctions) -> Result<(), QuadratureError> {
        if f.m() != self.cfg.m {
            return Err(QuadratureError::Mismatch(format!("m = {} vs {}", f.m().get(), self.cfg.m.get())));
        }
        if f.alpha() != self.cfg.alpha {
            return Err(QuadratureError::Mismatch(format!("alpha = {} vs {}", f.alpha(), self.cfg.alpha)));
        }
        if f.knots() != &self.cfg.knots {
            return Err(QuadratureError::Mismatch("knot grids differ".into()));
        }
        Ok(())
    }

    /// Coverage probability at `γ`, evaluated from the defining double
    /// integral for either sign of `γ`.
    pub fn coverage_at(&self, gamma: f64, f: &IntervalFunctions) -> Result<f64, QuadratureError> {
        self.check(f)?;
        let sd = self.cfg.cond_sd();
        let rho = self.cfg.rho;
        let t = f.t_quant();
        let term = |w: f64, x: f64| {
            let u = w * x - gamma;
            let mu = rho * u;
            let b = f.eval_b(x);
            let s = f.s_abs(x);
            let k = std_normal_interval((w * (b - s) - mu) / sd, (w * (b + s) - mu) / sd);
            let kd = std_normal_interval((-t * w - mu) / sd, (t * w - mu) / sd);
            (k - kd) * normal_pdf(u)
        };
        let integral = match self.quad.method {
            Method::Panel => {
                let mut acc = 0.0;
                self.rule.for_each(gamma, InnerRange::Symmetric, |node, x, wt| {
                    acc += node.w1 * wt * term(node.w, x);
                });
                acc
            }
            Method::Adaptive => self.nested_adaptive(gamma, InnerRange::Symmetric, 1, term)?,
        };
        Ok((1.0 - self.cfg.alpha) + integral)
    }

    /// Scaled expected length `e(γ; s)`.
    pub fn scaled_length_at(&self, gamma: f64, f: &IntervalFunctions) -> Result<f64, QuadratureError> {
        self.check(f)?;
        let t = f.t_quant();
        let term = |w: f64, x: f64| (f.s_abs(x) - t) * normal_pdf(w * x - gamma);
        let integral = match self.quad.method {
            Method::Panel => {
                let mut acc = 0.0;
                self.rule.for_each(gamma, InnerRange::Symmetric, |node, x, wt| {
                    acc += node.w2 * wt * term(node.w, x);
                });
                acc
            }
            Method::Adaptive => self.nested_adaptive(gamma, InnerRange::Symmetric, 2, term)?,
        };
        Ok(1.0 + integral / (t * self.expected_w))
    }

    /// The minimisation criterion.
    pub fn objective(&self, f: &IntervalFunctions) -> Result<f64, QuadratureError> {
        self.check(f)?;
        let t = f.t_quant();
        let first = self.cfg.lambda * (f.s_integral() - f.d() * t);
        let term = |w: f64, x: f64| (f.s_abs(x) - t) * normal_pdf(w * x);
        let second = match self.quad.method {
            Method::Panel => {
                let mut acc = 0.0;
                self.rule.for_each(0.0, InnerRange::Positive, |node, x, wt| {
                    acc += node.w2 * wt * term(node.w, x);
                });
                acc
            }
            Method::Adaptive => self.nested_adaptive(0.0, InnerRange::Positive, 2, term)?,
        };
        Ok(first + second)
    }

    /// `∫ (∫ term(w, x) dx) w^power f_W(w) dw` by nested adaptive
    /// Gauss-Kronrod integration.
    fn nested_adaptive<F: Fn(f64, f64) -> f64>(
        &self,
        gamma: f64,
        range: InnerRange,
        power: i32,
        term: F,
    ) -> Result<f64, QuadratureError> {
        let m = self.cfg.m;
        let q = &self.quad;
        let d = self.cfg.knots.d();
        let u_cut = q.panel.u_cut;
        let mut knot_breaks: Vec<f64> = self.cfg.knots.positions().to_vec();
        if range == InnerRange::Symmetric {
            let mut neg: Vec<f64> = knot_breaks.iter().skip(1).rev().map(|&x| -x).collect();
            neg.extend_from_slice(&knot_breaks);
            knot_breaks = neg;
        }
        let x_lo = if range == InnerRange::Symmetric { -d } else { 0.0 };
        let failure: Cell<Option<QuadratureError>> = Cell::new(None);
        let outer_tol = 0.5 * q.abs_tol;
        let inner = |w: f64| -> f64 {
            let weight = special::ln_f_w(w, m).exp() * w.powi(power);
            if weight == 0.0 {
                return 0.0;
            }
            let lo = x_lo.max((gamma - u_cut) / w);
            let hi = d.min((gamma + u_cut) / w);
            if !(hi > lo) {
                return 0.0;
            }
            let mut cuts = vec![lo];
            cuts.extend(knot_breaks.iter().copied().filter(|&k| k > lo && k < hi));
            let centre = gamma / w;
            for j in [-3.0, -1.0, 1.0, 3.0] {
                let x = centre + j / w;
                if x > lo && x < hi {
                    cuts.push(x);
                }
            }
            cuts.push(hi);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let tol = (0.25 * q.abs_tol / (q.c.max(1.0) * weight.max(1e-3))).min(1e-3);
            match integrate_adaptive(
                |x| term(w, x),
                &cuts,
                AdaptiveOptions {
                    abs_tol: tol,
                    rel_tol: 0.0,
                    max_panels: q.max_panels,
                },
            ) {
                Ok(est) => weight * est.value,
                Err(e) => {
                    let estimate = match &e {
                        QuadratureError::NotConverged { estimate, .. } => *estimate,
                        _ => 0.0,
                    };
                    let prev = failure.take();
                    failure.set(prev.or(Some(e)));
                    weight * estimate
                }
            }
        };
        let outer = integrate_adaptive(
            inner,
            &q.outer_breaks(),
            AdaptiveOptions {
                abs_tol: outer_tol,
                rel_tol: 0.0,
                max_panels: q.max_panels,
            },
        );
        let outer = match outer {
            Ok(est) => est.value,
            Err(QuadratureError::NotConverged {
                estimate,
                error_estimate,
                tolerance,
            }) => {
                return Err(QuadratureError::NotConverged {
                    estimate,
                    error_estimate,
                    tolerance,
                })
            }
            Err(e) => return Err(e),
        };
        if let Some(QuadratureError::NotConverged {
            error_estimate,
            tolerance,
            ..
        }) = failure.take()
        {
            return Err(QuadratureError::NotConverged {
                estimate: outer,
                error_estimate,
                tolerance,
            });
        }
        Ok(outer)
    }
}

fn non_negative_gamma(gamma: f64) -> Result<(), QuadratureError> {
    if gamma >= 0.0 {
        Ok(())
    } else {
        Err(QuadratureError::Domain(DomainError {
            function: "coverage/length",
            value: gamma,
            requirement: "gamma >= 0",
        }))
    }
}

/// Coverage probability of the interval defined by `f` at `γ >= 0`.
pub fn coverage_probability(
    gamma: f64,
    f: &IntervalFunctions,
    cfg: &ProblemConfig,
    quad: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    non_negative_gamma(gamma)?;
    Evaluator::new(cfg, quad)?.coverage_at(gamma, f)
}

/// Expected length of the interval divided by that of the standard interval.
pub fn scaled_expected_length(
    gamma: f64,
    f: &IntervalFunctions,
    cfg: &ProblemConfig,
    quad: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    non_negative_gamma(gamma)?;
    Evaluator::new(cfg, quad)?.scaled_length_at(gamma, f)
}

/// The criterion minimised over the knot values.
pub fn objective(f: &IntervalFunctions, cfg: &ProblemConfig, quad: &QuadratureSpec) -> Result<f64, QuadratureError> {
    Evaluator::new(cfg, quad)?.objective(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::DecisionVector;

    fn dof(m: u32) -> DegreesOfFreedom {
        DegreesOfFreedom::new(m).unwrap()
    }

    fn problem(m: u32, rho: f64, d: f64) -> ProblemConfig {
        ProblemConfig::new(dof(m), rho, 0.05, 0.2, KnotGrid::equally_spaced(d, 7).unwrap()).unwrap()
    }

    fn wiggly(cfg: &ProblemConfig) -> IntervalFunctions {
        let z = DecisionVector::new(vec![3.0, 5.0, 4.0, 2.0, 0.5], vec![7.0, 9.0, 13.0, 16.0, 15.0, 13.5]);
        IntervalFunctions::build(cfg.layout(), z).unwrap()
    }

    fn spec(m: u32) -> QuadratureSpec {
        QuadratureSpec::for_problem(dof(m), DEFAULT_EPS, DEFAULT_MAX_S_DEV).unwrap()
    }

    #[test]
    fn standard_interval_is_exact() {
        for (m, rho) in [(1, 0.4), (76, -std::f64::consts::FRAC_1_SQRT_2)] {
            let cfg = problem(m, rho, 6.0);
            let f = IntervalFunctions::standard(cfg.layout());
            for method in [Method::Panel, Method::Adaptive] {
                let ev = Evaluator::new(&cfg, &spec(m).with_method(method)).unwrap();
                for g in [0.0, 1.5, 20.0] {
                    assert_eq!(ev.coverage_at(g, &f).unwrap(), 0.95);
                    assert_eq!(ev.scaled_length_at(g, &f).unwrap(), 1.0);
                }
                assert!(ev.objective(&f).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn panel_rule_agrees_with_adaptive() {
        for (m, d) in [(1, 30.0), (76, 6.0)] {
            let cfg = problem(m, 0.4, d);
            let f = wiggly(&cfg);
            let panel = Evaluator::new(&cfg, &spec(m)).unwrap();
            let mut qa = spec(m).with_method(Method::Adaptive);
            qa.abs_tol = 1e-10;
            let adapt = Evaluator::new(&cfg, &qa).unwrap();
            for g in [0.0, 1.0, 3.0, 7.5, 15.0, 40.0] {
                let a = panel.coverage_at(g, &f).unwrap();
                let b = adapt.coverage_at(g, &f).unwrap();
                assert!((a - b).abs() < 1e-7, "m={m} g={g}: {a} vs {b}");
                let a = panel.scaled_length_at(g, &f).unwrap();
                let b = adapt.scaled_length_at(g, &f).unwrap();
                assert!((a - b).abs() < 1e-7, "m={m} g={g}: {a} vs {b}");
            }
            let a = panel.objective(&f).unwrap();
            let b = adapt.objective(&f).unwrap();
            assert!((a - b).abs() < 1e-7);
        }
    }

    // Coverage from the untransformed integral: ∫_0^∞ ∫_R P(G ∈ interval | h) φ(h - γ) f_W(w) dh dw
    // with h = w x, integrated over the full real line and a generous w range.
    fn coverage_direct(cfg: &ProblemConfig, f: &IntervalFunctions, gamma: f64) -> f64 {
        let sd = cfg.cond_sd();
        let opts = AdaptiveOptions {
            abs_tol: 1e-11,
            rel_tol: 0.0,
            max_panels: 4000,
        };
        let outer = |w: f64| {
            let fw = special::ln_f_w(w, cfg.m).exp();
            if fw == 0.0 {
                return 0.0;
            }
            let inner = |h: f64| {
                let x = h / w;
                let (lo, hi) = (w * (f.eval_b(x) - f.s_abs(x)), w * (f.eval_b(x) + f.s_abs(x)));
                let mu = cfg.rho * (h - gamma);
                let p = normal_interval_prob_raw(lo, hi, mu, sd);
                p * normal_pdf(h - gamma)
            };
            let mut cuts: Vec<f64> = vec![gamma - 12.0];
            for k in cfg.knots.symmetric_positions() {
                let h = k * w;
                if h > gamma - 12.0 && h < gamma + 12.0 {
                    cuts.push(h);
                }
            }
            cuts.push(gamma + 12.0);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            fw * integrate_adaptive(inner, &cuts, opts).unwrap().value
        };
        integrate_adaptive(outer, &[0.0, 0.5, 1.0, 2.0, 4.0, 12.0], opts).unwrap().value
    }

    fn normal_interval_prob_raw(lo: f64, hi: f64, mu: f64, sd: f64) -> f64 {
        let cdf = |z: f64| 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
        (cdf((hi - mu) / sd) - cdf((lo - mu) / sd)).max(0.0)
    }

    #[test]
    fn coverage_matches_untransformed_integral() {
        let cfg = problem(1, 0.4, 30.0);
        let f = wiggly(&cfg);
        let ev = Evaluator::new(&cfg, &spec(1)).unwrap();
        for g in [0.0, 2.0, 10.0] {
            let a = ev.coverage_at(g, &f).unwrap();
            let b = coverage_direct(&cfg, &f, g);
            assert!((a - b).abs() < 2e-5, "g={g}: {a} vs {b}");
        }
    }

    #[test]
    fn coverage_and_length_are_even_in_gamma() {
        let cfg = problem(3, -0.6, 10.0);
        let f = wiggly(&cfg);
        let ev = Evaluator::new(&cfg, &spec(3)).unwrap();
        for g in [0.3, 2.0, 6.0] {
            let (a, b) = (ev.coverage_at(g, &f).unwrap(), ev.coverage_at(-g, &f).unwrap());
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            let (a, b) = (ev.scaled_length_at(g, &f).unwrap(), ev.scaled_length_at(-g, &f).unwrap());
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(coverage_probability(-1.0, &f, &cfg, &spec(3)).is_err());
    }

    #[test]
    fn split_does_not_change_values() {
        let cfg = problem(1, 0.4, 30.0);
        let f = wiggly(&cfg);
        let split = spec(1);
        assert!(split.splits());
        let mut plain = split;
        plain.split_threshold = f64::INFINITY;
        assert_eq!(plain.outer_breaks().len(), 2);
        let a = Evaluator::new(&cfg, &split).unwrap();
        let b = Evaluator::new(&cfg, &plain).unwrap();
        for g in [0.0, 4.0] {
            assert!((a.coverage_at(g, &f).unwrap() - b.coverage_at(g, &f).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn rho_zero_coverage_depends_on_b_only_through_shift() {
        // With ρ = 0 a nonzero b can only shift the interval away from the
        // centre of G, so coverage drops below the b = 0 value.
        let cfg = problem(2, 0.0, 10.0);
        let with_b = wiggly(&cfg);
        let mut z = with_b.z().clone();
        z.b_vals.iter_mut().for_each(|b| *b = 0.0);
        let no_b = IntervalFunctions::build(cfg.layout(), z).unwrap();
        let ev = Evaluator::new(&cfg, &spec(2)).unwrap();
        for g in [0.0, 1.0, 3.0, 8.0] {
            assert!(ev.coverage_at(g, &with_b).unwrap() < ev.coverage_at(g, &no_b).unwrap());
        }
    }

    #[test]
    fn truncation_error_within_bound() {
        let cfg = problem(1, 0.4, 30.0);
        let f = wiggly(&cfg);
        let dev = f.max_s_deviation();
        let short = QuadratureSpec::for_problem(dof(1), 1e-3, dev).unwrap();
        let long = QuadratureSpec::with_c(12.0, dev);
        let a = Evaluator::new(&cfg, &short).unwrap();
        let b = Evaluator::new(&cfg, &long).unwrap();
        for g in [0.0, 3.0] {
            let dc = (a.coverage_at(g, &f).unwrap() - b.coverage_at(g, &f).unwrap()).abs();
            assert!(dc <= e1_bound(short.c, dof(1)).unwrap());
            let de = (a.scaled_length_at(g, &f).unwrap() - b.scaled_length_at(g, &f).unwrap()).abs();
            let t = f.t_quant();
            // The exact tail bound is max|s - t| · ∫_c^∞ w f_W(w) dw; the closed-form
            // e2 undercuts it by the factor Γ(m/2 + 1)/(Γ(m/2 + 1/2) sqrt(m/2)) < 1 for small m.
            let tail = dev * lemma2_value(short.c, dof(1)).unwrap();
            assert!(de * t * special::expected_w(dof(1)) <= tail);
        }
        let dobj = (a.objective(&f).unwrap() - b.objective(&f).unwrap()).abs();
        assert!(dobj <= 0.5 * dev * lemma2_value(short.c, dof(1)).unwrap());
    }

    #[test]
    fn length_and_objective_are_affine_in_s() {
        let cfg = problem(1, 0.4, 30.0);
        let ev = Evaluator::new(&cfg, &spec(1)).unwrap();
        let shifted = |k: f64| {
            let mut z = wiggly(&cfg).z().clone();
            z.s_vals[2] += k;
            z.s_vals[4] -= 0.5 * k;
            IntervalFunctions::build(cfg.layout(), z).unwrap()
        };
        let (f0, f1, f2) = (shifted(0.0), shifted(1.0), shifted(2.0));
        let o: Vec<f64> = [&f0, &f1, &f2].iter().map(|f| ev.objective(f).unwrap()).collect();
        assert!((o[2] - 2.0 * o[1] + o[0]).abs() < 1e-11);
        assert!((o[1] - o[0]).abs() > 1e-3);
        for gamma in [0.0, 5.0, 12.0] {
            let e: Vec<f64> = [&f0, &f1, &f2].iter().map(|f| ev.scaled_length_at(gamma, f).unwrap()).collect();
            assert!((e[2] - 2.0 * e[1] + e[0]).abs() < 1e-11);
        }
    }

    #[test]
    fn lambda_zero_drops_the_integral_term() {
        let cfg = problem(1, 0.4, 30.0);
        let f = wiggly(&cfg);
        let mut c0 = cfg.clone();
        c0.lambda = 0.0;
        let q = spec(1);
        let with = objective(&f, &cfg, &q).unwrap();
        let without = objective(&f, &c0, &q).unwrap();
        let first = 0.2 * (f.s_integral() - f.d() * f.t_quant());
        assert!((with - without - first).abs() < 1e-12);
    }

    #[test]
    fn adaptive_outer_reproduces_tail_moment() {
        for m in [1u32, 4, 30] {
            for c in [0.5, 1.3, 3.0] {
                let est = integrate_adaptive(
                    |w| w * special::ln_f_w(w, dof(m)).exp(),
                    &[c, c + 1.0, c + 4.0, c + 40.0],
                    AdaptiveOptions {
                        abs_tol: 1e-13,
                        ..Default::default()
                    },
                )
                .unwrap();
                let want = lemma2_value(c, dof(m)).unwrap();
                assert!((est.value - want).abs() < 1e-11, "m={m} c={c}: {} vs {want}", est.value);
            }
        }
    }

    #[test]
    fn mismatched_functions_rejected() {
        let cfg = problem(1, 0.4, 30.0);
        let other = problem(2, 0.4, 30.0);
        let f = IntervalFunctions::standard(other.layout());
        let ev = Evaluator::new(&cfg, &spec(1)).unwrap();
        assert!(matches!(ev.coverage_at(0.0, &f), Err(QuadratureError::Mismatch(_))));
        assert!(ProblemConfig::new(dof(1), 1.0, 0.05, 0.0, KnotGrid::equally_spaced(1.0, 3).unwrap()).is_err());
    }
}
