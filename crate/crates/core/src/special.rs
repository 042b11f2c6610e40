//! Scalar special functions and distribution quantities.
//!
//! Everything the integrands and truncation bounds need: log-gamma, the
//! regularized incomplete gamma and beta functions, the chi-square upper
//! tail, Student t quantiles, normal interval probabilities and the density
//! of `W = sigma_hat / sigma`.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};
use statrs::function::{beta, gamma};
use thiserror::Error;

/// Argument outside the domain of a special function.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{function}: argument {value} outside domain ({requirement})")]
pub struct DomainError {
    pub function: &'static str,
    pub value: f64,
    pub requirement: &'static str,
}

fn domain(function: &'static str, value: f64, requirement: &'static str) -> DomainError {
    DomainError {
        function,
        value,
        requirement,
    }
}

/// Residual degrees of freedom `m = n - p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreesOfFreedom(u32);

impl DegreesOfFreedom {
    pub fn new(m: u32) -> Result<Self, DomainError> {
        if m == 0 {
            return Err(domain("DegreesOfFreedom", 0.0, "m >= 1"));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

/// Stand-in for an infinite lower endpoint of [`normal_interval_prob`].
pub const NEG_INF_PROXY: f64 = f64::NEG_INFINITY;
/// Stand-in for an infinite upper endpoint of [`normal_interval_prob`].
pub const POS_INF_PROXY: f64 = f64::INFINITY;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, DomainError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", x, "x > 0"));
    }
    Ok(gamma::ln_gamma(x))
}

/// `E(W) = sqrt(2/m) Gamma(m/2 + 1/2) / Gamma(m/2)`, evaluated as the
/// exponential of a log-gamma difference so that large `m` cannot overflow.
pub fn expected_w(m: DegreesOfFreedom) -> f64 {
    let half = 0.5 * m.as_f64();
    (-0.5 * half.ln() + gamma::ln_gamma(half + 0.5) - gamma::ln_gamma(half)).exp()
}

/// `sqrt(2/m) Gamma(m/2 + 1) / Gamma(m/2)`, the prefactor of the `e_2` and
/// `e_3` truncation bounds. Equals `sqrt(m/2)`.
pub fn gamma_ratio_half_step(m: DegreesOfFreedom) -> f64 {
    let half = 0.5 * m.as_f64();
    (-0.5 * half.ln() + gamma::ln_gamma(half + 1.0) - gamma::ln_gamma(half)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64, DomainError> {
    if !(a > 0.0) {
        return Err(domain("gamma_q", a, "a > 0"));
    }
    if !(x >= 0.0) {
        return Err(domain("gamma_q", x, "x >= 0"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma::gamma_ur(a, x))
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64, DomainError> {
    if !(a > 0.0) {
        return Err(domain("gamma_p", a, "a > 0"));
    }
    if !(x >= 0.0) {
        return Err(domain("gamma_p", x, "x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma::gamma_lr(a, x))
}

/// Upper tail `P(Q > x)` of the chi-square law with `m` degrees of freedom.
pub fn chi2_tail(m: DegreesOfFreedom, x: f64) -> Result<f64, DomainError> {
    if !(x >= 0.0) {
        return Err(domain("chi2_tail", x, "x >= 0"));
    }
    gamma_q(0.5 * m.as_f64(), 0.5 * x)
}

/// Chi-square distribution function `P(Q <= x)`.
pub fn chi2_cdf(m: DegreesOfFreedom, x: f64) -> Result<f64, DomainError> {
    if !(x >= 0.0) {
        return Err(domain("chi2_cdf", x, "x >= 0"));
    }
    gamma_p(0.5 * m.as_f64(), 0.5 * x)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64, DomainError> {
    if !(a > 0.0) {
        return Err(domain("beta_reg", a, "a > 0"));
    }
    if !(b > 0.0) {
        return Err(domain("beta_reg", b, "b > 0"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("beta_reg", x, "0 <= x <= 1"));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    Ok(beta::beta_reg(a, b, x))
}

/// Student t distribution function `P(T <= t)` with `m` degrees of freedom.
pub fn t_cdf(m: DegreesOfFreedom, t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = t_upper_tail(m, t.abs());
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `P(T > t)` for `t >= 0`, without cancellation for large `t`.
fn t_upper_tail(m: DegreesOfFreedom, t: f64) -> f64 {
    let nu = m.as_f64();
    0.5 * beta::beta_reg(0.5 * nu, 0.5, nu / (nu + t * t))
}

/// Quantile `t_{m,p}` defined by `P(T <= t_{m,p}) = p`.
pub fn t_quantile(m: DegreesOfFreedom, p: f64) -> Result<f64, DomainError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("t_quantile", p, "0 < p < 1"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p < 0.5 {
        return Ok(-t_quantile(m, 1.0 - p)?);
    }
    let dist = StudentsT::new(0.0, 1.0, m.as_f64()).expect("m >= 1 is a valid shape");
    // The library inverse loses digits deep in the tail; polish it with
    // Newton steps on ln P(T > t), which is concave there.
    let ln_target = (1.0 - p).ln();
    let mut t = dist.inverse_cdf(p).max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let tail = t_upper_tail(m, t);
        let step = (tail.ln() - ln_target) * tail / dist.pdf(t);
        let next = (t + step).max(0.5 * t);
        if !next.is_finite() || (next - t).abs() <= 1e-15 * t {
            break;
        }
        t = next;
    }
    Ok(t)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `P(za <= Z <= zb)` for `Z ~ N(0, 1)`, evaluated on whichever tail keeps
/// the difference well conditioned.
#[inline]
pub(crate) fn std_normal_interval(za: f64, zb: f64) -> f64 {
    if za > zb {
        return 0.0;
    }
    if za > 0.0 {
        0.5 * (libm::erfc(za * FRAC_1_SQRT_2) - libm::erfc(zb * FRAC_1_SQRT_2))
    } else if zb < 0.0 {
        0.5 * (libm::erfc(-zb * FRAC_1_SQRT_2) - libm::erfc(-za * FRAC_1_SQRT_2))
    } else {
        1.0 - 0.5 * (libm::erfc(-za * FRAC_1_SQRT_2) + libm::erfc(zb * FRAC_1_SQRT_2))
    }
}

/// `Psi(x, y; mu, v) = P(x <= Z <= y)` for `Z ~ N(mu, v)`. Zero when `x > y`;
/// infinite endpoints ([`NEG_INF_PROXY`], [`POS_INF_PROXY`]) are allowed.
pub fn normal_interval_prob(x: f64, y: f64, mu: f64, v: f64) -> Result<f64, DomainError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(domain("normal_interval_prob", v, "v > 0"));
    }
    if x > y {
        return Ok(0.0);
    }
    let sd = v.sqrt();
    Ok(std_normal_interval((x - mu) / sd, (y - mu) / sd))
}

/// `ln f_W(w)` where `f_W(w) = 2 m w f_m(m w^2)` and `f_m` is the
/// chi-square density.
pub(crate) fn ln_f_w(w: f64, m: DegreesOfFreedom) -> f64 {
    let mf = m.as_f64();
    let y = mf * w * w;
    let half = 0.5 * mf;
    let ln_fm = (half - 1.0) * y.ln() - 0.5 * y - half * LN_2 - gamma::ln_gamma(half);
    (2.0 * mf * w).ln() + ln_fm
}

/// Density of `W = sigma_hat / sigma`.
pub fn f_w_density(w: f64, m: DegreesOfFreedom) -> Result<f64, DomainError> {
    if !(w > 0.0) {
        return Err(domain("f_w_density", w, "w > 0"));
    }
    if w.is_infinite() {
        return Ok(0.0);
    }
    Ok(ln_f_w(w, m).exp())
}
