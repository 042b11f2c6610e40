//! Bounds on the error from truncating the outer `w` integral at `c`.

use crate::special::{self, DegreesOfFreedom, DomainError};

/// `∫_c^∞ w f_W(w) dw = sqrt(2/m) Γ(m/2 + 1/2)/Γ(m/2) P(χ²_{m+1} > m c²)`.
pub fn lemma2_value(c: f64, m: DegreesOfFreedom) -> Result<f64, DomainError> {
    if !(c >= 0.0) {
        return Err(DomainError {
            function: "lemma2_value",
            value: c,
            requirement: "c >= 0",
        });
    }
    let mf = m.as_f64();
    let tail = special::gamma_q(0.5 * (mf + 1.0), 0.5 * mf * c * c)?;
    Ok(special::expected_w(m) * tail)
}

fn positive_c(function: &'static str, c: f64) -> Result<(), DomainError> {
    if c > 0.0 {
        Ok(())
    } else {
        Err(DomainError {
            function,
            value: c,
            requirement: "c > 0",
        })
    }
}

/// Bound on the coverage-integral truncation error: `P(χ²_m > m c²)`.
pub fn e1_bound(c: f64, m: DegreesOfFreedom) -> Result<f64, DomainError> {
    positive_c("e1_bound", c)?;
    special::chi2_tail(m, m.as_f64() * c * c)
}

/// Bound on the scaled-length truncation error:
/// `max_s_dev · sqrt(2/m) Γ(m/2 + 1)/Γ(m/2) · P(χ²_{m+1} > m c²)`.
///
/// For small `m` this is slightly below `max_s_dev · lemma2_value(c, m)`,
/// the tail integral it stands in for (about 11% below at `m = 1`).
pub fn e2_bound(c: f64, m: DegreesOfFreedom, max_s_dev: f64) -> Result<f64, DomainError> {
    positive_c("e2_bound", c)?;
    let mf = m.as_f64();
    let tail = special::gamma_q(0.5 * (mf + 1.0), 0.5 * mf * c * c)?;
    Ok(max_s_dev * special::gamma_ratio_half_step(m) * tail)
}

/// Bound on the criterion truncation error, half of [`e2_bound`].
pub fn e3_bound(c: f64, m: DegreesOfFreedom, max_s_dev: f64) -> Result<f64, DomainError> {
    Ok(0.5 * e2_bound(c, m, max_s_dev)?)
}

fn worst_bound(c: f64, m: DegreesOfFreedom, max_s_dev: f64) -> f64 {
    let e1 = e1_bound(c, m).unwrap_or(1.0);
    let e2 = e2_bound(c, m, max_s_dev).unwrap_or(f64::INFINITY);
    let e3 = e3_bound(c, m, max_s_dev).unwrap_or(f64::INFINITY);
    e1.max(e2).max(e3)
}

/// Smallest `c` (to within `1e-6`) at which every truncation bound is at
/// most `eps`.
pub fn truncation_point(m: DegreesOfFreedom, eps: f64, max_s_dev: f64) -> Result<f64, DomainError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DomainError {
            function: "truncation_point",
            value: eps,
            requirement: "0 < eps < 1",
        });
    }
    if !(max_s_dev >= 0.0) {
        return Err(DomainError {
            function: "truncation_point",
            value: max_s_dev,
            requirement: "max_s_dev >= 0",
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while worst_bound(hi, m, max_s_dev) > eps {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if worst_bound(mid, m, max_s_dev) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
