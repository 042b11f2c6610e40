//! Least-squares fit of the linear model and the numeric intervals built on
//! it.
//!
//! The model is `y = X beta + eps` with `theta = a' beta` the parameter of
//! interest and `tau = c' beta - t` the parameter the prior information
//! concerns. All quadratic forms in `(X'X)^-1` are taken from the R factor
//! of a QR decomposition, never from an explicit inverse.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::special::{t_quantile, DegreesOfFreedom};
use crate::spline::IntervalFunctions;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("design matrix is rank deficient (column {0} is numerically dependent on earlier ones)")]
    RankDeficient(usize),
    #[error("need n > p for residual degrees of freedom, got n = {n}, p = {p}")]
    DegreesOfFreedom { n: usize, p: usize },
    #[error("vector a must be nonzero")]
    ZeroA,
    #[error("a and c are linearly dependent")]
    DependentAC,
    #[error("residual standard deviation is zero; the intervals are undefined")]
    Degenerate,
    #[error("interval functions were built for m = {functions}, but the fit has m = {fit}")]
    DofMismatch { functions: u32, fit: u32 },
    #[error("invalid alpha {0}")]
    Alpha(f64),
    #[error("data file: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Response, design and the two linear combinations of interest.
#[derive(Debug, Clone)]
pub struct RegressionData {
    x: DMatrix<f64>,
    y: DVector<f64>,
    a: DVector<f64>,
    c_vec: DVector<f64>,
    t_shift: f64,
}

impl RegressionData {
    /// Checks shapes, `n > p`, `a != 0` and that `a` and `c` are linearly
    /// independent. The rank of `X` is checked by [`fit`].
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        a: DVector<f64>,
        c_vec: DVector<f64>,
        t_shift: f64,
    ) -> Result<Self, RegressionError> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(RegressionError::Shape(format!("y has {} entries, X has {n} rows", y.len())));
        }
        if a.len() != p || c_vec.len() != p {
            return Err(RegressionError::Shape(format!(
                "a and c need {p} entries, got {} and {}",
                a.len(),
                c_vec.len()
            )));
        }
        if p == 0 || n <= p {
            return Err(RegressionError::DegreesOfFreedom { n, p });
        }
        let finite = |v: &[f64]| v.iter().all(|e| e.is_finite());
        if !finite(x.as_slice()) || !finite(y.as_slice()) || !finite(a.as_slice()) || !finite(c_vec.as_slice()) || !t_shift.is_finite() {
            return Err(RegressionError::Data("non-finite value in the inputs".into()));
        }
        if a.amax() == 0.0 {
            return Err(RegressionError::ZeroA);
        }
        // Gram determinant of (a, c) relative to |a|^2 |c|^2 is sin^2 of their angle.
        let (aa, cc, ac) = (a.norm_squared(), c_vec.norm_squared(), a.dot(&c_vec));
        if cc == 0.0 || aa * cc - ac * ac <= 1e-24 * aa * cc {
            return Err(RegressionError::DependentAC);
        }
        Ok(Self {
            x,
            y,
            a,
            c_vec,
            t_shift,
        })
    }

    /// Reads `X` and `y` from a CSV file with a header row. Columns are
    /// selected by name; `intercept` prepends a column of ones.
    pub fn from_csv_path(
        path: &Path,
        response: &str,
        predictors: &[String],
        intercept: bool,
        a: DVector<f64>,
        c_vec: DVector<f64>,
        t_shift: f64,
    ) -> Result<Self, RegressionError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, response, predictors, intercept, a, c_vec, t_shift)
    }

    pub fn from_csv_reader<R: Read>(
        reader: R,
        response: &str,
        predictors: &[String],
        intercept: bool,
        a: DVector<f64>,
        c_vec: DVector<f64>,
        t_shift: f64,
    ) -> Result<Self, RegressionError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| RegressionError::Data(format!("no column named {name:?}")))
        };
        let yi = column(response)?;
        let xi = predictors.iter().map(|p| column(p)).collect::<Result<Vec<_>, _>>()?;
        let p = xi.len() + usize::from(intercept);
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64, RegressionError> {
                let field = rec.get(i).unwrap_or("");
                field
                    .parse::<f64>()
                    .map_err(|_| RegressionError::Data(format!("row {}: cannot parse {field:?} in column {:?}", row + 2, &headers[i])))
            };
            ys.push(get(yi)?);
            if intercept {
                xs.push(1.0);
            }
            for &i in &xi {
                xs.push(get(i)?);
            }
        }
        let n = ys.len();
        let x = DMatrix::from_row_slice(n, p, &xs);
        Self::new(x, DVector::from_vec(ys), a, c_vec, t_shift)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Same design and combinations with a different response.
    pub fn with_y(&self, y: DVector<f64>) -> Result<Self, RegressionError> {
        Self::new(self.x.clone(), y, self.a.clone(), self.c_vec.clone(), self.t_shift)
    }
}

/// Least-squares quantities the interval rules need.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub beta_hat: DVector<f64>,
    pub theta_hat: f64,
    pub tau_hat: f64,
    pub sigma_hat: f64,
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
    pub rho: f64,
    /// `tau_hat / (sigma_hat sqrt(v22))`; NaN when the fit is degenerate.
    pub gamma_stat: f64,
    pub m: DegreesOfFreedom,
    /// Residuals vanish to rounding, so `sigma_hat` is effectively zero.
    pub degenerate: bool,
}

// Relative size of sigma_hat, against the RMS of y, below which the
// residuals are treated as rounding noise.
const DEGENERATE_REL: f64 = 1e-12;
// Relative size of a diagonal entry of R below which X is rank deficient.
const RANK_REL: f64 = 1e-12;

pub fn fit(data: &RegressionData) -> Result<FitSummary, RegressionError> {
    let (n, p) = data.x.shape();
    let qr = data.x.clone().qr();
    let r = qr.r();
    let r_max = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..p {
        if !(r[(i, i)].abs() > RANK_REL * r_max) {
            return Err(RegressionError::RankDeficient(i));
        }
    }
    let qty = qr.q().transpose() * &data.y;
    let beta_hat = r
        .solve_upper_triangular(&qty)
        .ok_or(RegressionError::RankDeficient(p - 1))?;
    let resid = &data.y - &data.x * &beta_hat;
    let m_raw = n - p;
    let m = DegreesOfFreedom::new(m_raw as u32).map_err(|_| RegressionError::DegreesOfFreedom { n, p })?;
    let sigma_hat = (resid.norm_squared() / m_raw as f64).sqrt();

    // (X'X)^-1 = R^-1 R^-T, so u' (X'X)^-1 v = (R^-T u)' (R^-T v).
    let rt = r.transpose();
    let ra = rt.solve_lower_triangular(&data.a).ok_or(RegressionError::RankDeficient(p - 1))?;
    let rc = rt.solve_lower_triangular(&data.c_vec).ok_or(RegressionError::RankDeficient(p - 1))?;
    let v11 = ra.norm_squared();
    let v22 = rc.norm_squared();
    let v12 = ra.dot(&rc);
    let rho = (v12 / (v11 * v22).sqrt()).clamp(-1.0, 1.0);

    let theta_hat = data.a.dot(&beta_hat);
    let tau_hat = data.c_vec.dot(&beta_hat) - data.t_shift;
    let y_rms = data.y.norm() / (n as f64).sqrt();
    let degenerate = !(sigma_hat > DEGENERATE_REL * y_rms);
    let gamma_stat = if degenerate { f64::NAN } else { tau_hat / (sigma_hat * v22.sqrt()) };
    Ok(FitSummary {
        beta_hat,
        theta_hat,
        tau_hat,
        sigma_hat,
        v11,
        v22,
        v12,
        rho,
        gamma_stat,
        m,
        degenerate,
    })
}

/// A numeric interval for `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub center: f64,
    pub upper: f64,
    pub half_width: f64,
}

impl Interval {
    fn from_center(center: f64, half_width: f64) -> Self {
        Self {
            lower: center - half_width,
            center,
            upper: center + half_width,
            half_width,
        }
    }
}

fn check(fit: &FitSummary) -> Result<f64, RegressionError> {
    if fit.degenerate {
        return Err(RegressionError::Degenerate);
    }
    Ok(fit.v11.sqrt() * fit.sigma_hat)
}

/// `theta_hat ± t_{m, 1 - alpha/2} sqrt(v11) sigma_hat`.
pub fn standard_interval(fit: &FitSummary, alpha: f64) -> Result<Interval, RegressionError> {
    let scale = check(fit)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RegressionError::Alpha(alpha));
    }
    let t = t_quantile(fit.m, 1.0 - alpha / 2.0).map_err(|_| RegressionError::Alpha(alpha))?;
    Ok(Interval::from_center(fit.theta_hat, scale * t))
}

/// The interval defined by `(b, s)`: centre `theta_hat - sqrt(v11) sigma_hat b(g)`
/// and half-width `sqrt(v11) sigma_hat s(|g|)` with `g` the standardised
/// statistic.
pub fn new_interval(fit: &FitSummary, f: &IntervalFunctions) -> Result<Interval, RegressionError> {
    let scale = check(fit)?;
    if f.m() != fit.m {
        return Err(RegressionError::DofMismatch {
            functions: f.m().get(),
            fit: fit.m.get(),
        });
    }
    let g = fit.gamma_stat;
    Ok(Interval::from_center(fit.theta_hat - scale * f.eval_b(g), scale * f.s_abs(g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::{DecisionVector, IntervalLayout, KnotGrid, SEnd};
    use std::f64::consts::PI;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn pinned() -> RegressionData {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        RegressionData::new(x, dv(&[1.0, 1.0, 3.0]), dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), 0.0).unwrap()
    }

    fn layout(m: u32, d: f64) -> IntervalLayout {
        IntervalLayout::new(KnotGrid::equally_spaced(d, 7).unwrap(), DegreesOfFreedom::new(m).unwrap(), 0.05, SEnd::Natural).unwrap()
    }

    fn wiggly(m: u32, d: f64) -> IntervalFunctions {
        let l = layout(m, d);
        let t = l.t_quant;
        let z = DecisionVector::new(vec![0.4, 0.7, 0.5, 0.2, 0.05], vec![0.8 * t, 0.85 * t, 0.95 * t, 1.05 * t, 1.1 * t, 1.02 * t]);
        IntervalFunctions::build(l, z).unwrap()
    }

    #[test]
    fn pinned_dataset_matches_hand_solution() {
        // (X'X)^-1 = (1/3)[[2,-1],[-1,2]], X'y = (4, 4).
        let s = fit(&pinned()).unwrap();
        assert!((s.beta_hat[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.beta_hat[1] - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.sigma_hat.powi(2) - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.v11 - 2.0 / 3.0).abs() < 1e-12 && (s.v22 - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.v12 + 1.0 / 3.0).abs() < 1e-12);
        assert!((s.rho + 0.5).abs() < 1e-12);
        assert_eq!(s.m.get(), 1);
        assert!(!s.degenerate);
        assert!((s.theta_hat - 4.0 / 3.0).abs() < 1e-12 && (s.tau_hat - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pinned_standard_interval() {
        let s = fit(&pinned()).unwrap();
        let iv = standard_interval(&s, 0.05).unwrap();
        // With one degree of freedom t is Cauchy: quantile tan(pi (p - 1/2)).
        let t = (PI * 0.475).tan();
        let half = t * (2.0f64 / 3.0).sqrt() * (1.0f64 / 3.0).sqrt();
        assert!((iv.center - 4.0 / 3.0).abs() < 1e-12);
        assert!((iv.half_width - half).abs() < 1e-10);
        assert!((iv.half_width - 5.989_76).abs() < 1e-5);
        assert_eq!(iv.upper - iv.center, iv.center - iv.lower);
        assert!(standard_interval(&s, 0.9999999).unwrap().half_width < 1e-5);
    }

    #[test]
    fn textbook_t_interval_on_random_designs() {
        use proptest::prelude::*;
        use proptest::test_runner::{Config, TestRunner};
        let mut runner = TestRunner::new(Config {
            cases: 64,
            ..Config::default()
        });
        let strat = (prop::collection::vec(-2.0f64..2.0, 24), prop::collection::vec(-5.0f64..5.0, 8));
        runner
            .run(&strat, |(xv, yv)| {
                let mut x = DMatrix::from_row_slice(8, 3, &xv);
                for i in 0..8 {
                    x[(i, 0)] = 1.0;
                }
                let y = DVector::from_vec(yv);
                let a = dv(&[0.0, 1.0, 0.5]);
                let c = dv(&[0.0, 0.0, 1.0]);
                let xtx = x.transpose() * &x;
                prop_assume!(xtx.clone().symmetric_eigenvalues().min() > 0.05);
                let data = RegressionData::new(x.clone(), y.clone(), a.clone(), c.clone(), 0.3).unwrap();
                let s = fit(&data).unwrap();
                // Oracle: normal equations with an explicit inverse.
                let inv = xtx.try_inverse().unwrap();
                let beta = &inv * x.transpose() * &y;
                let rss = (&y - &x * &beta).norm_squared();
                let sigma = (rss / 5.0).sqrt();
                let v11 = (a.transpose() * &inv * &a)[0];
                let v12 = (a.transpose() * &inv * &c)[0];
                let v22 = (c.transpose() * &inv * &c)[0];
                prop_assert!((&s.beta_hat - &beta).amax() < 1e-10);
                prop_assert!((s.sigma_hat - sigma).abs() < 1e-10);
                prop_assert!((s.v11 - v11).abs() < 1e-10 && (s.v12 - v12).abs() < 1e-10 && (s.v22 - v22).abs() < 1e-10);
                prop_assert!((s.tau_hat - (c.dot(&beta) - 0.3)).abs() < 1e-10);
                let iv = standard_interval(&s, 0.05).unwrap();
                // t_{5, 0.975} to 10 digits.
                let half = 2.570581835636 * v11.sqrt() * sigma;
                prop_assert!((iv.half_width - half).abs() < 1e-10);
                prop_assert!((iv.center - a.dot(&beta)).abs() < 1e-10);
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn construction_errors() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = dv(&[1.0, 1.0, 3.0]);
        let e = RegressionData::new(x.clone(), y.clone(), dv(&[1.0, 0.0]), dv(&[1.0, 0.0]), 0.0).unwrap_err();
        assert!(matches!(e, RegressionError::DependentAC));
        let e = RegressionData::new(x.clone(), y.clone(), dv(&[1.0, 2.0]), dv(&[-2.0, -4.0]), 0.0).unwrap_err();
        assert!(matches!(e, RegressionError::DependentAC));
        let e = RegressionData::new(x.clone(), y.clone(), dv(&[0.0, 0.0]), dv(&[1.0, 0.0]), 0.0).unwrap_err();
        assert!(matches!(e, RegressionError::ZeroA));
        let e = RegressionData::new(x.clone(), dv(&[1.0, 2.0]), dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), 0.0).unwrap_err();
        assert!(matches!(e, RegressionError::Shape(_)));
        let x2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let e = RegressionData::new(x2, dv(&[1.0, 2.0]), dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), 0.0).unwrap_err();
        assert!(matches!(e, RegressionError::DegreesOfFreedom { n: 2, p: 2 }));
        // Third column is the sum of the first two.
        let x3 = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 3.0]);
        let data = RegressionData::new(x3, dv(&[1.0, 2.0, 3.0, 4.0]), dv(&[1.0, 0.0, 0.0]), dv(&[0.0, 1.0, 0.0]), 0.0).unwrap();
        assert!(matches!(fit(&data).unwrap_err(), RegressionError::RankDeficient(2)));
    }

    #[test]
    fn perfect_fit_is_flagged_degenerate() {
        let data = pinned().with_y(dv(&[1.0, 2.0, 3.0])).unwrap();
        let s = fit(&data).unwrap();
        assert!(s.degenerate);
        assert!(s.gamma_stat.is_nan());
        assert!(matches!(standard_interval(&s, 0.05), Err(RegressionError::Degenerate)));
        assert!(matches!(new_interval(&s, &wiggly(1, 6.0)), Err(RegressionError::Degenerate)));
    }

    #[test]
    fn standard_functions_reproduce_the_standard_interval() {
        let f = IntervalFunctions::standard(layout(1, 6.0));
        for y in [[1.0, 1.0, 3.0], [0.3, -2.0, 7.5], [10.0, 9.0, -4.0]] {
            let s = fit(&pinned().with_y(dv(&y)).unwrap()).unwrap();
            let a = standard_interval(&s, 0.05).unwrap();
            let b = new_interval(&s, &f).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn large_statistic_gives_the_standard_interval() {
        let f = wiggly(1, 6.0);
        // y = (0, 10, 10.2): beta_2 is large relative to the residual scale.
        let s = fit(&pinned().with_y(dv(&[0.0, 10.0, 10.2])).unwrap()).unwrap();
        assert!(s.gamma_stat.abs() >= 6.0, "{}", s.gamma_stat);
        assert_eq!(new_interval(&s, &f).unwrap(), standard_interval(&s, 0.05).unwrap());
    }

    #[test]
    fn zero_statistic_centres_on_theta_hat() {
        let f = wiggly(1, 6.0);
        let mut data = pinned();
        let s0 = fit(&data).unwrap();
        data.t_shift = s0.tau_hat;
        let s = fit(&data).unwrap();
        assert!(s.gamma_stat.abs() < 1e-14);
        let iv = new_interval(&s, &f).unwrap();
        let scale = s.v11.sqrt() * s.sigma_hat;
        assert!((iv.center - s.theta_hat).abs() < 1e-14);
        assert!((iv.half_width - scale * f.eval_s(0.0).unwrap()).abs() < 1e-14);
        assert!(iv.half_width < standard_interval(&s, 0.05).unwrap().half_width);
    }

    #[test]
    fn mismatched_degrees_of_freedom_rejected() {
        let s = fit(&pinned()).unwrap();
        let e = new_interval(&s, &wiggly(5, 6.0)).unwrap_err();
        assert!(matches!(e, RegressionError::DofMismatch { functions: 5, fit: 1 }));
    }

    #[test]
    fn scaling_y_scales_the_endpoints() {
        use proptest::prelude::*;
        let f = wiggly(1, 6.0);
        proptest!(|(y in prop::collection::vec(-5.0f64..5.0, 3), k in 0.01f64..100.0)| {
            let base = pinned().with_y(dv(&y)).unwrap();
            let s = fit(&base).unwrap();
            prop_assume!(!s.degenerate);
            let iv = new_interval(&s, &f).unwrap();
            let scaled = fit(&base.with_y(dv(&y) * k).unwrap()).unwrap();
            let ivk = new_interval(&scaled, &f).unwrap();
            let tol = 1e-9 * (1.0 + k) * (1.0 + iv.lower.abs() + iv.upper.abs());
            prop_assert!((ivk.lower - k * iv.lower).abs() < tol);
            prop_assert!((ivk.upper - k * iv.upper).abs() < tol);
        });
    }

    #[test]
    fn endpoints_move_continuously_along_a_path() {
        // Move y so that the statistic sweeps through 0 and past d.
        let f = wiggly(1, 6.0);
        let y0 = dv(&[1.0, -3.0, -1.5]);
        let y1 = dv(&[1.0, 6.0, 7.5]);
        let steps = 100;
        let ends: Vec<(f64, f64, f64)> = (0..=steps)
            .map(|i| {
                let u = i as f64 / steps as f64;
                let s = fit(&pinned().with_y(&y0 * (1.0 - u) + &y1 * u).unwrap()).unwrap();
                let iv = new_interval(&s, &f).unwrap();
                (iv.lower, iv.upper, s.gamma_stat)
            })
            .collect();
        assert!(ends.first().unwrap().2 < 0.0 && ends.last().unwrap().2 > 6.0);
        let jumps: Vec<f64> = ends.windows(2).map(|w| (w[1].0 - w[0].0).abs().max((w[1].1 - w[0].1).abs())).collect();
        // Path-local Lipschitz estimate: no step may exceed a few times its
        // neighbours' median.
        for i in 0..jumps.len() {
            let lo = i.saturating_sub(3);
            let hi = (i + 4).min(jumps.len());
            let mut local: Vec<f64> = jumps[lo..hi].to_vec();
            local.sort_by(f64::total_cmp);
            let med = local[local.len() / 2];
            assert!(jumps[i] <= 4.0 * med + 1e-12, "step {i}: {} vs local median {med}", jumps[i]);
        }
    }

    #[test]
    fn csv_columns_selected_by_name() {
        let text = "id, y, x2, x1\n1, 1, 0, 0\n2, 1, 1, 1\n3, 3, 1, 0\n";
        let data = RegressionData::from_csv_reader(text.as_bytes(), "y", &["x2".into()], true, dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), 0.0).unwrap();
        assert_eq!(data.x().shape(), (3, 2));
        assert_eq!(data.x().column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 1.0]);
        assert_eq!(data.y().as_slice(), &[1.0, 1.0, 3.0]);
        let e = RegressionData::from_csv_reader(text.as_bytes(), "z", &[], true, dv(&[1.0]), dv(&[0.0]), 0.0).unwrap_err();
        assert!(e.to_string().contains("\"z\""));
        let bad = "y,x\n1,a\n2,3\n";
        let e = RegressionData::from_csv_reader(bad.as_bytes(), "y", &["x".into()], false, dv(&[1.0]), dv(&[0.0]), 0.0);
        assert!(e.is_err());
    }
}
