//! Coverage constraints and the criterion on the fixed product rule, with
//! exact first and second derivatives in the free knot values.
//!
//! With `A = (w(b+s) - μ)/σ`, `B = (w(b-s) - μ)/σ` and `k = Φ(A) - Φ(B)`:
//!
//! ```text
//! ∂k/∂b_i = (w/σ) (φ(A) - φ(B)) B_i(x)
//! ∂k/∂s_j = (w/σ) (φ(A) + φ(B)) S_j(x)
//! ∇²k     = (w/σ)² (-A φ(A) v vᵀ + B φ(B) u uᵀ),   v = (B, S), u = (B, -S)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::quadrature::{Evaluator, InnerRange, ProblemConfig, QuadratureError};
use crate::special::{normal_pdf, std_normal_interval};
use crate::spline::{IntervalFunctions, SplineBasis};

/// Constraint value `(1 - α) - coverage(γ)` and optionally its gradient.
#[derive(Debug, Clone)]
pub struct ConstraintValue {
    pub gamma: f64,
    pub value: f64,
    pub grad: Option<DVector<f64>>,
}

/// Everything needed to evaluate constraints and their derivatives on the
/// fixed rule.
#[derive(Debug, Clone)]
pub struct Discretization {
    evaluator: Evaluator,
    basis: SplineBasis,
    n_b: usize,
    n: usize,
    objective_grad: DVector<f64>,
}

impl Discretization {
    pub fn new(evaluator: Evaluator) -> Self {
        let cfg = evaluator.config();
        let basis = SplineBasis::new(&cfg.knots, cfg.s_end);
        let n_b = basis.n_b();
        let n_s = basis.n_s();
        let n = n_b + n_s;
        let mut g = DVector::zeros(n);
        for (j, v) in basis.s_integrals().into_iter().enumerate() {
            g[n_b + j] = cfg.lambda * v;
        }
        let mut bb = vec![0.0; n_b];
        let mut sb = vec![0.0; n_s];
        evaluator.rule().for_each(0.0, InnerRange::Positive, |node, x, wt| {
            basis.eval_into(x, &mut bb, &mut sb);
            let k = node.w2 * wt * normal_pdf(node.w * x);
            for j in 0..n_s {
                g[n_b + j] += k * sb[j];
            }
        });
        Self {
            evaluator,
            basis,
            n_b,
            n,
            objective_grad: g,
        }
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn config(&self) -> &ProblemConfig {
        self.evaluator.config()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Gradient of the criterion, which is affine in the knot values.
    pub fn objective_grad(&self) -> &DVector<f64> {
        &self.objective_grad
    }

    pub fn objective(&self, f: &IntervalFunctions) -> Result<f64, QuadratureError> {
        self.evaluator.objective(f)
    }

    fn basis_at(&self, x: f64, bb: &mut [f64], sb: &mut [f64]) {
        self.basis.eval_into(x.abs(), bb, sb);
        if x < 0.0 {
            bb.iter_mut().for_each(|v| *v = -*v);
        }
    }

    pub fn constraint(&self, gamma: f64, f: &IntervalFunctions, with_grad: bool) -> Result<ConstraintValue, QuadratureError> {
        if !with_grad {
            let cov = self.evaluator.coverage_at(gamma, f)?;
            return Ok(ConstraintValue {
                gamma,
                value: (1.0 - self.config().alpha) - cov,
                grad: None,
            });
        }
        let cfg = self.config();
        let (rho, sd, t) = (cfg.rho, cfg.cond_sd(), f.t_quant());
        let n_b = self.n_b;
        let mut bb = vec![0.0; n_b];
        let mut sb = vec![0.0; self.n - n_b];
        let mut acc = 0.0;
        let mut grad = DVector::zeros(self.n);
        self.evaluator.rule().for_each(gamma, InnerRange::Symmetric, |node, x, wt| {
            let w = node.w;
            let u = w * x - gamma;
            let mu = rho * u;
            let b = f.eval_b(x);
            let s = f.s_abs(x);
            let za = (w * (b + s) - mu) / sd;
            let zb = (w * (b - s) - mu) / sd;
            let k = std_normal_interval(zb, za);
            let kd = std_normal_interval((-t * w - mu) / sd, (t * w - mu) / sd);
            let weight = node.w1 * wt * normal_pdf(u);
            acc += weight * (k - kd);
            let (pa, pb) = (normal_pdf(za), normal_pdf(zb));
            let scale = weight * w / sd;
            let (cb, cs) = (scale * (pa - pb), scale * (pa + pb));
            if cb == 0.0 && cs == 0.0 {
                return;
            }
            self.basis_at(x, &mut bb, &mut sb);
            for i in 0..n_b {
                grad[i] -= cb * bb[i];
            }
            for j in 0..sb.len() {
                grad[n_b + j] -= cs * sb[j];
            }
        });
        Ok(ConstraintValue {
            gamma,
            value: -acc,
            grad: Some(grad),
        })
    }

    /// Hessian of `(1 - α) - coverage(γ)` with respect to the knot values.
    pub fn constraint_hessian(&self, gamma: f64, f: &IntervalFunctions) -> DMatrix<f64> {
        let cfg = self.config();
        let (rho, sd) = (cfg.rho, cfg.cond_sd());
        let n_b = self.n_b;
        let n = self.n;
        let mut bb = vec![0.0; n_b];
        let mut sb = vec![0.0; n - n_b];
        let mut v = vec![0.0; n];
        let mut uvec = vec![0.0; n];
        let mut hess = DMatrix::zeros(n, n);
        self.evaluator.rule().for_each(gamma, InnerRange::Symmetric, |node, x, wt| {
            let w = node.w;
            let u = w * x - gamma;
            let mu = rho * u;
            let b = f.eval_b(x);
            let s = f.s_abs(x);
            let za = (w * (b + s) - mu) / sd;
            let zb = (w * (b - s) - mu) / sd;
            let weight = node.w1 * wt * normal_pdf(u) * (w / sd) * (w / sd);
            let ca = -weight * (-za * normal_pdf(za));
            let cb = -weight * (zb * normal_pdf(zb));
            if ca == 0.0 && cb == 0.0 {
                return;
            }
            self.basis_at(x, &mut bb, &mut sb);
            v[..n_b].copy_from_slice(&bb);
            uvec[..n_b].copy_from_slice(&bb);
            for j in 0..sb.len() {
                v[n_b + j] = sb[j];
                uvec[n_b + j] = -sb[j];
            }
            for c in 0..n {
                let (va, ua) = (ca * v[c], cb * uvec[c]);
                for r in c..n {
                    hess[(r, c)] += va * v[r] + ua * uvec[r];
                }
            }
        });
        for c in 0..n {
            for r in (c + 1)..n {
                hess[(c, r)] = hess[(r, c)];
            }
        }
        hess
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureSpec;
    use crate::special::DegreesOfFreedom;
    use crate::spline::{DecisionVector, KnotGrid, SEnd};

    fn setup(m: u32, rho: f64, d: f64, s_end: SEnd) -> Discretization {
        let dof = DegreesOfFreedom::new(m).unwrap();
        let cfg = ProblemConfig::new(dof, rho, 0.05, 0.2, KnotGrid::equally_spaced(d, 7).unwrap())
            .unwrap()
            .with_s_end(s_end);
        let quad = QuadratureSpec::for_problem(dof, 1e-5, 10.0).unwrap();
        Discretization::new(Evaluator::new(&cfg, &quad).unwrap())
    }

    fn build(disc: &Discretization, z: &[f64]) -> IntervalFunctions {
        let cfg = disc.config();
        IntervalFunctions::build(cfg.layout(), DecisionVector::from_flat(z, cfg.knots.q()).unwrap()).unwrap()
    }

    const Z: [f64; 11] = [3.0, 5.0, 4.0, 2.0, 0.5, 7.0, 9.0, 13.0, 16.0, 15.0, 13.5];

    #[test]
    fn gradient_matches_central_differences() {
        for (m, d, s_end) in [(1, 30.0, SEnd::Natural), (5, 8.0, SEnd::Flat)] {
            let disc = setup(m, 0.4, d, s_end);
            let z: Vec<f64> = if m == 1 { Z.to_vec() } else { Z.iter().map(|v| 0.3 * v).collect() };
            for gamma in [0.0, 2.5, 9.0] {
                let c = disc.constraint(gamma, &build(&disc, &z), true).unwrap();
                let plain = disc.constraint(gamma, &build(&disc, &z), false).unwrap();
                assert!((c.value - plain.value).abs() < 1e-13);
                let g = c.grad.unwrap();
                for i in 0..z.len() {
                    let h = 1e-5;
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[i] += h;
                    zm[i] -= h;
                    let fd = (disc.constraint(gamma, &build(&disc, &zp), false).unwrap().value
                        - disc.constraint(gamma, &build(&disc, &zm), false).unwrap().value)
                        / (2.0 * h);
                    assert!((fd - g[i]).abs() < 1e-8 * (1.0 + g[i].abs()), "m={m} γ={gamma} i={i}: fd {fd} vs {}", g[i]);
                }
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let disc = setup(1, -0.5, 30.0, SEnd::Natural);
        let z = Z.to_vec();
        for gamma in [0.0, 4.0] {
            let h = disc.constraint_hessian(gamma, &build(&disc, &z));
            for i in 0..z.len() {
                let step = 1e-4;
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += step;
                zm[i] -= step;
                let gp = disc.constraint(gamma, &build(&disc, &zp), true).unwrap().grad.unwrap();
                let gm = disc.constraint(gamma, &build(&disc, &zm), true).unwrap().grad.unwrap();
                let col = (gp - gm) / (2.0 * step);
                for r in 0..z.len() {
                    assert!((col[r] - h[(r, i)]).abs() < 1e-7 * (1.0 + h[(r, i)].abs()), "γ={gamma} ({r},{i}): {} vs {}", col[r], h[(r, i)]);
                }
            }
        }
    }

    #[test]
    fn objective_gradient_matches_differences() {
        let disc = setup(1, 0.4, 30.0, SEnd::Natural);
        let z = Z.to_vec();
        let g = disc.objective_grad();
        let f0 = disc.objective(&build(&disc, &z)).unwrap();
        for i in 0..z.len() {
            let mut zp = z.clone();
            zp[i] += 1.0;
            let df = disc.objective(&build(&disc, &zp)).unwrap() - f0;
            assert!((df - g[i]).abs() < 1e-10, "i={i}: {df} vs {}", g[i]);
        }
        // The criterion is affine, so it is determined by its gradient.
        let t = disc.config().t_quant();
        let lin: f64 = (5..11).map(|i| g[i] * (z[i] - t)).sum();
        assert!((lin - f0).abs() < 1e-10);
    }

    #[test]
    fn lowering_any_s_value_lowers_the_criterion() {
        for m in [1, 5, 76] {
            let disc = setup(m, 0.4, 6.0, SEnd::Natural);
            let g = disc.objective_grad();
            assert!(g.iter().take(5).all(|&v| v == 0.0));
            assert!(g.iter().skip(5).all(|&v| v > 0.0), "m={m}: {g}");
        }
    }
}
