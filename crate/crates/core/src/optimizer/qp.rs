//! Dense strictly convex quadratic programs by the Goldfarb-Idnani dual
//! active-set method:
//!
//! ```text
//! minimise ½ xᵀ H x + gᵀ x   subject to   A x >= b
//! ```
//!
//! with `H` symmetric positive definite and one row of `A` per constraint.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("quadratic term is not positive definite")]
    NotPositiveDefinite,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("active-set iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per row of `A`; zero for inactive rows.
    pub multipliers: DVector<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
}

const DEPENDENT_TOL: f64 = 1e-10;

pub fn solve_qp(h: &DMatrix<f64>, g: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<QpSolution, QpError> {
    let n = h.nrows();
    let n_con = a.nrows();
    let chol: Cholesky<f64, Dyn> = Cholesky::new(h.clone()).ok_or(QpError::NotPositiveDefinite)?;
    let l = chol.l();
    let mut x = -chol.solve(g);
    let row_norms: Vec<f64> = (0..n_con).map(|i| a.row(i).norm().max(f64::MIN_POSITIVE)).collect();
    // L⁻¹ aᵢ for every constraint, computed once.
    let mut scaled = a.transpose();
    if !l.solve_lower_triangular_mut(&mut scaled) {
        return Err(QpError::NotPositiveDefinite);
    }

    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let max_iter = 10 * (n + n_con) + 50;

    loop {
        let mut p = None;
        let mut worst = 0.0;
        for i in 0..n_con {
            if active.contains(&i) {
                continue;
            }
            let slack = (a.row(i) * &x)[0] - b[i];
            let tol = 1e-12 * (1.0 + b[i].abs());
            if slack < -tol {
                let v = slack / row_norms[i];
                if v < worst {
                    worst = v;
                    p = Some(i);
                }
            }
        }
        let Some(p) = p else {
            let mut multipliers = DVector::zeros(n_con);
            for (&i, &ui) in active.iter().zip(&u) {
                multipliers[i] = ui;
            }
            return Ok(QpSolution {
                x,
                multipliers,
                active,
                iterations,
            });
        };

        let mut u_plus = u.clone();
        u_plus.push(0.0);
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit);
            }
            let k = active.len();
            let np_t = scaled.column(p).into_owned();
            let (r, res) = if k == 0 {
                (DVector::zeros(0), np_t.clone())
            } else {
                let mut nt = DMatrix::zeros(n, k);
                for (j, &i) in active.iter().enumerate() {
                    nt.set_column(j, &scaled.column(i));
                }
                let qr = nt.clone().qr();
                let q1 = qr.q();
                let rmat = qr.r();
                let rhs = q1.transpose() * &np_t;
                let r = rmat.solve_upper_triangular(&rhs).unwrap_or_else(|| DVector::zeros(k));
                let res = &np_t - &nt * &r;
                (r, res)
            };
            let dependent = res.norm() <= DEPENDENT_TOL * np_t.norm();
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for j in 0..k {
                if r[j] > 0.0 {
                    let t = u_plus[j] / r[j];
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            let mut z = res.clone();
            let t2 = if dependent {
                f64::INFINITY
            } else {
                if !l.tr_solve_lower_triangular_mut(&mut z) {
                    return Err(QpError::NotPositiveDefinite);
                }
                let slack = (a.row(p) * &x)[0] - b[p];
                -slack / res.norm_squared()
            };
            if t1.is_infinite() && t2.is_infinite() {
                return Err(QpError::Infeasible);
            }
            let t = t1.min(t2);
            if !dependent {
                x.axpy(t, &z, 1.0);
            }
            for j in 0..k {
                u_plus[j] -= t * r[j];
            }
            u_plus[k] += t;
            if t2 <= t1 {
                active.push(p);
                u = u_plus;
                break;
            }
            let j = drop.expect("finite t1 has an index");
            active.remove(j);
            u_plus.remove(j);
        }
    }
}
