//! Simulated regressions: the empirical coverage of the new interval
//! matches the computed coverage probability.

mod common;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use common::solve_worked_example;
use prior_ci::quadrature::coverage_probability;
use prior_ci::regression::{fit, new_interval, RegressionData};

#[test]
fn simulated_coverage_matches_computed_coverage() {
    let (cfg, quad, report, f) = solve_worked_example(0.5);
    assert!(report.converged);

    // Rows (1, 0), (0, 1), (w, -w) with w^2 = 2/3 give corr(theta_hat, tau_hat) = 0.4.
    let w = (2.0f64 / 3.0).sqrt();
    let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, w, -w]);
    let a = DVector::from_vec(vec![1.0, 0.0]);
    let c = DVector::from_vec(vec![0.0, 1.0]);
    let base = RegressionData::new(x.clone(), DVector::zeros(3), a, c, 0.0).unwrap();
    let probe = fit(&base.with_y(DVector::from_vec(vec![1.0, 2.0, 0.5])).unwrap()).unwrap();
    assert!((probe.rho - cfg.rho).abs() < 1e-12, "design rho {}", probe.rho);
    let sd_tau = probe.v22.sqrt();

    let sigma = 1.7;
    let n_sims = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    for gamma in [0.0, 1.0, 5.0] {
        let beta = DVector::from_vec(vec![0.3, gamma * sigma * sd_tau]);
        let mean = &x * &beta;
        let mut hits = 0usize;
        for _ in 0..n_sims {
            let noise = DVector::from_fn(3, |_, _| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
            let s = fit(&base.with_y(&mean + noise).unwrap()).unwrap();
            let iv = new_interval(&s, &f).unwrap();
            if iv.lower <= beta[0] && beta[0] <= iv.upper {
                hits += 1;
            }
        }
        let p = coverage_probability(gamma, &f, &cfg, &quad).unwrap();
        let emp = hits as f64 / n_sims as f64;
        let se = (p * (1.0 - p) / n_sims as f64).sqrt();
        assert!((emp - p).abs() <= 3.0 * se, "gamma {gamma}: empirical {emp} vs computed {p} (3 se = {})", 3.0 * se);
    }
}
