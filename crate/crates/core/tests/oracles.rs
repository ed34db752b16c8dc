//! Monte Carlo estimates against exact moments of the discretized
//! experiment: the reference integral is itself a fine-grid sum with
//! `m = N_fine / n` points per coarse interval.

use funcrate::experiment::{run_experiment, RunOptions};
use funcrate::kernels::make_v_exponential;
use funcrate::rates::{simulate_discrepancies, strong_estimates, weak_estimates};
use funcrate::{ExperimentConfig, Process, TestFunction};

fn brownian(h: TestFunction, n_fine: usize, ladder: &[usize], m: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Process::Brownian, h).unwrap();
    cfg.weight = make_v_exponential(1.0).unwrap();
    cfg.n_fine = n_fine;
    cfg.n_ladder = ladder.to_vec();
    cfg.replicates = m;
    cfg.seed = seed;
    cfg
}

/// `E J²` for `h(x) = x` on Brownian paths: on each coarse interval of
/// length `δ`, `J = (δ/m) Σ_{i<m} W_{iδ/m}` with variance
/// `(δ/m)³ Σ_{i,j<m} min(i, j) = δ³ (m-1)(2m-1) / (6 m²)`.
fn linear_second_moment(n: usize, n_fine: usize) -> f64 {
    let m = (n_fine / n) as f64;
    let delta = 1.0 / n as f64;
    n as f64 * delta.powi(3) * (m - 1.0) * (2.0 * m - 1.0) / (6.0 * m * m)
}

/// `E J` for `h(x) = x²` from `E W_t² = t`: `(1/2)(1/n - 1/N)`.
fn quadratic_mean(n: usize, n_fine: usize) -> f64 {
    0.5 * (1.0 / n as f64 - 1.0 / n_fine as f64)
}

#[test]
fn discrete_second_moment_tends_to_continuum_value() {
    let n = 64;
    let continuum = 1.0 / (3.0 * (n * n) as f64);
    let rel = |nf| (linear_second_moment(n, nf) / continuum - 1.0).abs();
    assert!(rel(1 << 12) > 0.02);
    assert!(rel(1 << 20) < 1e-4);
}

#[test]
fn strong_error_matches_discrete_oracle() {
    let n_fine = 1 << 10;
    let cfg = brownian(TestFunction::Linear, n_fine, &[4, 16, 32], 20_000, 11);
    let d = simulate_discrepancies(&cfg, None).unwrap();
    for (n, est) in strong_estimates(&d, 2.0) {
        let exact = linear_second_moment(n, n_fine);
        assert!(
            (est.value - exact).abs() <= 3.0 * est.std_error,
            "n = {n}: {} vs {exact} (se {})",
            est.value,
            est.std_error
        );
    }
}

#[test]
fn weak_error_matches_discrete_oracle() {
    let n_fine = 1 << 10;
    let cfg = brownian(TestFunction::Quadratic, n_fine, &[4, 16, 32], 20_000, 12);
    let d = simulate_discrepancies(&cfg, None).unwrap();
    for (n, est) in weak_estimates(&d) {
        let exact = quadratic_mean(n, n_fine);
        assert!(
            (est.value - exact).abs() <= 3.0 * est.std_error,
            "n = {n}: {} vs {exact} (se {})",
            est.value,
            est.std_error
        );
    }
}

#[test]
fn linear_weak_error_vanishes_in_expectation() {
    let cfg = brownian(TestFunction::Linear, 256, &[4, 8, 16], 5_000, 13);
    let d = simulate_discrepancies(&cfg, None).unwrap();
    for (_, est) in weak_estimates(&d) {
        assert!(est.value <= 3.0 * est.std_error);
    }
}

#[test]
fn standard_errors_shrink_with_doubled_replicates() {
    let a = run_experiment(&brownian(TestFunction::Linear, 256, &[4, 8, 16], 4_000, 14), RunOptions::default())
        .unwrap();
    let b = run_experiment(&brownian(TestFunction::Linear, 256, &[4, 8, 16], 8_000, 14), RunOptions::default())
        .unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let ratio = rb.strong_se / ra.strong_se;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() <= 0.2, "n = {}: ratio {ratio}", ra.n);
    }
}

#[test]
fn smallest_strong_error_is_positive_at_sqrt_n_fine() {
    let r = run_experiment(&brownian(TestFunction::Linear, 1024, &[8, 16, 32], 500, 15), RunOptions::default())
        .unwrap();
    let last = r.rows.last().unwrap();
    assert_eq!(last.n, 32);
    assert!(last.strong_err_p > 0.0);
}

#[test]
fn constant_h_has_zero_error() {
    let cfg = brownian(TestFunction::constant(2.5), 256, &[4, 8, 16], 100, 16);
    let d = simulate_discrepancies(&cfg, None).unwrap();
    assert!(d.values.iter().flatten().all(|&j| j == 0.0));
}

#[test]
fn stable_occupation_errors_decrease() {
    let mut cfg = ExperimentConfig::new(
        Process::Stable {
            alpha: funcrate::StableIndex::new(1.5).unwrap(),
        },
        TestFunction::indicator(0.0, 1.0).unwrap(),
    )
    .unwrap();
    cfg.n_fine = 1024;
    cfg.n_ladder = vec![4, 8, 16, 32];
    cfg.replicates = 2_000;
    let r = run_experiment(&cfg, RunOptions::default()).unwrap();
    assert!(r.rows.windows(2).all(|w| w[1].strong_lp_root < w[0].strong_lp_root));
    assert!(r.rows.iter().all(|row| row.strong_err_p <= row.bound_thm1));
}
