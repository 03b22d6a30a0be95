mod common;

use bgamma::dist::Params;
use bgamma::estimate::{
    expected_information, fit_mle, loglik, lr_test, observed_information, score, EstimateError,
};
use bgamma::io::wheaton;
use bgamma::optimize::{numeric_gradient, numeric_hessian};
use bgamma::BGamma;
use common::rel_err;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn p(a: f64, b: f64, d: f64) -> BGamma {
    Params::new(a, b, d).unwrap()
}

fn ll_at(x: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |w: &[f64]| match Params::new(w[0], w[1], w[2]) {
        Ok(q) => loglik(&q, x).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn derivatives_match_differences(
        a in 0.4f64..5.0, b in 0.2f64..4.0, dx in -3.0f64..6.0,
        n in 10usize..150, seed in any::<u64>(),
    ) {
        let truth = p(a, b, dx * b / a);
        let x = truth.sample(&mut ChaCha8Rng::seed_from_u64(seed), n).unwrap();
        let at = [a, b, truth.delta()];
        let s = score(&truth, &x).unwrap();
        let g = numeric_gradient(ll_at(&x), &at, 1e-6).unwrap();
        for i in 0..3 {
            prop_assert!(rel_err(s[i], g[i]) < 1e-4, "score {i}: {} vs {}", s[i], g[i]);
        }
        let info = observed_information(&truth, &x).unwrap();
        let h = numeric_hessian(ll_at(&x), &at, 1e-4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!(rel_err(-info[i][j], h[i][j]) < 1e-3, "({i},{j}): {} vs {}", -info[i][j], h[i][j]);
            }
        }
    }

    #[test]
    fn loglik_is_finite_on_valid_input(a in 0.1f64..20.0, b in 0.01f64..50.0, d in -50.0f64..50.0,
                                       x in prop::collection::vec(1e-6f64..1e3, 1..40)) {
        let v = loglik(&p(a, b, d), &x).unwrap();
        prop_assert!(v.is_finite());
    }
}

#[test]
fn expected_information_against_monte_carlo() {
    let truth = p(2.0, 1.5, 0.8);
    let n = 100_000;
    let x = truth.sample(&mut ChaCha8Rng::seed_from_u64(3), n).unwrap();
    let mc = observed_information(&truth, &x).unwrap();
    let e = expected_information(&truth).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let avg = mc[i][j] / n as f64;
            let scale = (e[i][i] * e[j][j]).sqrt();
            assert!((avg - e[i][j]).abs() < 0.02 * scale, "({i},{j}): {avg} vs {}", e[i][j]);
        }
    }
}

#[test]
fn recovers_gamma() {
    let x = p(2.0, 1.0, 0.0).sample(&mut ChaCha8Rng::seed_from_u64(8), 2000).unwrap();
    let fit = fit_mle(&x, true).unwrap();
    let se = fit.se.unwrap();
    assert!(fit.converged);
    assert!((fit.params.alpha() - 2.0).abs() < 3.0 * se[0]);
    assert!((fit.params.beta() - 1.0).abs() < 3.0 * se[1]);
    assert_eq!(fit.params.delta(), 0.0);
    assert_eq!(se[2], 0.0);
    assert_eq!(fit.k, 2);
}

#[test]
fn information_criteria_identities() {
    let x = p(1.5, 0.5, 0.4).sample(&mut ChaCha8Rng::seed_from_u64(21), 300).unwrap();
    let fit = fit_mle(&x, false).unwrap();
    let n = x.len() as f64;
    assert_eq!(fit.aic, -2.0 * fit.loglik + 6.0);
    assert_eq!(fit.bic, -2.0 * fit.loglik + 3.0 * n.ln());
    assert!((loglik(&fit.params, &x).unwrap() - fit.loglik).abs() < 1e-9);
}

#[test]
fn scale_equivariance() {
    // Rescaling the data by c maps (α, β, δ) to (α, β/c, δ/c).
    let x = p(1.5, 0.8, 0.6).sample(&mut ChaCha8Rng::seed_from_u64(4), 400).unwrap();
    let c = 7.5;
    let y: Vec<f64> = x.iter().map(|v| v * c).collect();
    let fx = fit_mle(&x, false).unwrap();
    let fy = fit_mle(&y, false).unwrap();
    assert!(rel_err(fy.params.alpha(), fx.params.alpha()) < 1e-3);
    assert!(rel_err(fy.params.beta() * c, fx.params.beta()) < 1e-3);
    assert!(rel_err(fy.params.delta() * c, fx.params.delta()) < 1e-3);
    assert!((fy.loglik + x.len() as f64 * c.ln() - fx.loglik).abs() < 1e-4);
}

#[test]
fn global_optimum_beats_local_starts() {
    // On the river data the δ < 0 local maximum must not be returned.
    let x = wheaton();
    let fit = fit_mle(&x, false).unwrap();
    assert!(fit.params.delta() > 0.1);
    for d in [-0.2, -0.067, 0.0, 0.05] {
        let local = fit_mle_fixed_delta(&x, d);
        assert!(local <= fit.loglik + 1e-9, "{d}");
    }
}

/// Profile log-likelihood at fixed δ, maximized over a coarse (α, β) grid.
fn fit_mle_fixed_delta(x: &[f64], d: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..60 {
        for j in 0..60 {
            let a = 0.3 + 0.05 * i as f64;
            let b = 0.02 + 0.005 * j as f64;
            if let Ok(q) = Params::new(a, b, d) {
                best = best.max(loglik(&q, x).unwrap());
            }
        }
    }
    best
}

#[test]
fn river_fit_and_likelihood_ratio() {
    let x = wheaton();
    let full = fit_mle(&x, false).unwrap();
    let gamma = fit_mle(&x, true).unwrap();
    assert!(full.converged && gamma.converged);
    assert!((full.params.alpha() - 1.054).abs() < 0.02);
    assert!((full.params.beta() - 0.176).abs() < 0.02);
    assert!((full.params.delta() - 0.177).abs() < 0.02);
    assert!((full.aic - 501.51).abs() < 0.2);
    assert!((gamma.aic - 506.68).abs() < 0.2);
    let lr = lr_test(&full, &gamma);
    assert_eq!(lr.df, 1);
    assert!((lr.statistic - 7.17).abs() < 0.05, "{}", lr.statistic);
    assert!(lr.p_value < 0.01);
    // Swapping the arguments clamps at zero.
    let back = lr_test(&gamma, &full);
    assert_eq!(back.statistic, 0.0);
    assert_eq!(back.p_value, 1.0);
}

#[test]
fn input_validation() {
    assert!(matches!(fit_mle(&[1.0, 2.0], false), Err(EstimateError::TooFewObservations { .. })));
    let bad = [1.0, 2.0, -3.0, 4.0, 5.0, 6.0];
    assert!(matches!(fit_mle(&bad, false), Err(EstimateError::InvalidObservation { index: 2, .. })));
    let nan = [1.0, 2.0, 3.0, f64::NAN, 5.0, 6.0];
    assert!(fit_mle(&nan, false).is_err());
}
