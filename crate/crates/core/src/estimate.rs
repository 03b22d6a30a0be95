//! Maximum likelihood for complete iid samples.
//!
//! The search runs on `(ln α, ln β, δ)` so the simplex is unconstrained.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, Params};
use crate::optimize::{invert_spd, nelder_mead, Matrix, SimplexConfig, SimplexError};
use crate::quad::{integrate_half_line, QuadConfig};
use crate::specfun::{inc_gamma_pair, polygamma_pos};

type P = Params<f64>;

/// Gradient norm (∞, working scale) above which a fit is flagged as not converged.
pub const GRADIENT_TOLERANCE: f64 = 1e-3;
pub const MIN_SAMPLE_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("need at least {min} observations, got {n}")]
    TooFewObservations { n: usize, min: usize },
    #[error("observation {index} is {value}; all observations must be positive and finite")]
    InvalidObservation { index: usize, value: f64 },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("log-likelihood is not finite at the starting values")]
    NonFiniteStart,
}

fn validate(x: &[f64]) -> Result<(), EstimateError> {
    for (index, &value) in x.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(EstimateError::InvalidObservation { index, value });
        }
    }
    Ok(())
}

/// Sample summaries reused by every likelihood evaluation.
struct Sample<'a> {
    x: &'a [f64],
    n: f64,
    sum_x: f64,
    sum_ln_x: f64,
}

impl<'a> Sample<'a> {
    fn new(x: &'a [f64]) -> Self {
        Self {
            x,
            n: x.len() as f64,
            sum_x: x.iter().sum(),
            sum_ln_x: x.iter().map(|v| v.ln()).sum(),
        }
    }

    fn loglik(&self, p: &P) -> f64 {
        let (a, b, d) = (p.alpha(), p.beta(), p.delta());
        let bumps: f64 = if d == 0.0 {
            self.n * std::f64::consts::LN_2
        } else {
            self.x.iter().map(|&xi| p.bump(xi).ln()).sum()
        };
        -self.n * p.z().ln() + bumps + self.n * (a * b.ln() - crate::specfun::ln_gamma_pos(a))
            + (a - 1.0) * self.sum_ln_x
            - b * self.sum_x
    }
}

/// Log-likelihood `Σ ln f(xᵢ)`.
pub fn loglik(p: &P, x: &[f64]) -> Result<f64, EstimateError> {
    validate(x)?;
    Ok(Sample::new(x).loglik(p))
}

/// First and second partial derivatives of `Z` with respect to `(α, β, δ)`.
struct ZDerivatives {
    z: f64,
    grad: [f64; 3],
    hess: [[f64; 3]; 3],
}

fn z_derivatives(p: &P) -> ZDerivatives {
    let (a, b, d) = (p.alpha(), p.beta(), p.delta());
    let u = d / b;
    let za = (2.0 * a + 1.0) * u * u - 2.0 * u;
    let zb = 2.0 * a * u / b * (1.0 - (1.0 + a) * u);
    let zd = 2.0 * a / b * ((1.0 + a) * u - 1.0);
    let zaa = 2.0 * u * u;
    let zab = 2.0 * u / b * (1.0 - (2.0 * a + 1.0) * u);
    let zad = (2.0 * (2.0 * a + 1.0) * u - 2.0) / b;
    let zbb = -2.0 * a * u / (b * b) * (2.0 - 3.0 * (1.0 + a) * u);
    let zbd = 2.0 * a / (b * b) * (1.0 - 2.0 * (1.0 + a) * u);
    let zdd = 2.0 * a * (1.0 + a) / (b * b);
    ZDerivatives {
        z: p.z(),
        grad: [za, zb, zd],
        hess: [[zaa, zab, zad], [zab, zbb, zbd], [zad, zbd, zdd]],
    }
}

/// `D(u, v) = (Z_u Z_v / Z − Z_uv) / Z`, the second derivative of `−ln Z`.
fn d_term(zd: &ZDerivatives, i: usize, j: usize) -> f64 {
    (zd.grad[i] * zd.grad[j] / zd.z - zd.hess[i][j]) / zd.z
}

/// Score vector `(∂ℓ/∂α, ∂ℓ/∂β, ∂ℓ/∂δ)`.
pub fn score(p: &P, x: &[f64]) -> Result<[f64; 3], EstimateError> {
    validate(x)?;
    let s = Sample::new(x);
    Ok(score_sample(p, &s))
}

fn score_sample(p: &P, s: &Sample) -> [f64; 3] {
    let (a, b, d) = (p.alpha(), p.beta(), p.delta());
    let zd = z_derivatives(p);
    let n = s.n;
    let bump_term: f64 = s
        .x
        .iter()
        .map(|&xi| {
            let w = 1.0 - d * xi;
            xi * w / (1.0 + w * w)
        })
        .sum();
    [
        -n * zd.grad[0] / zd.z + n * b.ln() - n * polygamma_pos(0, a) + s.sum_ln_x,
        -n * zd.grad[1] / zd.z + n * a / b - s.sum_x,
        -n * zd.grad[2] / zd.z - 2.0 * bump_term,
    ]
}

/// Observed information: the negative Hessian of the log-likelihood.
pub fn observed_information(p: &P, x: &[f64]) -> Result<Matrix<f64>, EstimateError> {
    validate(x)?;
    let d = p.delta();
    let curvature: f64 = x
        .iter()
        .map(|&xi| {
            let w = 1.0 - d * xi;
            let g = 1.0 + w * w;
            xi * xi * (1.0 - w * w) / (g * g)
        })
        .sum();
    Ok(information(p, x.len() as f64, curvature))
}

fn information(p: &P, n: f64, curvature: f64) -> Matrix<f64> {
    let (a, b) = (p.alpha(), p.beta());
    let zd = z_derivatives(p);
    let mut h = [[0.0; 3]; 3];
    for (i, row) in h.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = n * d_term(&zd, i, j);
        }
    }
    h[0][0] -= n * polygamma_pos(1, a);
    h[1][1] -= n * a / (b * b);
    h[0][1] += n / b;
    h[1][0] += n / b;
    h[2][2] += 2.0 * curvature;
    h.iter().map(|row| row.iter().map(|v| -v).collect()).collect()
}

/// Expected information per observation.
///
/// The `(δ, δ)` entry needs `E[X²(1 − W²)/g²]`, `W = 1 − δX`, which has no closed
/// form and is integrated numerically.
pub fn expected_information(p: &P) -> Result<Matrix<f64>, EstimateError> {
    let e = expected_curvature(p)?;
    Ok(information(p, 1.0, e))
}

/// `E[X²(1 − W²)/g²]` with `W = 1 − δX`, `g = 1 + W²`.
pub fn expected_curvature(p: &P) -> Result<f64, EstimateError> {
    let d = p.delta();
    let q = integrate_half_line(
        |x: f64| {
            let f = p.pdf(x);
            if f == 0.0 {
                return 0.0;
            }
            let w = 1.0 - d * x;
            let g = 1.0 + w * w;
            f * x * x * (1.0 - w * w) / (g * g)
        },
        p.alpha(),
        p.mean(),
        &QuadConfig::default(),
    )
    .map_err(DistError::from)?;
    Ok(q.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: P,
    /// Standard errors of `(α̂, β̂, δ̂)`; zero for δ when it is held at 0.
    /// Absent when the observed information is not positive definite.
    pub se: Option<[f64; 3]>,
    /// Standard errors on the search scale `(ln α, ln β, δ)`.
    pub se_working: Option<[f64; 3]>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    /// Number of free parameters.
    pub k: usize,
    pub delta_fixed: bool,
    pub converged: bool,
    /// Inverse observed information for `(α, β, δ)`.
    pub vcov: Option<Matrix<f64>>,
    /// Score on the search scale at the optimum (δ entry 0 when δ is held at 0).
    pub gradient_at_opt: [f64; 3],
    pub iterations: usize,
}

fn working_to_params(w: &[f64], fix_delta_zero: bool) -> Result<P, DistError> {
    let delta = if fix_delta_zero { 0.0 } else { w[2] };
    Params::new(w[0].exp(), w[1].exp(), delta)
}

/// `δ x̄` values at which `(α, β)` is profiled.
pub(crate) const PROFILE_GRID: [f64; 15] = [-8.0, -4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0];
pub(crate) const PROFILE_KEEP: usize = 3;

/// Starting points `(ln α, ln β, δ)` from the best profile fits.
fn profile_starts(s: &Sample, a0: f64, b0: f64, mean: f64) -> Result<Vec<[f64; 3]>, EstimateError> {
    let cfg = SimplexConfig {
        initial_step: Some(vec![0.3, 0.3]),
        f_tol: 1e-6,
        x_tol: 1e-5,
        max_iter: 400,
        restart: false,
        ..SimplexConfig::default()
    };
    let mut found: Vec<(f64, [f64; 3])> = Vec::with_capacity(PROFILE_GRID.len());
    for &k in &PROFILE_GRID {
        let d = k / mean;
        let obj = |w: &[f64]| match Params::new(w[0].exp(), w[1].exp(), d) {
            Ok(p) => -s.loglik(&p),
            Err(_) => f64::INFINITY,
        };
        let start = [a0.ln(), b0.ln()];
        if !obj(&start).is_finite() {
            continue;
        }
        let r = nelder_mead(obj, &start, &cfg)?;
        found.push((r.f_opt, [r.x_opt[0], r.x_opt[1], d]));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found.into_iter().take(PROFILE_KEEP).map(|(_, w)| w).collect())
}

/// Maximum likelihood fit over `(α, β, δ)`, or over `(α, β)` with `δ = 0`.
///
/// The δ = 0 fit starts from the gamma method-of-moments estimate. With δ
/// free, the likelihood is often multimodal in δ, so `(α, β)` is first
/// profiled over a grid of δ values (which includes `δ₀ ∈ {−0.5/x̄, 0, 0.5/x̄}`)
/// and the best few grid points seed full three-parameter searches.
pub fn fit_mle(x: &[f64], fix_delta_zero: bool) -> Result<FitResult, EstimateError> {
    if x.len() < MIN_SAMPLE_SIZE {
        return Err(EstimateError::TooFewObservations {
            n: x.len(),
            min: MIN_SAMPLE_SIZE,
        });
    }
    validate(x)?;
    let s = Sample::new(x);
    let mean = s.sum_x / s.n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s.n - 1.0);
    let (a0, b0) = if var > 0.0 {
        (mean * mean / var, mean / var)
    } else {
        (1.0, 1.0 / mean)
    };

    let objective = |w: &[f64]| match working_to_params(w, fix_delta_zero) {
        Ok(p) => -s.loglik(&p),
        Err(_) => f64::INFINITY,
    };
    let dim = if fix_delta_zero { 2 } else { 3 };
    let cfg = SimplexConfig {
        initial_step: Some(vec![0.2, 0.2, 0.5 / mean][..dim].to_vec()),
        f_tol: 1e-11,
        x_tol: 1e-9,
        max_iter: 5000,
        ..SimplexConfig::default()
    };

    let starts: Vec<[f64; 3]> = if fix_delta_zero {
        vec![[a0.ln(), b0.ln(), 0.0]]
    } else {
        profile_starts(&s, a0, b0, mean)?
    };
    let mut best: Option<crate::optimize::OptimResult<f64>> = None;
    let mut iterations = 0;
    for start in &starts {
        if !objective(&start[..dim]).is_finite() {
            continue;
        }
        let r = nelder_mead(objective, &start[..dim], &cfg)?;
        iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.f_opt < b.f_opt) {
            best = Some(r);
        }
    }
    let best = best.ok_or(EstimateError::NonFiniteStart)?;
    let params = working_to_params(&best.x_opt, fix_delta_zero)?;
    let ll = s.loglik(&params);

    let score = score_sample(&params, &s);
    let mut gradient = [params.alpha() * score[0], params.beta() * score[1], score[2]];
    if fix_delta_zero {
        gradient[2] = 0.0;
    }
    let grad_norm = gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let converged = best.converged && grad_norm < GRADIENT_TOLERANCE;
    if !converged {
        log::warn!("fit did not converge (simplex: {:?}, |grad| = {grad_norm:e})", best.termination);
    }

    let info = observed_information(&params, x)?;
    let free = if fix_delta_zero { 2 } else { 3 };
    let sub: Matrix<f64> = info[..free].iter().map(|row| row[..free].to_vec()).collect();
    let (vcov, se, se_working) = match invert_spd(&sub) {
        Ok(inv) => {
            let mut full = vec![vec![0.0; 3]; 3];
            for i in 0..free {
                for j in 0..free {
                    full[i][j] = inv[i][j];
                }
            }
            let se = [full[0][0].sqrt(), full[1][1].sqrt(), full[2][2].sqrt()];
            let se_w = [se[0] / params.alpha(), se[1] / params.beta(), se[2]];
            (Some(full), Some(se), Some(se_w))
        }
        Err(e) => {
            log::warn!("observed information is not positive definite ({e}); standard errors unavailable");
            (None, None, None)
        }
    };

    let k = free;
    let n = x.len();
    Ok(FitResult {
        params,
        se,
        se_working,
        loglik: ll,
        aic: -2.0 * ll + 2.0 * k as f64,
        bic: -2.0 * ll + k as f64 * (n as f64).ln(),
        n,
        k,
        delta_fixed: fix_delta_zero,
        converged,
        vcov,
        gradient_at_opt: gradient,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Chi-square survival function.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    inc_gamma_pair(df as f64 / 2.0, x / 2.0).1
}

/// Likelihood ratio test of a nested fit against a full fit.
pub fn lr_test(full: &FitResult, nested: &FitResult) -> LrTest {
    let mut statistic = 2.0 * (full.loglik - nested.loglik);
    if statistic < 0.0 {
        log::warn!("negative likelihood ratio statistic {statistic:e} clamped to 0");
        statistic = 0.0;
    }
    let df = full.k.saturating_sub(nested.k).max(1);
    LrTest {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    }
}
