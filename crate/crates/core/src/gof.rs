//! Goodness-of-fit statistics and plotting positions for QQ and worm plots.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::Params;
use crate::estimate::FitResult;
use crate::specfun::{std_normal_pdf, std_normal_quantile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GofError {
    #[error("need at least {min} observations, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("sample is not sorted ascending at index {index}")]
    Unsorted { index: usize },
    #[error("observation {index} is not finite")]
    NonFinite { index: usize },
}

fn check_sorted(x: &[f64], min: usize) -> Result<(), GofError> {
    if x.len() < min {
        return Err(GofError::TooFew { n: x.len(), min });
    }
    for (i, v) in x.iter().enumerate() {
        if v.is_nan() {
            return Err(GofError::NonFinite { index: i });
        }
        if i > 0 && *v < x[i - 1] {
            return Err(GofError::Unsorted { index: i });
        }
    }
    Ok(())
}

/// `P(K > λ)` for the Kolmogorov limit law of `√n D`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.0 {
        // The alternating series converges slowly here; use the theta-function form of the CDF.
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=100 {
            let j = (2 * k - 1) as f64;
            let term = (-j * j * c).exp();
            s += term;
            if term < 1e-300 {
                break;
            }
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov statistic with its asymptotic p-value.
///
/// No correction for estimated parameters is applied.
pub fn ks_statistic<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> Result<KsResult, GofError> {
    check_sorted(x, 1)?;
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        let i = i as f64;
        d = d.max((i + 1.0) / n - f).max(f - i / n);
    }
    Ok(KsResult {
        d,
        p_value: kolmogorov_sf(n.sqrt() * d),
    })
}

/// Cramér–von Mises `W* = 1/(12n) + Σ (F(x₍ᵢ₎) − (2i−1)/(2n))²`,
/// multiplied by `1 + 0.5/n` when `modified`.
pub fn cvm_statistic<F: Fn(f64) -> f64>(x: &[f64], cdf: F, modified: bool) -> Result<f64, GofError> {
    check_sorted(x, 1)?;
    let n = x.len() as f64;
    let mut w = 1.0 / (12.0 * n);
    for (i, &xi) in x.iter().enumerate() {
        let target = (2.0 * i as f64 + 1.0) / (2.0 * n);
        w += (cdf(xi) - target).powi(2);
    }
    Ok(if modified { w * (1.0 + 0.5 / n) } else { w })
}

fn normal_quantile(p: f64) -> f64 {
    std_normal_quantile(p).expect("plotting positions lie in (0, 1)")
}

fn plotting_position(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// `(theoretical, empirical)` quantile pairs at plotting positions `(i − 0.5)/n`.
/// Sorts a copy of the input.
pub fn qq_data<Q: Fn(f64) -> f64>(values: &[f64], reference_quantile: Q) -> Result<Vec<(f64, f64)>, GofError> {
    let mut v = values.to_vec();
    if let Some(i) = v.iter().position(|x| x.is_nan()) {
        return Err(GofError::NonFinite { index: i });
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    check_sorted(&v, 3)?;
    let n = v.len();
    Ok(v.iter()
        .enumerate()
        .map(|(i, &e)| (reference_quantile(plotting_position(i, n)), e))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WormPoint {
    pub theoretical: f64,
    pub deviation: f64,
    /// Half-width of the pointwise 95% band around zero.
    pub band: f64,
}

/// Detrended normal QQ data for residuals.
pub fn worm_data(residuals: &[f64]) -> Result<Vec<WormPoint>, GofError> {
    let qq = qq_data(residuals, normal_quantile)?;
    let n = qq.len();
    let z975 = normal_quantile(0.975);
    Ok(qq
        .into_iter()
        .enumerate()
        .map(|(i, (z, e))| {
            let p = plotting_position(i, n);
            WormPoint {
                theoretical: z,
                deviation: e - z,
                band: z975 * (p * (1.0 - p) / n as f64).sqrt() / std_normal_pdf(z),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub ks: f64,
    pub ks_p: f64,
    pub cvm: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
}

/// KS, W* and information criteria for a fitted distribution.
pub fn gof_report(fit: &FitResult, x: &[f64]) -> Result<GofReport, GofError> {
    let mut sorted = x.to_vec();
    if let Some(i) = sorted.iter().position(|v| v.is_nan()) {
        return Err(GofError::NonFinite { index: i });
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p: Params<f64> = fit.params;
    let ks = ks_statistic(&sorted, |t| p.cdf(t))?;
    let cvm = cvm_statistic(&sorted, |t| p.cdf(t), false)?;
    Ok(GofReport {
        ks: ks.d,
        ks_p: ks.p_value,
        cvm,
        aic: fit.aic,
        bic: fit.bic,
        n: x.len(),
    })
}
