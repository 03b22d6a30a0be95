//! Regression for right-censored lifetimes with log links on α and β.
//!
//! Row `i` has `αᵢ = exp(vᵢᵀτ₁)`, `βᵢ = exp(vᵢᵀτ₂)` and a common δ. Events
//! contribute `ln f(xᵢ)` and censored rows `ln R(xᵢ)`.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, Params};
use crate::estimate::{fit_mle, PROFILE_GRID, PROFILE_KEEP};
use crate::optimize::{
    invert_spd, nelder_mead, numeric_gradient, numeric_hessian, Matrix, OptimResult, SimplexConfig, SimplexError,
    DEFAULT_GRADIENT_STEP, DEFAULT_HESSIAN_STEP,
};
use crate::specfun::{std_normal_cdf, std_normal_quantile};

/// Gradient norm (∞, standardized coordinates) above which a fit is flagged.
pub const GRADIENT_TOLERANCE: f64 = 1e-2;
const RESIDUAL_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressError {
    #[error("{0}")]
    Shape(String),
    #[error("row {row}: time {value} must be positive and finite")]
    InvalidTime { row: usize, value: f64 },
    #[error("row {row}, column {col}: covariate is not finite")]
    NonFiniteCovariate { row: usize, col: usize },
    #[error("row {row}: first covariate column must be the constant 1")]
    InterceptMissing { row: usize },
    #[error("no event rows; at least one uncensored observation is needed")]
    NoEvents,
    #[error("covariate matrix is rank deficient (column {column} is a combination of earlier columns)")]
    RankDeficient { column: usize },
    #[error("formula references column {index}, but there are only {p} covariate columns")]
    Column { index: usize, p: usize },
    #[error("{0} formula is empty")]
    EmptyFormula(&'static str),
    #[error("{0} formula lists column {1} twice")]
    DuplicateColumn(&'static str, usize),
    #[error("row {row}: {source}")]
    InvalidRow { row: usize, source: DistError },
    #[error("row {row}: log-likelihood contribution is not finite")]
    NonFiniteContribution { row: usize },
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Right-censored lifetimes with covariates; the first covariate column is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    time: Vec<f64>,
    event: Vec<bool>,
    covariates: Matrix<f64>,
    names: Vec<String>,
}

fn check_rank(cov: &Matrix<f64>) -> Result<(), RegressError> {
    let n = cov.len();
    let p = cov[0].len();
    // Modified Gram-Schmidt on the columns.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let mut c: Vec<f64> = (0..n).map(|i| cov[i][j]).collect();
        let norm0 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        for q in &basis {
            let d: f64 = c.iter().zip(q).map(|(a, b)| a * b).sum();
            for (ci, qi) in c.iter_mut().zip(q) {
                *ci -= d * qi;
            }
        }
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm0 > 0.0) || norm <= 1e-9 * norm0 {
            return Err(RegressError::RankDeficient { column: j });
        }
        basis.push(c.into_iter().map(|v| v / norm).collect());
    }
    Ok(())
}

impl CensoredSample {
    pub fn new(
        time: Vec<f64>,
        event: Vec<bool>,
        covariates: Matrix<f64>,
        names: Option<Vec<String>>,
    ) -> Result<Self, RegressError> {
        let n = time.len();
        if n == 0 {
            return Err(RegressError::Shape("sample is empty".into()));
        }
        if event.len() != n || covariates.len() != n {
            return Err(RegressError::Shape(format!(
                "{} times, {} status values and {} covariate rows",
                n,
                event.len(),
                covariates.len()
            )));
        }
        let p = covariates[0].len();
        if p == 0 {
            return Err(RegressError::Shape("covariate matrix has no columns".into()));
        }
        for (row, (&t, v)) in time.iter().zip(&covariates).enumerate() {
            if !(t > 0.0) || !t.is_finite() {
                return Err(RegressError::InvalidTime { row, value: t });
            }
            if v.len() != p {
                return Err(RegressError::Shape(format!("row {row} has {} covariates, expected {p}", v.len())));
            }
            if let Some(col) = v.iter().position(|c| !c.is_finite()) {
                return Err(RegressError::NonFiniteCovariate { row, col });
            }
            if v[0] != 1.0 {
                return Err(RegressError::InterceptMissing { row });
            }
        }
        if !event.iter().any(|&e| e) {
            return Err(RegressError::NoEvents);
        }
        check_rank(&covariates)?;
        let names = match names {
            Some(nm) if nm.len() == p => nm,
            Some(nm) => {
                return Err(RegressError::Shape(format!("{} names for {p} covariate columns", nm.len())));
            }
            None => (0..p)
                .map(|j| if j == 0 { "intercept".to_string() } else { format!("v{j}") })
                .collect(),
        };
        Ok(Self {
            time,
            event,
            covariates,
            names,
        })
    }

    /// Sample with only the intercept column.
    pub fn intercept_only(time: Vec<f64>, event: Vec<bool>) -> Result<Self, RegressError> {
        let cov = vec![vec![1.0]; time.len()];
        Self::new(time, event, cov, None)
    }

    pub fn n(&self) -> usize {
        self.time.len()
    }

    pub fn p(&self) -> usize {
        self.covariates[0].len()
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn covariates(&self) -> &Matrix<f64> {
        &self.covariates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn censored_fraction(&self) -> f64 {
        self.event.iter().filter(|&&e| !e).count() as f64 / self.n() as f64
    }
}

/// Which covariate columns enter each linear predictor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub alpha_cols: Vec<usize>,
    pub beta_cols: Vec<usize>,
    pub include_delta: bool,
}

impl RegressionSpec {
    pub fn intercept_only(include_delta: bool) -> Self {
        Self {
            alpha_cols: vec![0],
            beta_cols: vec![0],
            include_delta,
        }
    }

    pub fn validate(&self, p: usize) -> Result<(), RegressError> {
        for (name, cols) in [("alpha", &self.alpha_cols), ("beta", &self.beta_cols)] {
            if cols.is_empty() {
                return Err(RegressError::EmptyFormula(name));
            }
            for (k, &c) in cols.iter().enumerate() {
                if c >= p {
                    return Err(RegressError::Column { index: c, p });
                }
                if cols[..k].contains(&c) {
                    return Err(RegressError::DuplicateColumn(name, c));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Bimodal gamma with free δ.
    BGamma,
    /// Bimodal gamma with δ = 0.
    Gamma,
    /// Weibull with survival `exp(−(λx)^k)`, `k = exp(vᵀτ₁)`, `λ = exp(vᵀτ₂)`.
    Weibull,
}

impl Family {
    fn has_delta(self) -> bool {
        self == Family::BGamma
    }
}

/// Regression coefficients on the original covariate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
    pub delta: f64,
}

fn linear(row: &[f64], cols: &[usize], tau: &[f64]) -> f64 {
    cols.iter().zip(tau).map(|(&c, t)| row[c] * t).sum()
}

enum RowLaw {
    BGamma(Params<f64>),
    Weibull { shape: f64, rate: f64 },
}

impl RowLaw {
    fn new(family: Family, coef: &Coefficients, spec: &RegressionSpec, row: &[f64]) -> Result<Self, DistError> {
        let a = linear(row, &spec.alpha_cols, &coef.tau1).exp();
        let b = linear(row, &spec.beta_cols, &coef.tau2).exp();
        match family {
            Family::BGamma => Params::new(a, b, coef.delta).map(RowLaw::BGamma),
            Family::Gamma => Params::gamma(a, b).map(RowLaw::BGamma),
            Family::Weibull => {
                if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
                    return Err(DistError::InvalidParams {
                        alpha: a,
                        beta: b,
                        delta: 0.0,
                        reason: "Weibull shape and rate must be positive and finite".into(),
                    });
                }
                Ok(RowLaw::Weibull { shape: a, rate: b })
            }
        }
    }

    fn log_pdf(&self, x: f64) -> f64 {
        match *self {
            RowLaw::BGamma(p) => p.log_pdf(x),
            RowLaw::Weibull { shape, rate } => {
                let lx = rate * x;
                shape.ln() + rate.ln() + (shape - 1.0) * lx.ln() - lx.powf(shape)
            }
        }
    }

    fn log_survival(&self, x: f64) -> f64 {
        match *self {
            RowLaw::BGamma(p) => p.survival(x).ln(),
            RowLaw::Weibull { shape, rate } => -(rate * x).powf(shape),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            RowLaw::BGamma(p) => p.cdf(x),
            RowLaw::Weibull { shape, rate } => -(-(rate * x).powf(shape)).exp_m1(),
        }
    }
}

/// Survival `R(x | v)` of the bimodal gamma regression model.
pub fn reg_survival(coef: &Coefficients, spec: &RegressionSpec, v: &[f64], x: f64) -> Result<f64, RegressError> {
    let law = RowLaw::new(Family::BGamma, coef, spec, v).map_err(|source| RegressError::InvalidRow { row: 0, source })?;
    let RowLaw::BGamma(p) = law else { unreachable!() };
    Ok(p.survival(x))
}

fn family_loglik(
    family: Family,
    coef: &Coefficients,
    data: &CensoredSample,
    spec: &RegressionSpec,
) -> Result<f64, RegressError> {
    let mut total = 0.0;
    for row in 0..data.n() {
        let law = RowLaw::new(family, coef, spec, &data.covariates[row])
            .map_err(|source| RegressError::InvalidRow { row, source })?;
        let x = data.time[row];
        let term = if data.event[row] {
            law.log_pdf(x)
        } else {
            law.log_survival(x)
        };
        if !term.is_finite() {
            return Err(RegressError::NonFiniteContribution { row });
        }
        total += term;
    }
    Ok(total)
}

fn check_coefficients(coef: &Coefficients, spec: &RegressionSpec) -> Result<(), RegressError> {
    if coef.tau1.len() != spec.alpha_cols.len() || coef.tau2.len() != spec.beta_cols.len() {
        return Err(RegressError::Shape(format!(
            "coefficient lengths ({}, {}) do not match the formulas ({}, {})",
            coef.tau1.len(),
            coef.tau2.len(),
            spec.alpha_cols.len(),
            spec.beta_cols.len()
        )));
    }
    Ok(())
}

/// Censored log-likelihood of the bimodal gamma regression model.
///
/// δ is taken from `coef` even when `spec.include_delta` is false.
pub fn reg_loglik(coef: &Coefficients, data: &CensoredSample, spec: &RegressionSpec) -> Result<f64, RegressError> {
    spec.validate(data.p())?;
    check_coefficients(coef, spec)?;
    family_loglik(Family::BGamma, coef, data, spec)
}

/// Affine map between standardized-covariate coefficients `η` and original ones `τ = A η`.
struct Standardizer {
    // Per formula entry: (mean, sd); the intercept keeps (0, 1).
    scale: Vec<(f64, f64)>,
    intercept: Option<usize>,
}

impl Standardizer {
    fn new(data: &CensoredSample, cols: &[usize]) -> Self {
        let n = data.n() as f64;
        let intercept = cols.iter().position(|&c| c == 0);
        let scale = cols
            .iter()
            .map(|&c| {
                if c == 0 {
                    return (0.0, 1.0);
                }
                let m = data.covariates.iter().map(|r| r[c]).sum::<f64>() / n;
                let sd = (data.covariates.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n).sqrt();
                let m = if intercept.is_some() { m } else { 0.0 };
                (m, if sd > 0.0 { sd } else { 1.0 })
            })
            .collect();
        Self { scale, intercept }
    }

    fn matrix(&self) -> Matrix<f64> {
        let k = self.scale.len();
        let mut a = vec![vec![0.0; k]; k];
        for (j, &(m, s)) in self.scale.iter().enumerate() {
            if Some(j) == self.intercept {
                a[j][j] = 1.0;
                continue;
            }
            a[j][j] = 1.0 / s;
            if let Some(i0) = self.intercept {
                a[i0][j] = -m / s;
            }
        }
        a
    }

    fn to_tau(&self, eta: &[f64]) -> Vec<f64> {
        let a = self.matrix();
        a.iter().map(|row| row.iter().zip(eta).map(|(x, y)| x * y).sum()).collect()
    }

    fn to_eta(&self, tau: &[f64]) -> Vec<f64> {
        let mut eta: Vec<f64> = tau.iter().zip(&self.scale).map(|(t, &(_, s))| t * s).collect();
        if let Some(i0) = self.intercept {
            eta[i0] = tau[i0] + tau.iter().zip(&self.scale).map(|(t, &(m, _))| t * m).sum::<f64>();
        }
        eta
    }
}

struct Layout<'a> {
    family: Family,
    spec: &'a RegressionSpec,
    a1: Standardizer,
    a2: Standardizer,
}

impl<'a> Layout<'a> {
    fn dim(&self) -> usize {
        self.spec.alpha_cols.len() + self.spec.beta_cols.len() + usize::from(self.family.has_delta())
    }

    fn coefficients(&self, w: &[f64]) -> Coefficients {
        let k1 = self.spec.alpha_cols.len();
        let k2 = self.spec.beta_cols.len();
        Coefficients {
            tau1: self.a1.to_tau(&w[..k1]),
            tau2: self.a2.to_tau(&w[k1..k1 + k2]),
            delta: if self.family.has_delta() { w[k1 + k2] } else { 0.0 },
        }
    }

    fn working(&self, c: &Coefficients) -> Vec<f64> {
        let mut w = self.a1.to_eta(&c.tau1);
        w.extend(self.a2.to_eta(&c.tau2));
        if self.family.has_delta() {
            w.push(c.delta);
        }
        w
    }

    /// `dτ/dη` for the whole parameter vector.
    fn jacobian(&self) -> Matrix<f64> {
        let d = self.dim();
        let mut j = vec![vec![0.0; d]; d];
        let k1 = self.spec.alpha_cols.len();
        for (block, off) in [(self.a1.matrix(), 0), (self.a2.matrix(), k1)] {
            for (r, row) in block.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    j[off + r][off + c] = *v;
                }
            }
        }
        if self.family.has_delta() {
            j[d - 1][d - 1] = 1.0;
        }
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coef {
    pub estimate: f64,
    pub se: Option<f64>,
    /// Two-sided Wald p-value.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegFitResult {
    pub family: Family,
    pub spec: RegressionSpec,
    pub tau1: Vec<Coef>,
    pub tau2: Vec<Coef>,
    /// Present for the bimodal gamma family only.
    pub delta: Option<Coef>,
    pub loglik: f64,
    /// Global deviance `−2ℓ`.
    pub gd: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    pub k: usize,
    /// Covariance of `(τ₁, τ₂, δ)` from the inverse numeric observed information.
    pub vcov: Option<Matrix<f64>>,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
}

impl RegFitResult {
    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            tau1: self.tau1.iter().map(|c| c.estimate).collect(),
            tau2: self.tau2.iter().map(|c| c.estimate).collect(),
            delta: self.delta.map_or(0.0, |c| c.estimate),
        }
    }
}

fn simplex_config(dim: usize, delta_step: f64) -> SimplexConfig<f64> {
    let mut steps = vec![0.2; dim];
    if let Some(last) = steps.last_mut() {
        *last = delta_step;
    }
    SimplexConfig {
        initial_step: Some(steps),
        f_tol: 1e-10,
        x_tol: 1e-8,
        max_iter: 20_000,
        ..SimplexConfig::default()
    }
}

fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    cfg: &SimplexConfig<f64>,
) -> Result<OptimResult<f64>, RegressError> {
    let mut r = nelder_mead(&mut f, start, cfg)?;
    if !r.converged {
        // One more pass from the best vertex with a fresh simplex.
        let again = nelder_mead(&mut f, &r.x_opt.clone(), cfg)?;
        let iters = r.iterations + again.iterations;
        if again.f_opt <= r.f_opt {
            r = again;
        }
        r.iterations = iters;
    }
    Ok(r)
}

fn fit_family(
    family: Family,
    data: &CensoredSample,
    spec: &RegressionSpec,
    start: Option<&Coefficients>,
) -> Result<RegFitResult, RegressError> {
    let layout = Layout {
        family,
        spec,
        a1: Standardizer::new(data, &spec.alpha_cols),
        a2: Standardizer::new(data, &spec.beta_cols),
    };
    let objective = |w: &[f64]| match family_loglik(family, &layout.coefficients(w), data, spec) {
        Ok(l) => -l,
        Err(_) => f64::INFINITY,
    };
    let mean_time = data.time.iter().sum::<f64>() / data.n() as f64;

    let mut iterations = 0;
    let best = match (family, start) {
        (Family::BGamma, Some(s)) => {
            // Profile the τ coefficients over a δ grid, then release δ from the best points.
            let k = layout.dim() - 1;
            let profile_cfg = SimplexConfig {
                initial_step: Some(vec![0.2; k]),
                f_tol: 1e-6,
                x_tol: 1e-5,
                max_iter: 200 * k,
                restart: false,
                ..SimplexConfig::default()
            };
            let start = layout.working(s);
            let eta0 = &start[..k];
            let mut profiled: Vec<(f64, Vec<f64>)> = Vec::new();
            for &kx in &PROFILE_GRID {
                let d = kx / mean_time;
                let fixed = |eta: &[f64]| {
                    let mut w = eta.to_vec();
                    w.push(d);
                    objective(&w)
                };
                if !fixed(eta0).is_finite() {
                    continue;
                }
                let r = nelder_mead(fixed, eta0, &profile_cfg)?;
                iterations += r.iterations;
                let mut w = r.x_opt;
                w.push(d);
                profiled.push((r.f_opt, w));
            }
            profiled.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best: Option<OptimResult<f64>> = None;
            for (_, w0) in profiled.into_iter().take(PROFILE_KEEP) {
                let r = minimize(objective, &w0, &simplex_config(w0.len(), 0.5 / mean_time))?;
                iterations += r.iterations;
                if best.as_ref().is_none_or(|b| r.f_opt < b.f_opt) {
                    best = Some(r);
                }
            }
            best.ok_or(SimplexError::NonFiniteStart)?
        }
        _ => {
            let c = match start {
                Some(s) => s.clone(),
                None => default_start(family, data, spec),
            };
            let w0 = layout.working(&c);
            let r = minimize(objective, &w0, &simplex_config(w0.len(), 0.2))?;
            iterations += r.iterations;
            r
        }
    };

    let w = best.x_opt.clone();
    let coef = layout.coefficients(&w);
    let loglik = family_loglik(family, &coef, data, spec)?;
    let gradient_norm = numeric_gradient(objective, &w, DEFAULT_GRADIENT_STEP)
        .map(|g| g.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .unwrap_or(f64::INFINITY);
    let converged = best.converged && gradient_norm < GRADIENT_TOLERANCE;
    if !converged {
        log::warn!("{family:?} regression did not converge (|grad| = {gradient_norm:e})");
    }

    let vcov = numeric_hessian(objective, &w, DEFAULT_HESSIAN_STEP)
        .ok()
        .and_then(|h| match invert_spd(&h) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("observed information is not positive definite ({e}); standard errors unavailable");
                None
            }
        })
        .map(|v_eta| {
            let j = layout.jacobian();
            let d = j.len();
            let mut out = vec![vec![0.0; d]; d];
            for r in 0..d {
                for c in 0..d {
                    let mut s = 0.0;
                    for a in 0..d {
                        for b in 0..d {
                            s += j[r][a] * v_eta[a][b] * j[c][b];
                        }
                    }
                    out[r][c] = s;
                }
            }
            out
        });

    let coef_entry = |idx: usize, estimate: f64| {
        let se = vcov
            .as_ref()
            .map(|v| v[idx][idx])
            .filter(|v| *v >= 0.0)
            .map(f64::sqrt);
        Coef {
            estimate,
            se,
            p_value: se.map(|s| 2.0 * std_normal_cdf(-(estimate / s).abs())),
        }
    };
    let k1 = spec.alpha_cols.len();
    let k2 = spec.beta_cols.len();
    let k = layout.dim();
    let n = data.n();
    let gd = -2.0 * loglik;
    Ok(RegFitResult {
        family,
        spec: spec.clone(),
        tau1: coef.tau1.iter().enumerate().map(|(i, &t)| coef_entry(i, t)).collect(),
        tau2: coef.tau2.iter().enumerate().map(|(i, &t)| coef_entry(k1 + i, t)).collect(),
        delta: family.has_delta().then(|| coef_entry(k1 + k2, coef.delta)),
        loglik,
        gd,
        aic: gd + 2.0 * k as f64,
        bic: gd + k as f64 * (n as f64).ln(),
        n,
        k,
        vcov,
        converged,
        gradient_norm,
        iterations,
    })
}

/// Intercepts from an iid fit of all times, other coefficients zero.
fn default_start(family: Family, data: &CensoredSample, spec: &RegressionSpec) -> Coefficients {
    let mean = data.time.iter().sum::<f64>() / data.n() as f64;
    let (a0, b0) = match family {
        Family::Weibull => (0.0, -mean.ln()),
        _ => match fit_mle(&data.time, true) {
            Ok(f) => (f.params.alpha().ln(), f.params.beta().ln()),
            Err(_) => (0.0, -mean.ln()),
        },
    };
    let fill = |cols: &[usize], v: f64| cols.iter().map(|&c| if c == 0 { v } else { 0.0 }).collect();
    Coefficients {
        tau1: fill(&spec.alpha_cols, a0),
        tau2: fill(&spec.beta_cols, b0),
        delta: 0.0,
    }
}

/// Fits the regression model named by `spec`: first with δ frozen at 0, then,
/// if `spec.include_delta`, with δ released from the nested optimum.
pub fn fit_regression(data: &CensoredSample, spec: &RegressionSpec) -> Result<RegFitResult, RegressError> {
    spec.validate(data.p())?;
    let nested = fit_family(Family::Gamma, data, spec, None)?;
    if !spec.include_delta {
        return Ok(nested);
    }
    let start = nested.coefficients();
    fit_family(Family::BGamma, data, spec, Some(&start))
}

/// Weibull regression with log links on shape (α formula) and rate (β formula).
pub fn fit_weibull_regression(data: &CensoredSample, spec: &RegressionSpec) -> Result<RegFitResult, RegressError> {
    spec.validate(data.p())?;
    fit_family(Family::Weibull, data, spec, None)
}

/// Normalized randomized quantile residuals.
///
/// Event rows give `Φ⁻¹(F(xᵢ))`; censored rows give `Φ⁻¹(uᵢ)` with `uᵢ`
/// uniform on `[F(xᵢ), 1]`. `F` is clamped to `[1e-12, 1 − 1e-12]`.
pub fn quantile_residuals<R: Rng + ?Sized>(
    fit: &RegFitResult,
    data: &CensoredSample,
    rng: &mut R,
) -> Result<Vec<f64>, RegressError> {
    fit.spec.validate(data.p())?;
    let coef = fit.coefficients();
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    (0..data.n())
        .map(|row| {
            let law = RowLaw::new(fit.family, &coef, &fit.spec, &data.covariates[row])
                .map_err(|source| RegressError::InvalidRow { row, source })?;
            let f = law.cdf(data.time[row]);
            let u = if data.event[row] {
                f
            } else {
                f + (1.0 - f) * unit.sample(rng)
            };
            let u = u.clamp(RESIDUAL_CLAMP, 1.0 - RESIDUAL_CLAMP);
            Ok(std_normal_quantile(u).expect("clamped into (0, 1)"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: Family,
    pub gd: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Fits the bimodal gamma, gamma and Weibull regressions and tabulates GD, AIC and BIC.
/// A model that fails to fit keeps its row with the error message.
pub fn model_comparison(data: &CensoredSample, spec: &RegressionSpec) -> Result<Vec<ComparisonRow>, RegressError> {
    spec.validate(data.p())?;
    let nested = fit_family(Family::Gamma, data, spec, None);
    let full = match &nested {
        Ok(n) => fit_family(Family::BGamma, data, spec, Some(&n.coefficients())),
        Err(e) => Err(e.clone()),
    };
    let weibull = fit_family(Family::Weibull, data, spec, None);
    Ok([(Family::BGamma, full), (Family::Gamma, nested), (Family::Weibull, weibull)]
        .into_iter()
        .map(|(model, r)| match r {
            Ok(f) => ComparisonRow {
                model,
                gd: Some(f.gd),
                aic: Some(f.aic),
                bic: Some(f.bic),
                converged: f.converged,
                error: None,
            },
            Err(e) => {
                log::warn!("{model:?} regression failed: {e}");
                ComparisonRow {
                    model,
                    gd: None,
                    aic: None,
                    bic: None,
                    converged: false,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect())
}

/// Draws lifetimes `Tᵢ` and censoring times `Cᵢ` independently from the row's
/// bimodal gamma law and records `min(Tᵢ, Cᵢ)`, which censors half the rows on average.
pub fn simulate_censored<R: Rng + ?Sized>(
    coef: &Coefficients,
    spec: &RegressionSpec,
    covariates: Matrix<f64>,
    rng: &mut R,
) -> Result<CensoredSample, RegressError> {
    spec.validate(covariates.first().map_or(0, Vec::len))?;
    check_coefficients(coef, spec)?;
    let mut time = Vec::with_capacity(covariates.len());
    let mut event = Vec::with_capacity(covariates.len());
    for (row, v) in covariates.iter().enumerate() {
        let RowLaw::BGamma(p) = RowLaw::new(Family::BGamma, coef, spec, v)
            .map_err(|source| RegressError::InvalidRow { row, source })?
        else {
            unreachable!()
        };
        let draws = p.sample(rng, 2).map_err(|source| RegressError::InvalidRow { row, source })?;
        time.push(draws[0].min(draws[1]));
        event.push(draws[0] <= draws[1]);
    }
    CensoredSample::new(time, event, covariates, None)
}
