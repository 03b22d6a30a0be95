//! The bimodal gamma distribution: density, distribution functions, moments,
//! shape analysis, maximum likelihood, censored regression, goodness of fit
//! and a Monte Carlo harness for the estimator.
//!
//! `specfun`, `quad`, `optimize` and `dist` are generic over [`Real`]
//! (`f32` or `f64`); the fitting and reporting modules work in `f64`.

pub mod dist;
pub mod estimate;
pub mod gof;
pub mod io;
pub mod optimize;
pub mod quad;
mod real;
pub mod regress;
pub mod sim;
pub mod specfun;

pub use real::Real;

pub use dist::{DistError, ModeKind, ModeReport, MomentSummary};
pub use estimate::{fit_mle, lr_test, FitResult, LrTest};
pub use gof::GofReport;
pub use regress::{fit_regression, CensoredSample, RegFitResult, RegressionSpec};
pub use sim::{run_grid, SimGrid, SimReport};

/// Double-precision bimodal gamma parameters.
pub type BGamma = dist::Params<f64>;
/// Single-precision bimodal gamma parameters.
pub type BGammaF32 = dist::Params<f32>;
pub type ModeReportF64 = dist::ModeReport<f64>;
pub type MomentSummaryF64 = dist::MomentSummary<f64>;
