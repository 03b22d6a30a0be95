use thiserror::Error;

use super::linalg::Matrix;
use crate::real::{lit, Real};

/// Default relative step for [`numeric_gradient`].
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5;
/// Default relative step for [`numeric_hessian`]. Second differences lose about
/// twice the digits of first differences, so the step is larger.
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("objective is not finite at coordinate {coordinate} offset {offset}")]
    NonFinite { coordinate: usize, offset: f64 },
}

fn step<T: Real>(x: T, h_rel: T) -> T {
    h_rel * x.abs().max(T::one())
}

fn checked<T: Real>(v: T, coordinate: usize, offset: T) -> Result<T, DiffError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DiffError::NonFinite {
            coordinate,
            offset: offset.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Central-difference gradient with per-coordinate step `h_rel · max(|xᵢ|, 1)`.
pub fn numeric_gradient<T: Real, F: FnMut(&[T]) -> T>(
    mut f: F,
    x: &[T],
    h_rel: T,
) -> Result<Vec<T>, DiffError> {
    let mut xp = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step(x[i], h_rel);
        xp[i] = x[i] + h;
        let fp = checked(f(&xp), i, h)?;
        xp[i] = x[i] - h;
        let fm = checked(f(&xp), i, -h)?;
        xp[i] = x[i];
        grad.push((fp - fm) / (h + h));
    }
    Ok(grad)
}

/// Central-difference Hessian, symmetrized as `(H + Hᵀ)/2`.
pub fn numeric_hessian<T: Real, F: FnMut(&[T]) -> T>(
    mut f: F,
    x: &[T],
    h_rel: T,
) -> Result<Matrix<T>, DiffError> {
    let n = x.len();
    let f0 = checked(f(x), 0, T::zero())?;
    let h: Vec<T> = x.iter().map(|&xi| step(xi, h_rel)).collect();
    let mut xp = x.to_vec();
    let mut hess = vec![vec![T::zero(); n]; n];
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = checked(f(&xp), i, h[i])?;
        xp[i] = x[i] - h[i];
        let fm = checked(f(&xp), i, -h[i])?;
        xp[i] = x[i];
        hess[i][i] = (fp - two * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..n {
            let mut corner = |si: T, sj: T| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                checked(v, i, si * h[i])
            };
            let one = T::one();
            let fpp = corner(one, one)?;
            let fpm = corner(one, -one)?;
            let fmp = corner(-one, one)?;
            let fmm = corner(-one, -one)?;
            let v = (fpp - fpm - fmp + fmm) / (four * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}
