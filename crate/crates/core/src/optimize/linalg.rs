use thiserror::Error;

use crate::real::Real;

/// Dense row-major square matrix.
pub type Matrix<T> = Vec<Vec<T>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

fn check_square<T>(a: &[Vec<T>]) -> Result<usize, LinalgError> {
    let n = a.len();
    for row in a {
        if row.len() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                found: row.len(),
            });
        }
    }
    Ok(n)
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`. Only the lower triangle of `a` is read.
pub fn cholesky<T: Real>(a: &[Vec<T>]) -> Result<Matrix<T>, LinalgError> {
    let n = check_square(a)?;
    let mut l = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite {
                pivot: j,
                value: d.to_f64().unwrap_or(f64::NAN),
            });
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

fn cholesky_solve<T: Real>(l: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = l.len();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[i][k] * y[k];
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] = y[i] - l[k][i] * y[k];
        }
        y[i] /= l[i][i];
    }
    y
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<Vec<T>, LinalgError> {
    let l = cholesky(a)?;
    if b.len() != l.len() {
        return Err(LinalgError::Dimension {
            expected: l.len(),
            found: b.len(),
        });
    }
    Ok(cholesky_solve(&l, b))
}

/// Inverse of a symmetric positive definite matrix, symmetrized on output.
pub fn invert_spd<T: Real>(a: &[Vec<T>]) -> Result<Matrix<T>, LinalgError> {
    let l = cholesky(a)?;
    let n = l.len();
    let mut inv = vec![vec![T::zero(); n]; n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    let half = T::from_f64(0.5).unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = half * (inv[i][j] + inv[j][i]);
            inv[i][j] = s;
            inv[j][i] = s;
        }
    }
    Ok(inv)
}
