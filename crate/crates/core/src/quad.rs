//! Adaptive Gauss–Kronrod quadrature.
//!
//! The closed-form paths of the library never touch this module. It backs the
//! entropies and the expected information, where no closed form exists.

use thiserror::Error;

use crate::real::{lit, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance after {intervals} subintervals (estimate {estimate}, error {error})")]
    NotConverged {
        estimate: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {at}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: lit(1e-11),
            rel_tol: lit(1e-12),
            max_intervals: 4000,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Result<Segment<T>, QuadError> {
    let half = lit::<T>(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let mut eval = |x: T| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite {
                at: x.to_f64().unwrap_or(f64::NAN),
            })
        }
    };
    let fc = eval(center)?;
    let mut kronrod_sum = lit::<T>(WGK[7]) * fc;
    let mut gauss_sum = lit::<T>(WG[3]) * fc;
    for j in 0..7 {
        let dx = radius * lit(XGK[j]);
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod_sum += lit::<T>(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss_sum += lit::<T>(WG[j / 2]) * pair;
        }
    }
    let value = kronrod_sum * radius;
    let error = ((kronrod_sum - gauss_sum) * radius).abs();
    Ok(Segment { a, b, value, error })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    cfg: &QuadConfig<T>,
) -> Result<Quadrature<T>, QuadError> {
    if a == b {
        return Ok(Quadrature {
            value: T::zero(),
            error: T::zero(),
            intervals: 0,
        });
    }
    let mut segments = vec![kronrod(&mut f, a, b)?];
    loop {
        let value = segments.iter().fold(T::zero(), |s, g| s + g.value);
        let error = segments.iter().fold(T::zero(), |s, g| s + g.error);
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tol {
            return Ok(Quadrature {
                value,
                error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= cfg.max_intervals {
            return Err(QuadError::NotConverged {
                estimate: value.to_f64().unwrap_or(f64::NAN),
                error: error.to_f64().unwrap_or(f64::NAN),
                intervals: segments.len(),
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = lit::<T>(0.5) * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Interval exhausted at machine resolution; keep it as is.
            segments.push(Segment {
                error: T::zero(),
                ..seg
            });
            continue;
        }
        segments.push(kronrod(&mut f, seg.a, mid)?);
        segments.push(kronrod(&mut f, mid, seg.b)?);
    }
}

/// Integrates `f` over `(0, ∞)`.
///
/// `lead` is the exponent `a` of the behaviour `f(x) ~ x^(a-1)` at the origin
/// and `scale` a characteristic length of the integrand (the mean, say). The
/// piece `(0, scale)` is mapped through `x = scale·s^k` to remove the
/// algebraic singularity and `(scale, ∞)` through `x = scale + t/(1-t)`.
pub fn integrate_half_line<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    lead: T,
    scale: T,
    cfg: &QuadConfig<T>,
) -> Result<Quadrature<T>, QuadError> {
    let two = lit::<T>(2.0);
    let k = if lead > T::zero() && lead < two {
        (two / lead).ceil()
    } else {
        T::one()
    };
    let c = scale;
    let head = integrate(
        |s: T| {
            if s <= T::zero() {
                return T::zero();
            }
            let x = c * s.powf(k);
            let jac = c * k * s.powf(k - T::one());
            if x <= T::zero() || jac == T::zero() {
                return T::zero();
            }
            f(x) * jac
        },
        T::zero(),
        T::one(),
        cfg,
    );
    let head = head?;
    let tail = integrate(
        |t: T| {
            let om = T::one() - t;
            if om <= T::zero() {
                return T::zero();
            }
            let x = c + t / om;
            let v = f(x) / (om * om);
            if v.is_finite() {
                v
            } else if x.is_infinite() {
                T::zero()
            } else {
                v
            }
        },
        T::zero(),
        T::one(),
        cfg,
    );
    let tail = tail?;
    Ok(Quadrature {
        value: head.value + tail.value,
        error: head.error + tail.error,
        intervals: head.intervals + tail.intervals,
    })
}
