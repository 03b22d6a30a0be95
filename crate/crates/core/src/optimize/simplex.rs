use thiserror::Error;

use super::diff::{numeric_gradient, DEFAULT_GRADIENT_STEP};
use crate::real::{from_usize, lit, Real};

const RESTART_GRADIENT_NORM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("invalid simplex configuration: {0}")]
    Config(&'static str),
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("starting point is empty")]
    EmptyStart,
}

#[derive(Debug, Clone)]
pub struct SimplexConfig<T> {
    pub reflection: T,
    pub expansion: T,
    pub contraction: T,
    pub shrink: T,
    pub max_iter: usize,
    /// Absolute spread `f_worst - f_best` below which the search stops.
    pub f_tol: T,
    /// Largest vertex distance (∞-norm) from the best vertex below which the search stops.
    pub x_tol: T,
    /// Per-coordinate initial edge lengths. `None` uses 5% of `|x0ᵢ|` (0.00025 for zeros).
    pub initial_step: Option<Vec<T>>,
    /// Restart once from the optimum when converged on `f_tol` with a gradient norm above 1e-3.
    pub restart: bool,
    /// Keep the best value after every iteration in [`OptimResult::best_history`].
    pub record_history: bool,
}

impl<T: Real> Default for SimplexConfig<T> {
    fn default() -> Self {
        Self {
            reflection: T::one(),
            expansion: lit(2.0),
            contraction: lit(0.5),
            shrink: lit(0.5),
            max_iter: 10_000,
            f_tol: lit(1e-13),
            x_tol: lit(1e-9),
            initial_step: None,
            restart: true,
            record_history: false,
        }
    }
}

impl<T: Real> SimplexConfig<T> {
    fn validate(&self, dim: usize) -> Result<(), SimplexError> {
        if !(self.reflection > T::zero()) {
            return Err(SimplexError::Config("reflection must be positive"));
        }
        if !(self.expansion > T::one()) {
            return Err(SimplexError::Config("expansion must exceed 1"));
        }
        if !(self.contraction > T::zero() && self.contraction < T::one()) {
            return Err(SimplexError::Config("contraction must lie in (0, 1)"));
        }
        if !(self.shrink > T::zero() && self.shrink < T::one()) {
            return Err(SimplexError::Config("shrink must lie in (0, 1)"));
        }
        if let Some(steps) = &self.initial_step {
            if steps.len() != dim {
                return Err(SimplexError::Config("initial_step length differs from x0"));
            }
            if steps.iter().any(|s| *s == T::zero() || !s.is_finite()) {
                return Err(SimplexError::Config("initial steps must be finite and nonzero"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    FunctionTolerance,
    ParameterTolerance,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct OptimResult<T> {
    pub x_opt: Vec<T>,
    pub f_opt: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub restarted: bool,
    pub best_history: Vec<T>,
}

struct Simplex<T> {
    vertices: Vec<Vec<T>>,
    values: Vec<T>,
}

impl<T: Real> Simplex<T> {
    fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].partial_cmp(&self.values[b]).unwrap());
        self.vertices = order.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = order.iter().map(|&i| self.values[i]).collect();
    }

    fn diameter(&self) -> T {
        let best = &self.vertices[0];
        self.vertices[1..]
            .iter()
            .flat_map(|v| v.iter().zip(best).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max)
    }

    fn spread(&self) -> T {
        *self.values.last().unwrap() - self.values[0]
    }
}

/// Minimizes `f` with the Nelder–Mead simplex method.
///
/// A NaN objective value is treated as `+∞`, so callers can return NaN or
/// infinity outside the feasible region and the simplex will move away.
pub fn nelder_mead<T: Real, F: FnMut(&[T]) -> T>(
    mut f: F,
    x0: &[T],
    cfg: &SimplexConfig<T>,
) -> Result<OptimResult<T>, SimplexError> {
    let dim = x0.len();
    if dim == 0 {
        return Err(SimplexError::EmptyStart);
    }
    cfg.validate(dim)?;
    let mut evaluations = 0usize;
    let mut objective = |x: &[T]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    if !objective(x0).is_finite() {
        return Err(SimplexError::NonFiniteStart);
    }

    let mut start = x0.to_vec();
    let mut iterations = 0usize;
    let mut restarted = false;
    let mut history = Vec::new();
    loop {
        let (simplex, termination) = run(&mut objective, &start, cfg, &mut iterations, &mut history);
        let best = simplex.vertices[0].clone();
        let f_best = simplex.values[0];
        if cfg.restart && !restarted && termination == Termination::FunctionTolerance {
            let grad = numeric_gradient(&mut objective, &best, lit(DEFAULT_GRADIENT_STEP));
            let needs_restart = match grad {
                Ok(g) => g.iter().map(|v| *v * *v).fold(T::zero(), |a, b| a + b).sqrt() > lit(RESTART_GRADIENT_NORM),
                Err(_) => false,
            };
            if needs_restart {
                log::debug!("simplex collapsed with a large gradient; restarting once");
                restarted = true;
                start = best;
                continue;
            }
        }
        return Ok(OptimResult {
            x_opt: best,
            f_opt: f_best,
            iterations,
            evaluations,
            converged: termination != Termination::MaxIterations,
            termination,
            restarted,
            best_history: history,
        });
    }
}

fn initial_simplex<T: Real, F: FnMut(&[T]) -> T>(
    objective: &mut F,
    x0: &[T],
    cfg: &SimplexConfig<T>,
) -> Simplex<T> {
    let dim = x0.len();
    let mut vertices = vec![x0.to_vec()];
    for i in 0..dim {
        let mut v = x0.to_vec();
        let step = match &cfg.initial_step {
            Some(steps) => steps[i],
            None if x0[i] != T::zero() => lit::<T>(0.05) * x0[i].abs(),
            None => lit(0.00025),
        };
        v[i] += step;
        vertices.push(v);
    }
    let values = vertices.iter().map(|v| objective(v)).collect();
    Simplex { vertices, values }
}

fn run<T: Real, F: FnMut(&[T]) -> T>(
    objective: &mut F,
    x0: &[T],
    cfg: &SimplexConfig<T>,
    iterations: &mut usize,
    history: &mut Vec<T>,
) -> (Simplex<T>, Termination) {
    let dim = x0.len();
    let mut s = initial_simplex(objective, x0, cfg);
    s.sort();
    let n = from_usize::<T>(dim);
    let point = |c: &[T], w: &[T], t: T| -> Vec<T> {
        c.iter().zip(w).map(|(ci, wi)| *ci + t * (*wi - *ci)).collect()
    };
    loop {
        if s.spread() <= cfg.f_tol {
            return (s, Termination::FunctionTolerance);
        }
        if s.diameter() <= cfg.x_tol {
            return (s, Termination::ParameterTolerance);
        }
        if *iterations >= cfg.max_iter {
            return (s, Termination::MaxIterations);
        }
        *iterations += 1;

        let worst = dim;
        let mut centroid = vec![T::zero(); dim];
        for v in &s.vertices[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += *x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n);

        let xr = point(&centroid, &s.vertices[worst], -cfg.reflection);
        let fr = objective(&xr);
        if fr < s.values[0] {
            let xe = point(&centroid, &s.vertices[worst], -cfg.reflection * cfg.expansion);
            let fe = objective(&xe);
            if fe < fr {
                s.vertices[worst] = xe;
                s.values[worst] = fe;
            } else {
                s.vertices[worst] = xr;
                s.values[worst] = fr;
            }
        } else if fr < s.values[worst - 1] {
            s.vertices[worst] = xr;
            s.values[worst] = fr;
        } else {
            let (xc, fc, accept) = if fr < s.values[worst] {
                let xc = point(&centroid, &s.vertices[worst], -cfg.reflection * cfg.contraction);
                let fc = objective(&xc);
                (xc, fc, fc <= fr)
            } else {
                let xc = point(&centroid, &s.vertices[worst], cfg.contraction);
                let fc = objective(&xc);
                (xc, fc, fc < s.values[worst])
            };
            if accept {
                s.vertices[worst] = xc;
                s.values[worst] = fc;
            } else {
                let best = s.vertices[0].clone();
                for i in 1..=dim {
                    let v = point(&best, &s.vertices[i], cfg.shrink);
                    s.values[i] = objective(&v);
                    s.vertices[i] = v;
                }
            }
        }
        s.sort();
        if cfg.record_history {
            history.push(s.values[0]);
        }
    }
}
