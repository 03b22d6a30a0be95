//! Independent oracles for integration tests: double-exponential quadrature
//! (tanh-sinh on finite intervals, exp-sinh on the half line).

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// `∫ₐᵇ f` by tanh-sinh, halving the step until two levels agree to `rel`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> f64 {
    let r = 0.5 * (b - a);
    let term = |t: f64| {
        let s = FRAC_PI_2 * t.sinh();
        let ch = s.cosh();
        let u = s.tanh();
        // Distance to the nearer endpoint, computed without cancellation.
        let off = r / (s.abs().exp() * ch);
        let x = if u >= 0.0 { b - off } else { a + off };
        if x <= a || x >= b {
            return 0.0;
        }
        let w = r * FRAC_PI_2 * t.cosh() / (ch * ch);
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    trapezoid_levels(term, 4.0, rel)
}

/// `∫₀^∞ f` by exp-sinh with `x = scale · exp((π/2) sinh t)`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, scale: f64, rel: f64) -> f64 {
    let term = |t: f64| {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let x = scale * e;
        if !(x > 0.0) || !x.is_finite() {
            return 0.0;
        }
        let v = f(x) * x * FRAC_PI_2 * t.cosh();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    trapezoid_levels(term, 5.0, rel)
}

fn trapezoid_levels<G: Fn(f64) -> f64>(g: G, t_max: f64, rel: f64) -> f64 {
    let mut h = 0.5;
    let mut sum = g(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += g(t) + g(-t);
        k += 1;
    }
    let mut prev = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        // Add the new odd-indexed nodes.
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            add += g(t) + g(-t);
            k += 2;
        }
        sum += add;
        let cur = sum * h;
        if (cur - prev).abs() <= rel * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Sorted copy.
pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// `|got − want| / max(|want|, 1)`.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Closed-form quantities of `p` against quadrature, as `(name, relative error)`.
pub fn closed_form_errors(p: &bgamma::BGamma) -> Vec<(String, f64)> {
    const TOL: f64 = 1e-13;
    let f = |x: f64| p.pdf(x);
    let scale = p.mean();
    let mut out = Vec::new();
    out.push(("normalization".to_string(), rel_err(exp_sinh(f, scale, TOL), 1.0)));
    for k in [0.5, 1.0, 2.0] {
        let t = k * scale;
        let want = tanh_sinh(f, 0.0, t, TOL);
        out.push((format!("cdf({t:.3})"), rel_err(p.cdf(t), want)));
    }
    for nu in [0.5, 1.0, 2.0, 3.0] {
        let want = exp_sinh(|x| x.powf(nu) * p.pdf(x), scale, TOL);
        out.push((format!("moment({nu})"), rel_err(p.moment(nu).unwrap(), want)));
    }
    let want = exp_sinh(|x| x.ln() * p.pdf(x), scale, TOL);
    out.push(("mean_log".to_string(), rel_err(p.mean_log(), want)));
    let b = p.beta();
    for t in [-0.5 * b, 0.2 * b, 0.4 * b] {
        let want = exp_sinh(|x| (t * x).exp() * p.pdf(x), scale / (1.0 - t / b), TOL);
        out.push((format!("mgf({t:.3})"), rel_err(p.mgf(t).unwrap(), want)));
    }
    let t = scale;
    let want = exp_sinh(|y| (t + y) * p.pdf(t + y), scale, TOL);
    out.push(("truncated_mean".to_string(), rel_err(p.truncated_mean(t), want)));
    if p.alpha() > 1.0 {
        let want = -exp_sinh(|x| p.pdf(x).powi(2), scale, TOL).ln();
        out.push(("entropy_quadratic".to_string(), rel_err(p.entropy_quadratic().unwrap(), want)));
    }
    out
}
