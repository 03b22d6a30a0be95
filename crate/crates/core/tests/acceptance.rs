//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL but do not fail the
//! run; if one of them starts passing the run fails so the list gets updated.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use bgamma::dist::Params;
use bgamma::estimate::{fit_mle, loglik, lr_test, observed_information, score};
use bgamma::gof::{gof_report, ks_statistic};
use bgamma::io::wheaton;
use bgamma::optimize::{numeric_gradient, numeric_hessian};
use bgamma::regress::{
    fit_regression, quantile_residuals, simulate_censored, Coefficients, RegressionSpec,
};
use bgamma::sim::{run_grid, to_table, SimGrid, SimReport, TableLayout};
use bgamma::specfun::std_normal_cdf;
use bgamma::{BGamma, ModeKind};
use common::{closed_form_errors, rel_err, sorted};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_FAILURES: [u32; 1] = [3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn c1_wheaton() -> Outcome {
    let x = wheaton();
    let fit = fit_mle(&x, false).unwrap();
    let g = gof_report(&fit, &x).unwrap();
    let p = fit.params;
    let se = fit.se_working.unwrap_or([f64::NAN; 3]);
    let checks = [
        within(p.alpha(), 1.054, 0.02),
        within(p.beta(), 0.176, 0.02),
        within(p.delta(), 0.177, 0.02),
        within(se[0], 0.145, 0.02),
        within(se[1], 0.111, 0.02),
        within(se[2], 0.032, 0.02),
        within(fit.aic, 501.51, 0.2),
        within(fit.bic, 508.34, 0.2),
        within(g.ks, 0.065, 0.005),
        within(g.ks_p, 0.918, 0.03),
        within(g.cvm, 0.038, 0.005),
        fit.converged,
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "alpha {:.4} beta {:.4} delta {:.4}; se {:.4} {:.4} {:.4}; AIC {:.3} BIC {:.3}; KS {:.4} (p {:.4}); W* {:.4}",
            p.alpha(),
            p.beta(),
            p.delta(),
            se[0],
            se[1],
            se[2],
            fit.aic,
            fit.bic,
            g.ks,
            g.ks_p,
            g.cvm
        ),
    )
}

fn c2_nested() -> Outcome {
    let x = wheaton();
    let gamma = fit_mle(&x, true).unwrap();
    let full = fit_mle(&x, false).unwrap();
    let g = gof_report(&gamma, &x).unwrap();
    let lr = lr_test(&full, &gamma);
    outcome(
        gamma.converged && within(gamma.aic, 506.68, 0.2) && within(g.ks, 0.102, 0.005),
        format!("AIC {:.3}; KS {:.4}; LR {:.3} (p {:.4})", gamma.aic, g.ks, lr.statistic, lr.p_value),
    )
}

/// (n, α, δ, [bias α̂, MSE α̂, bias β̂, MSE β̂]) as printed.
const SPOT_CELLS: [(usize, f64, f64, [f64; 4]); 2] = [
    (120, 0.5, 1.0, [-0.0107, 0.0031, -0.0054, 0.0085]),
    (20, 1.0, 5.0, [0.6729, 1.8993, 0.2345, 0.2417]),
];

/// For each (α, β, δ): MSE of α̂ and β̂ falls at every step in n, and |bias| at
/// the largest n is below |bias| at the smallest.
fn monotone_share(report: &SimReport) -> (usize, usize) {
    let g = &report.grid;
    let mut ns = g.sample_sizes.clone();
    ns.sort_unstable();
    let (mut good, mut total) = (0, 0);
    for &a in &g.alphas {
        for &b in &g.betas {
            for &d in &g.deltas {
                let series: Vec<_> = ns
                    .iter()
                    .map(|&n| {
                        report
                            .cells
                            .iter()
                            .find(|r| r.cell.n == n && r.cell.alpha == a && r.cell.beta == b && r.cell.delta == d)
                            .and_then(|r| r.summary)
                    })
                    .collect();
                total += 1;
                let Some(s) = series.into_iter().collect::<Option<Vec<_>>>() else {
                    continue;
                };
                let ok = (0..2).all(|k| {
                    s.windows(2).all(|w| w[1].mse[k] < w[0].mse[k])
                        && s.last().unwrap().bias[k].abs() < s[0].bias[k].abs()
                });
                good += usize::from(ok);
            }
        }
    }
    (good, total)
}

fn c3_simulation() -> Outcome {
    let full = run_grid(&SimGrid::paper(5000, 2024), 1).unwrap();
    let mut spot_ok = true;
    let mut notes = Vec::new();
    for (n, a, d, printed) in SPOT_CELLS {
        let rec = full
            .cells
            .iter()
            .find(|r| r.cell.n == n && r.cell.alpha == a && r.cell.delta == d)
            .unwrap();
        let s = rec.summary.as_ref().unwrap();
        let got = [s.bias[0], s.mse[0], s.bias[1], s.mse[1]];
        let se = [s.se_bias[0], s.se_mse[0], s.se_bias[1], s.se_mse[1]];
        let hits: Vec<bool> = (0..4).map(|i| (got[i] - printed[i]).abs() <= 3.0 * se[i]).collect();
        spot_ok &= hits.iter().all(|&h| h);
        notes.push(format!(
            "n={n} a={a} d={d}: bias/mse a {:.4}/{:.4} b {:.4}/{:.4} vs {:?} ({} failures)",
            got[0], got[1], got[2], got[3], printed, rec.failures
        ));
    }
    let (good, total) = monotone_share(&full);
    let smoke = run_grid(&SimGrid::paper(500, 7), 1).unwrap();
    let (sgood, stotal) = monotone_share(&smoke);
    let mono = good * 5 >= total * 4 && sgood * 5 >= stotal * 4;
    outcome(
        spot_ok && mono,
        format!(
            "spot cells {}; monotone {good}/{total} at 5000 reps, {sgood}/{stotal} at 500; {}",
            if spot_ok { "match" } else { "outside 3 MC SE" },
            notes.join("; ")
        ),
    )
}

fn c4_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_s, mut worst_h) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let a = rng.random_range(0.4..5.0);
        let b = rng.random_range(0.2..4.0);
        let d = rng.random_range(-3.0..6.0) * b / a;
        let p = Params::new(a, b, d).unwrap();
        let n = rng.random_range(10..200);
        let x = p.sample(&mut rng, n).unwrap();
        let ll = |w: &[f64]| Params::new(w[0], w[1], w[2]).map_or(f64::NAN, |q| loglik(&q, &x).unwrap());
        let at = [a, b, d];
        let s = score(&p, &x).unwrap();
        let g = numeric_gradient(ll, &at, 1e-6).unwrap();
        let info = observed_information(&p, &x).unwrap();
        let h = numeric_hessian(ll, &at, 1e-4).unwrap();
        for i in 0..3 {
            worst_s = worst_s.max(rel_err(s[i], g[i]));
            for j in 0..3 {
                worst_h = worst_h.max(rel_err(-info[i][j], h[i][j]));
            }
        }
    }
    outcome(
        worst_s < 1e-4 && worst_h < 1e-3,
        format!("100 pairs; worst score error {worst_s:.2e}, worst information error {worst_h:.2e}"),
    )
}

fn c5_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = (0.0f64, String::new());
    for _ in 0..50 {
        let p: BGamma =
            Params::new(rng.random_range(0.3..5.0), rng.random_range(0.2..5.0), rng.random_range(-10.0..10.0)).unwrap();
        for (name, e) in closed_form_errors(&p) {
            if e > worst.0 {
                worst = (e, name);
            }
        }
    }
    outcome(worst.0 <= 1e-7, format!("50 triples; worst relative error {:.2e} ({})", worst.0, worst.1))
}

fn scan_mode_count(p: &BGamma) -> usize {
    let top = p.quantile(1.0 - 1e-9).unwrap();
    let lo = top * 1e-8;
    let n = 100_000;
    let r = (top / lo).powf(1.0 / n as f64);
    let v: Vec<f64> = (0..=n).map(|i| p.log_pdf(lo * r.powi(i))).collect();
    v.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2]).count()
}

fn c6_modes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..200 {
        let p = Params::new(rng.random_range(0.3..6.0), rng.random_range(0.1..5.0), rng.random_range(-5.0..10.0)).unwrap();
        if p.mode_report().modes.len() != scan_mode_count(&p) {
            mismatches += 1;
        }
    }
    // (α, β, δ, label as printed).
    let named = [
        (2.0, 1.0, 1.0, ModeKind::Bimodal),
        (2.0, 0.5, 0.5, ModeKind::Unimodal),
        (2.0, 2.0, 3.0, ModeKind::Bimodal),
        (1.0, 1.0, 2.0, ModeKind::Unimodal),
        (1.0, 1.0, 1.0, ModeKind::Unimodal),
    ];
    let mut notes = Vec::new();
    for (a, b, d, printed) in named {
        let p = Params::new(a, b, d).unwrap();
        let kind = p.mode_report().kind;
        let scan = scan_mode_count(&p);
        if p.mode_report().modes.len() != scan {
            mismatches += 1;
        }
        if kind != printed {
            notes.push(format!("CONFLICT ({a},{b},{d}) printed {printed:?}, density {kind:?}"));
        }
    }
    let detail = format!("{mismatches} disagreements with 1e5-point scans over 205 triples; {}", notes.join("; "));
    outcome(mismatches == 0, detail)
}

fn c7_sampler() -> Outcome {
    let mut counts = Vec::new();
    for d in [-5.0, 0.0, 3.0] {
        let p = Params::new(2.0, 2.0, d).unwrap();
        let passed = (0..100)
            .filter(|&seed| {
                let x = sorted(&p.sample(&mut ChaCha8Rng::seed_from_u64(seed), 10_000).unwrap());
                ks_statistic(&x, |t| p.cdf(t)).unwrap().p_value >= 0.01
            })
            .count();
        counts.push((d, passed));
    }
    outcome(
        counts.iter().all(|&(_, c)| c >= 95),
        counts.iter().map(|(d, c)| format!("delta {d}: {c}/100")).collect::<Vec<_>>().join(", "),
    )
}

fn c8_regression() -> Outcome {
    let spec = RegressionSpec {
        alpha_cols: vec![0, 1],
        beta_cols: vec![0, 1],
        include_delta: true,
    };
    let truth = Coefficients {
        tau1: vec![-0.2, 1.3],
        tau2: vec![-3.5, 1.1],
        delta: 0.03,
    };
    let target = [-0.2, 1.3, -3.5, 1.1, 0.03];
    let (mut recovered, mut normal, mut gd_exact, mut censored) = (0, 0, true, 0.0);
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov: Vec<Vec<f64>> = (0..500).map(|_| vec![1.0, f64::from(u8::from(rng.random::<bool>()))]).collect();
        let data = simulate_censored(&truth, &spec, cov, &mut rng).unwrap();
        censored += data.censored_fraction();
        let Ok(fit) = fit_regression(&data, &spec) else {
            continue;
        };
        gd_exact &= fit.gd == -2.0 * fit.loglik;
        let coefs: Vec<_> = fit.tau1.iter().chain(&fit.tau2).chain(fit.delta.iter()).collect();
        if coefs
            .iter()
            .zip(target)
            .all(|(c, t)| c.se.is_some_and(|se| (c.estimate - t).abs() <= 3.0 * se))
        {
            recovered += 1;
        }
        let r = sorted(&quantile_residuals(&fit, &data, &mut rng).unwrap());
        if ks_statistic(&r, std_normal_cdf::<f64>).unwrap().p_value >= 0.01 {
            normal += 1;
        }
    }
    outcome(
        recovered >= 90 && normal >= 95 && gd_exact,
        format!(
            "recovered {recovered}/100, residuals normal {normal}/100, GD identity {}, mean censoring {:.3}",
            if gd_exact { "exact" } else { "broken" },
            censored / 100.0
        ),
    )
}

fn c9_determinism() -> Outcome {
    let grid = SimGrid::paper(20, 99);
    let one = run_grid(&grid, 1).unwrap();
    let eight = run_grid(&grid, 8).unwrap();
    let same_csv = to_table(&one, TableLayout::Csv) == to_table(&eight, TableLayout::Csv);
    let same_bits = one.cells.iter().zip(&eight.cells).all(|(a, b)| {
        let bits = |r: &bgamma::sim::CellRecord| {
            r.summary
                .as_ref()
                .map(|s| s.bias.iter().chain(&s.mse).map(|v| v.to_bits()).collect::<Vec<_>>())
        };
        bits(a) == bits(b) && a.failures == b.failures
    });
    outcome(same_csv && same_bits, format!("{} cells compared bitwise", one.cells.len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "river data fit", c1_wheaton),
        (2, "nested gamma fit", c2_nested),
        (3, "simulation spot cells and monotonicity", c3_simulation),
        (4, "analytic derivatives", c4_derivatives),
        (5, "closed forms against quadrature", c5_closed_forms),
        (6, "mode classification", c6_modes),
        (7, "sampler fidelity", c7_sampler),
        (8, "regression recovery", c8_regression),
        (9, "parallel determinism", c9_determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (listed as known failure)",
        };
        if o.pass == known {
            unexpected += 1;
        }
        println!("criterion {id} [{name}]: {tag} in {:.1}s; {}", start.elapsed().as_secs_f64(), o.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
