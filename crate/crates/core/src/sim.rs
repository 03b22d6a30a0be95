//! Monte Carlo bias/MSE study of the maximum likelihood estimator.
//!
//! Every replication draws from its own generator seeded by
//! `mix(seed, cell, replication)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::Params;
use crate::estimate::fit_mle;

/// Failure rate above which a cell is reported with a warning.
pub const FAILURE_WARN_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub sample_sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

/// True parameters and sample size of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl SimGrid {
    /// `n ∈ {20, 60, 120}`, `α ∈ {0.5, 1, 1.5}`, `β = 1`, `δ ∈ {−10, −5, 1, 5, 10}`.
    pub fn paper(replications: usize, seed: u64) -> Self {
        Self {
            sample_sizes: vec![20, 60, 120],
            alphas: vec![0.5, 1.0, 1.5],
            betas: vec![1.0],
            deltas: vec![-10.0, -5.0, 1.0, 5.0, 10.0],
            replications,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Grid(m.to_string()));
        if self.sample_sizes.is_empty() || self.alphas.is_empty() || self.betas.is_empty() || self.deltas.is_empty()
        {
            return bad("every axis needs at least one value");
        }
        if self.replications == 0 {
            return bad("replications must be positive");
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < crate::estimate::MIN_SAMPLE_SIZE) {
            return Err(SimError::Grid(format!(
                "sample size {n} is below the fitting minimum {}",
                crate::estimate::MIN_SAMPLE_SIZE
            )));
        }
        for cell in self.cells() {
            Params::new(cell.alpha, cell.beta, cell.delta).map_err(|e| SimError::Grid(e.to_string()))?;
        }
        Ok(())
    }

    /// Cells ordered by `n`, then `β`, `δ`, `α`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.sample_sizes {
            for &beta in &self.betas {
                for &delta in &self.deltas {
                    for &alpha in &self.alphas {
                        out.push(Cell { n, alpha, beta, delta });
                    }
                }
            }
        }
        out
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in cell `cell`.
pub fn replication_seed(seed: u64, cell: usize, rep: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ cell as u64) ^ rep as u64)
}

/// Aggregates for `(α̂, β̂, δ̂)` over the successful replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub bias: [f64; 3],
    pub mse: [f64; 3],
    /// Divisor `m`, so that `mse = bias² + variance`.
    pub variance: [f64; 3],
    /// Monte Carlo standard error of each bias.
    pub se_bias: [f64; 3],
    /// Monte Carlo standard error of each MSE.
    pub se_mse: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: Cell,
    pub successes: usize,
    pub failures: usize,
    /// Absent when every replication failed.
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub grid: SimGrid,
    pub cells: Vec<CellRecord>,
}

fn one_replication(cell: &Cell, seed: u64) -> Option<[f64; 3]> {
    let p = Params::new(cell.alpha, cell.beta, cell.delta).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = p.sample(&mut rng, cell.n).ok()?;
    let fit = fit_mle(&x, false).ok()?;
    if !fit.converged {
        return None;
    }
    let e = fit.params;
    Some([e.alpha() - cell.alpha, e.beta() - cell.beta, e.delta() - cell.delta])
}

fn summarize(errors: &[[f64; 3]]) -> Option<Summary> {
    if errors.is_empty() {
        return None;
    }
    let m = errors.len() as f64;
    let mut s = Summary {
        bias: [0.0; 3],
        mse: [0.0; 3],
        variance: [0.0; 3],
        se_bias: [0.0; 3],
        se_mse: [0.0; 3],
    };
    for k in 0..3 {
        let bias = errors.iter().map(|e| e[k]).sum::<f64>() / m;
        let mse = errors.iter().map(|e| e[k] * e[k]).sum::<f64>() / m;
        let variance = errors.iter().map(|e| (e[k] - bias).powi(2)).sum::<f64>() / m;
        let var_sq = errors.iter().map(|e| (e[k] * e[k] - mse).powi(2)).sum::<f64>() / m;
        s.bias[k] = bias;
        s.mse[k] = mse;
        s.variance[k] = variance;
        if m > 1.0 {
            s.se_bias[k] = (variance * m / (m - 1.0) / m).sqrt();
            s.se_mse[k] = (var_sq * m / (m - 1.0) / m).sqrt();
        }
    }
    Some(s)
}

/// Runs every cell of the grid on `parallelism` worker threads.
/// The report is identical for any `parallelism ≥ 1`.
pub fn run_grid(grid: &SimGrid, parallelism: usize) -> Result<SimReport, SimError> {
    grid.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    let cells = grid.cells();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.replications).map(move |r| (c, r)))
        .collect();
    // `collect` on an indexed parallel iterator keeps task order.
    let outcomes: Vec<Option<[f64; 3]>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| one_replication(&cells[c], replication_seed(grid.seed, c, r)))
            .collect()
    });

    let records = cells
        .iter()
        .zip(outcomes.chunks(grid.replications))
        .map(|(cell, chunk)| {
            let ok: Vec<[f64; 3]> = chunk.iter().flatten().copied().collect();
            let failures = chunk.len() - ok.len();
            let rate = failures as f64 / chunk.len() as f64;
            if rate > FAILURE_WARN_RATE {
                log::warn!(
                    "cell n={} alpha={} beta={} delta={}: {failures} of {} replications failed",
                    cell.n,
                    cell.alpha,
                    cell.beta,
                    cell.delta,
                    chunk.len()
                );
            }
            CellRecord {
                cell: *cell,
                successes: ok.len(),
                failures,
                summary: summarize(&ok),
            }
        })
        .collect();
    Ok(SimReport {
        grid: grid.clone(),
        cells: records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableLayout {
    Csv,
    /// Bias with MSE in parentheses, one row per `(n, β, δ)` and a column pair per α.
    Text,
}

pub const CSV_HEADER: [&str; 11] = [
    "n",
    "alpha",
    "beta",
    "delta",
    "bias_alpha",
    "mse_alpha",
    "bias_beta",
    "mse_beta",
    "bias_delta",
    "mse_delta",
    "failures",
];

fn csv_table(report: &SimReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &report.cells {
        let c = r.cell;
        let mut row = vec![c.n.to_string(), c.alpha.to_string(), c.beta.to_string(), c.delta.to_string()];
        for k in 0..3 {
            match &r.summary {
                Some(s) => {
                    row.push(s.bias[k].to_string());
                    row.push(s.mse[k].to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        row.push(r.failures.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn text_table(report: &SimReport) -> String {
    let alphas = &report.grid.alphas;
    let mut out = String::new();
    out.push_str(&format!("{:>5} {:>6} {:>6}", "n", "beta", "delta"));
    for a in alphas {
        out.push_str(&format!(
            " | {:^20} {:^20}",
            format!("alpha={a:.2}: a-hat"),
            "b-hat"
        ));
    }
    out.push('\n');
    let fmt = |s: &Option<Summary>, k: usize| match s {
        Some(s) => format!("{:.4} ({:.4})", s.bias[k], s.mse[k]),
        None => "-".to_string(),
    };
    for chunk in report.cells.chunks(alphas.len()) {
        let c = chunk[0].cell;
        out.push_str(&format!("{:>5} {:>6} {:>6}", c.n, c.beta, c.delta));
        for r in chunk {
            out.push_str(&format!(" | {:>20} {:>20}", fmt(&r.summary, 0), fmt(&r.summary, 1)));
        }
        out.push('\n');
    }
    out
}

pub fn to_table(report: &SimReport, layout: TableLayout) -> String {
    match layout {
        TableLayout::Csv => csv_table(report),
        TableLayout::Text => text_table(report),
    }
}
