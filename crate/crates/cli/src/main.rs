use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bgamma::estimate::{fit_mle, loglik, EstimateError};
use bgamma::gof::{cvm_statistic, gof_report, ks_statistic, qq_data, worm_data};
use bgamma::io::{read_csv, render_report, write_report, Format, IoError, Report, Schema};
use bgamma::regress::{fit_regression, model_comparison, quantile_residuals, RegressError, RegressionSpec};
use bgamma::sim::{run_grid, SimGrid};
use bgamma::{BGamma, GofReport, ModeKind};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bimodal gamma distribution toolkit.
#[derive(Parser)]
#[command(name = "bgamma", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the distribution to a positive sample by maximum likelihood.
    Fit(FitArgs),
    /// Fit the censored regression model to a survival CSV.
    Regress(RegressArgs),
    /// Run the Monte Carlo bias/MSE study.
    Simulate(SimulateArgs),
    /// Goodness of fit of given parameters to a sample.
    Gof(GofArgs),
    /// Evaluate distribution functions, moments, modes or entropies.
    Eval(EvalArgs),
    /// Draw a seeded random sample.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
            OutFormat::Text => Format::Text,
        }
    }
}

#[derive(Args)]
struct ParamArgs {
    /// Shape α > 0.
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Rate β > 0.
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Bimodality parameter δ.
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<BGamma, Failure> {
        BGamma::new(self.alpha, self.beta, self.delta).map_err(Failure::input)
    }
}

#[derive(Args)]
struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Column to fit; defaults to the first.
    #[arg(long)]
    column: Option<String>,
    /// Fit the gamma submodel (δ = 0).
    #[arg(long)]
    fix_delta_zero: bool,
    /// Write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutFormat,
}

#[derive(Args)]
struct RegressArgs {
    /// CSV with `time`, `status` (1 event, 0 censored) and covariate columns.
    #[arg(long)]
    data: PathBuf,
    /// Covariate columns to read; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Terms in the α predictor, by name or index (0 is the intercept); defaults to all.
    #[arg(long, value_delimiter = ',')]
    alpha_cols: Option<Vec<String>>,
    /// Terms in the β predictor; defaults to all.
    #[arg(long, value_delimiter = ',')]
    beta_cols: Option<Vec<String>>,
    /// Fit the gamma regression only (δ = 0).
    #[arg(long)]
    no_delta: bool,
    /// Add the bimodal gamma / gamma / Weibull comparison table.
    #[arg(long)]
    compare: bool,
    /// Seed for the randomized residuals of censored rows.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report here; residual, QQ and worm plot files go alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutFormat,
}

#[derive(Args)]
#[command(group(ArgGroup::new("grid").required(true).args(["paper_grid", "sizes"])))]
struct SimulateArgs {
    /// Sample sizes 20, 60, 120; α 0.5, 1, 1.5; β 1; δ −10, −5, 1, 5, 10.
    #[arg(long, conflicts_with_all = ["sizes", "alphas", "betas", "deltas"])]
    paper_grid: bool,
    #[arg(long, value_delimiter = ',', requires_all = ["alphas", "betas", "deltas"])]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    deltas: Option<Vec<f64>>,
    /// Replications per cell.
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; the output does not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
}

#[derive(Args)]
struct GofArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    column: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
    /// Free parameters counted in AIC/BIC; 3, or 2 when δ = 0.
    #[arg(long)]
    k: Option<usize>,
    /// Write QQ plot data (theoretical, empirical) here.
    #[arg(long)]
    qq: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    Pdf,
    Cdf,
    Survival,
    Hazard,
    Mrl,
    Moments,
    Modes,
    Entropy,
}

#[derive(Args)]
#[command(group(ArgGroup::new("points").args(["at", "quantile"])))]
struct EvalArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum)]
    what: What,
    /// Points x at which to evaluate.
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,
    /// Evaluate at the quantiles of these probabilities.
    #[arg(long, value_delimiter = ',')]
    quantile: Option<Vec<f64>>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Number of draws.
    #[arg(short = 'n', long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying the process exit code: 1 input, 2 convergence, 3 rank.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(e: impl Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }

    fn convergence(message: String) -> Self {
        Self { code: 2, message }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Regress(r) => r.into(),
            e => Failure::input(e),
        }
    }
}

impl From<RegressError> for Failure {
    fn from(e: RegressError) -> Self {
        match e {
            RegressError::RankDeficient { .. } => Self { code: 3, message: e.to_string() },
            RegressError::Simplex(_) => Failure::convergence(e.to_string()),
            e => Failure::input(e),
        }
    }
}

impl From<EstimateError> for Failure {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::Simplex(_) => Failure::convergence(e.to_string()),
            e => Failure::input(e),
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(format!("stdout: {e}"))),
    }
}

fn read_sample(data: &Path, column: Option<String>) -> Result<Vec<f64>, Failure> {
    let ds = read_csv(data, &Schema::Sample { column })?;
    Ok(ds.columns.into_iter().next().map(|c| c.values).unwrap_or_default())
}

fn emit(report: &Report, out: Option<&Path>, format: OutFormat) -> Result<(), Failure> {
    print!("{}", render_report(report, Format::Text).map_err(Failure::input)?);
    if let Some(path) = out {
        write_report(report, path, format.into())?;
    }
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<(), Failure> {
    let x = read_sample(&a.data, a.column)?;
    let fit = fit_mle(&x, a.fix_delta_zero)?;
    let gof = gof_report(&fit, &x).map_err(Failure::input)?;
    let converged = fit.converged;
    emit(&Report::Fit { fit, gof: Some(gof) }, a.out.as_deref(), a.format)?;
    if !converged {
        return Err(Failure::convergence("the simplex search did not converge".into()));
    }
    Ok(())
}

fn resolve_terms(terms: Option<Vec<String>>, names: &[String]) -> Result<Vec<usize>, Failure> {
    let Some(terms) = terms else {
        return Ok((0..names.len()).collect());
    };
    terms
        .iter()
        .map(|t| {
            t.parse::<usize>()
                .ok()
                .or_else(|| names.iter().position(|n| n == t))
                .ok_or_else(|| Failure::input(format!("unknown term '{t}'; available: {}", names.join(", "))))
        })
        .collect()
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn csv_lines<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn cmd_regress(a: RegressArgs) -> Result<(), Failure> {
    let ds = read_csv(&a.data, &Schema::Survival)?;
    let data = ds.to_censored_sample(a.covariates.as_deref())?;
    let names = data.names().to_vec();
    let spec = RegressionSpec {
        alpha_cols: resolve_terms(a.alpha_cols, &names)?,
        beta_cols: resolve_terms(a.beta_cols, &names)?,
        include_delta: !a.no_delta,
    };
    let fit = fit_regression(&data, &spec)?;
    let comparison = if a.compare { Some(model_comparison(&data, &spec)?) } else { None };
    let converged = fit.converged;

    if let Some(out) = &a.out {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let r = quantile_residuals(&fit, &data, &mut rng)?;
        let rows = r.iter().enumerate().map(|(i, v)| {
            format!("{},{},{},{v}", i + 1, data.time()[i], u8::from(data.event()[i]))
        });
        write_text(Some(&sibling(out, "residuals")), &csv_lines("row,time,status,residual", rows))?;
        let norm = |p: f64| bgamma::specfun::std_normal_quantile(p).unwrap_or(f64::NAN);
        let qq = qq_data(&r, norm).map_err(Failure::input)?;
        let rows = qq.iter().map(|(t, e)| format!("{t},{e}"));
        write_text(Some(&sibling(out, "qq")), &csv_lines("theoretical,empirical", rows))?;
        let worm = worm_data(&r).map_err(Failure::input)?;
        let rows = worm.iter().map(|w| format!("{},{},{}", w.theoretical, w.deviation, w.band));
        write_text(Some(&sibling(out, "worm")), &csv_lines("theoretical,deviation,band", rows))?;
    }
    emit(&Report::Regression { fit, names, comparison }, a.out.as_deref(), a.format)?;
    if !converged {
        return Err(Failure::convergence("the regression fit did not converge".into()));
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let grid = if a.paper_grid {
        SimGrid::paper(a.reps, a.seed)
    } else {
        SimGrid {
            sample_sizes: a.sizes.unwrap_or_default(),
            alphas: a.alphas.unwrap_or_default(),
            betas: a.betas.unwrap_or_default(),
            deltas: a.deltas.unwrap_or_default(),
            replications: a.reps,
            seed: a.seed,
        }
    };
    let report = run_grid(&grid, a.jobs).map_err(Failure::input)?;
    let text = render_report(&Report::Sim(report), a.format.into()).map_err(Failure::input)?;
    write_text(a.out.as_deref(), &text)
}

fn cmd_gof(a: GofArgs) -> Result<(), Failure> {
    let p = a.params.params()?;
    let mut x = read_sample(&a.data, a.column)?;
    x.sort_by(f64::total_cmp);
    let ks = ks_statistic(&x, |t| p.cdf(t)).map_err(Failure::input)?;
    let cvm = cvm_statistic(&x, |t| p.cdf(t), false).map_err(Failure::input)?;
    let ll = loglik(&p, &x)?;
    let k = a.k.unwrap_or(if p.delta() == 0.0 { 2 } else { 3 }) as f64;
    let n = x.len();
    let report = GofReport {
        ks: ks.d,
        ks_p: ks.p_value,
        cvm,
        aic: -2.0 * ll + 2.0 * k,
        bic: -2.0 * ll + k * (n as f64).ln(),
        n,
    };
    if let Some(path) = &a.qq {
        let qq = qq_data(&x, |q| p.quantile(q).unwrap_or(f64::NAN)).map_err(Failure::input)?;
        let rows = qq.iter().map(|(t, e)| format!("{t},{e}"));
        write_text(Some(path), &csv_lines("theoretical,empirical", rows))?;
    }
    emit(&Report::Gof(report), a.out.as_deref(), a.format)
}

fn kind_name(k: ModeKind) -> &'static str {
    match k {
        ModeKind::Decreasing => "decreasing",
        ModeKind::Unimodal => "unimodal",
        ModeKind::Bimodal => "bimodal",
    }
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let p = a.params.params()?;
    let mut out = String::new();
    match a.what {
        What::Moments => {
            let m = p.moment_summary();
            out += "mean,variance,skewness,kurtosis\n";
            out += &format!("{},{},{},{}\n", m.mean, m.variance, m.skewness, m.kurtosis);
        }
        What::Modes => {
            let r = p.mode_report();
            let kind = kind_name(r.kind);
            out += "kind,role,x\n";
            if r.modes.is_empty() {
                out += &format!("{kind},,\n");
            }
            for m in &r.modes {
                out += &format!("{kind},mode,{m}\n");
            }
            if let Some(am) = r.antimode {
                out += &format!("{kind},antimode,{am}\n");
            }
        }
        What::Entropy => {
            let q = p.entropy_quadratic().map_err(Failure::input)?;
            let s = p.entropy_shannon().map_err(Failure::input)?;
            let t = p.entropy_shannon_taylor();
            out += "quadratic,shannon,shannon_taylor\n";
            out += &format!("{q},{s},{t}\n");
        }
        what => {
            let (probs, xs): (Option<Vec<f64>>, Vec<f64>) = match (a.at, a.quantile) {
                (Some(at), None) => (None, at),
                (None, Some(qs)) => {
                    let xs = qs.iter().map(|&q| p.quantile(q)).collect::<Result<_, _>>().map_err(Failure::input)?;
                    (Some(qs), xs)
                }
                _ => return Err(Failure::input("this --what needs --at or --quantile")),
            };
            let name = match what {
                What::Pdf => "pdf",
                What::Cdf => "cdf",
                What::Survival => "survival",
                What::Hazard => "hazard",
                _ => "mrl",
            };
            out += if probs.is_some() { "q,x," } else { "x," };
            out += name;
            out.push('\n');
            for (i, &x) in xs.iter().enumerate() {
                if !(x >= 0.0) {
                    return Err(Failure::input(format!("evaluation point {x} must be non-negative")));
                }
                let v = match what {
                    What::Pdf => p.pdf(x),
                    What::Cdf => p.cdf(x),
                    What::Survival => p.survival(x),
                    What::Hazard => p.hazard(x),
                    _ => p.mrl(x).map_err(Failure::input)?,
                };
                if let Some(qs) = &probs {
                    out += &format!("{},", qs[i]);
                }
                out += &format!("{x},{v}\n");
            }
        }
    }
    write_text(None, &out)
}

fn cmd_sample(a: SampleArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(Failure::input("-n must be at least 1"));
    }
    let p = a.params.params()?;
    let x = p.sample(&mut ChaCha8Rng::seed_from_u64(a.seed), a.n).map_err(Failure::input)?;
    write_text(a.out.as_deref(), &csv_lines("x", x.iter().map(|v| v.to_string())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Regress(a) => cmd_regress(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Gof(a) => cmd_gof(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sample(a) => cmd_sample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
