//! CSV ingestion and report serialization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::FitResult;
use crate::gof::GofReport;
use crate::regress::{CensoredSample, ComparisonRow, RegFitResult, RegressError};
use crate::sim::{to_table, SimReport, TableLayout};

/// The Wheaton River exceedances shipped with the crate (see `data/README.md`).
pub const WHEATON_CSV: &str = include_str!("../data/wheaton.csv");
/// SHA-256 of `data/wheaton.csv`.
pub const WHEATON_SHA256: &str = "1e38247cc829653b0db3dc9d841012b1e2840fa90cdcbc8564b50c92e7d8ba81";

pub fn wheaton_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("wheaton.csv")
}

/// The 72 Wheaton River exceedances.
pub fn wheaton() -> Vec<f64> {
    parse_csv(WHEATON_CSV.as_bytes(), "wheaton.csv", &Schema::Sample { column: None }, &ReadOptions::default())
        .expect("bundled fixture parses")
        .columns[0]
        .values
        .clone()
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: file has no data rows")]
    Empty { path: String },
    #[error("{path}: missing required column '{name}'")]
    MissingColumn { path: String, name: String },
    #[error("{path}: line {line}, column '{column}': '{value}' is not a number")]
    NonNumeric { path: String, line: u64, column: String, value: String },
    #[error("{path}: line {line}, column '{column}': value is not finite")]
    NonFinite { path: String, line: u64, column: String },
    #[error("{path}: line {line}: time {value} must be positive")]
    NonPositiveTime { path: String, line: u64, value: f64 },
    #[error("{path}: line {line}: status '{value}' must be 0 (censored) or 1 (event)")]
    Status { path: String, line: u64, value: String },
    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    Ragged { path: String, line: u64, expected: usize, found: usize },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error(transparent)]
    Regress(#[from] RegressError),
}

/// Column roles expected in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    /// A single positive sample; `column` names it, otherwise the first column is used.
    Sample { column: Option<String> },
    /// `time` (positive), `status` (0 censored, 1 event), remaining columns are covariates.
    Survival,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadOptions {
    /// Admit NaN and infinite cells.
    pub allow_non_finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub rows: usize,
}

/// Rectangular table of named numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<Column>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn rows(&self) -> usize {
        self.provenance.rows
    }

    /// Builds a censored sample from a survival-schema dataset, prepending the
    /// intercept column. `covariates` selects columns by name; `None` takes all
    /// columns other than `time` and `status`.
    pub fn to_censored_sample(&self, covariates: Option<&[String]>) -> Result<CensoredSample, IoError> {
        let missing = |name: &str| IoError::MissingColumn {
            path: self.provenance.source.clone(),
            name: name.to_string(),
        };
        let time = self.column("time").ok_or_else(|| missing("time"))?.to_vec();
        let status = self.column("status").ok_or_else(|| missing("status"))?;
        let event = status.iter().map(|&s| s == 1.0).collect();
        let names: Vec<String> = match covariates {
            Some(c) => c.to_vec(),
            None => self
                .columns
                .iter()
                .map(|c| c.name.clone())
                .filter(|n| n != "time" && n != "status")
                .collect(),
        };
        let cols: Vec<&[f64]> = names
            .iter()
            .map(|n| self.column(n).ok_or_else(|| missing(n)))
            .collect::<Result<_, _>>()?;
        let matrix = (0..self.rows())
            .map(|i| std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect())
            .collect();
        let mut all_names = vec!["intercept".to_string()];
        all_names.extend(names);
        Ok(CensoredSample::new(time, event, matrix, Some(all_names))?)
    }
}

fn parse_csv<R: std::io::Read>(
    reader: R,
    path: &str,
    schema: &Schema,
    opts: &ReadOptions,
) -> Result<Dataset, IoError> {
    let csv_err = |e: csv::Error| IoError::Csv {
        path: path.to_string(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(IoError::Empty { path: path.to_string() });
    }
    let missing = |name: &str| IoError::MissingColumn {
        path: path.to_string(),
        name: name.to_string(),
    };
    let wanted: Vec<usize> = match schema {
        Schema::Sample { column: Some(c) } => vec![headers.iter().position(|h| h == c).ok_or_else(|| missing(c))?],
        Schema::Sample { column: None } => vec![0],
        Schema::Survival => {
            for req in ["time", "status"] {
                if !headers.iter().any(|h| h == req) {
                    return Err(missing(req));
                }
            }
            (0..headers.len()).collect()
        }
    };
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); wanted.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != headers.len() {
            return Err(IoError::Ragged {
                path: path.to_string(),
                line,
                expected: headers.len(),
                found: rec.len(),
            });
        }
        for (slot, &j) in wanted.iter().enumerate() {
            let name = &headers[j];
            let cell = &rec[j];
            if matches!(schema, Schema::Survival) && name == "status" {
                let v = match cell {
                    "0" => 0.0,
                    "1" => 1.0,
                    _ => {
                        return Err(IoError::Status {
                            path: path.to_string(),
                            line,
                            value: cell.to_string(),
                        })
                    }
                };
                values[slot].push(v);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| IoError::NonNumeric {
                path: path.to_string(),
                line,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() && !opts.allow_non_finite {
                return Err(IoError::NonFinite {
                    path: path.to_string(),
                    line,
                    column: name.clone(),
                });
            }
            let positive_role = match schema {
                Schema::Survival => name == "time",
                Schema::Sample { .. } => true,
            };
            if positive_role && !(v > 0.0) && !v.is_nan() {
                return Err(IoError::NonPositiveTime {
                    path: path.to_string(),
                    line,
                    value: v,
                });
            }
            values[slot].push(v);
        }
    }
    let rows = values[0].len();
    if rows == 0 {
        return Err(IoError::Empty { path: path.to_string() });
    }
    Ok(Dataset {
        columns: wanted
            .iter()
            .zip(values)
            .map(|(&j, values)| Column {
                name: headers[j].clone(),
                values,
            })
            .collect(),
        provenance: Provenance {
            source: path.to_string(),
            rows,
        },
    })
}

/// Reads a CSV file with a header row.
pub fn read_csv(path: &Path, schema: &Schema) -> Result<Dataset, IoError> {
    read_csv_with(path, schema, &ReadOptions::default())
}

pub fn read_csv_with(path: &Path, schema: &Schema, opts: &ReadOptions) -> Result<Dataset, IoError> {
    let shown = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| IoError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_csv(file, &shown, schema, opts)
}

/// Anything [`write_report`] can serialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Report {
    Fit {
        fit: FitResult,
        gof: Option<GofReport>,
    },
    Regression {
        fit: RegFitResult,
        /// Covariate names, intercept first.
        names: Vec<String>,
        comparison: Option<Vec<ComparisonRow>>,
    },
    Gof(GofReport),
    Sim(SimReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn field_rows(fit: Option<&FitResult>, gof: Option<&GofReport>) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    if let Some(f) = fit {
        let p = f.params;
        rows.push(("alpha".into(), p.alpha().to_string()));
        rows.push(("beta".into(), p.beta().to_string()));
        rows.push(("delta".into(), p.delta().to_string()));
        for (i, name) in ["alpha", "beta", "delta"].iter().enumerate() {
            rows.push((format!("se_{name}"), opt(f.se.map(|s| s[i]))));
        }
        for (i, name) in ["log_alpha", "log_beta", "delta"].iter().enumerate() {
            rows.push((format!("se_working_{name}"), opt(f.se_working.map(|s| s[i]))));
        }
        rows.push(("loglik".into(), f.loglik.to_string()));
        rows.push(("aic".into(), f.aic.to_string()));
        rows.push(("bic".into(), f.bic.to_string()));
        rows.push(("n".into(), f.n.to_string()));
        rows.push(("k".into(), f.k.to_string()));
        rows.push(("converged".into(), f.converged.to_string()));
    }
    if let Some(g) = gof {
        rows.push(("ks".into(), g.ks.to_string()));
        rows.push(("ks_p".into(), g.ks_p.to_string()));
        rows.push(("cvm".into(), g.cvm.to_string()));
        if fit.is_none() {
            rows.push(("aic".into(), g.aic.to_string()));
            rows.push(("bic".into(), g.bic.to_string()));
            rows.push(("n".into(), g.n.to_string()));
        }
    }
    rows
}

fn coefficient_rows(fit: &RegFitResult, names: &[String]) -> Vec<[String; 4]> {
    let name = |j: usize| names.get(j).cloned().unwrap_or_else(|| format!("v{j}"));
    let mut rows = Vec::new();
    for (label, cols, coefs) in [
        ("tau1", &fit.spec.alpha_cols, &fit.tau1),
        ("tau2", &fit.spec.beta_cols, &fit.tau2),
    ] {
        for (&j, c) in cols.iter().zip(coefs) {
            rows.push([format!("{label}[{}]", name(j)), c.estimate.to_string(), opt(c.se), opt(c.p_value)]);
        }
    }
    if let Some(d) = fit.delta {
        rows.push(["delta".into(), d.estimate.to_string(), opt(d.se), opt(d.p_value)]);
    }
    rows
}

fn write_csv_rows<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn fmt_se(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn text_fit(fit: &FitResult, gof: Option<&GofReport>) -> String {
    let p = fit.params;
    let se = fit.se_working;
    let mut s = String::new();
    s.push_str(&format!(
        "{:>10} {:>10} {:>10}\n",
        "alpha", "beta", "delta"
    ));
    s.push_str(&format!("{:>10.4} {:>10.4} {:>10.4}\n", p.alpha(), p.beta(), p.delta()));
    s.push_str(&format!(
        "{:>10} {:>10} {:>10}   (SE on log alpha, log beta, delta)\n",
        format!("({})", fmt_se(se.map(|v| v[0]))),
        format!("({})", fmt_se(se.map(|v| v[1]))),
        format!("({})", fmt_se(se.map(|v| v[2])))
    ));
    s.push_str(&format!("\nloglik {:.4}  AIC {:.2}  BIC {:.2}", fit.loglik, fit.aic, fit.bic));
    if let Some(g) = gof {
        s.push_str(&format!("  W* {:.3}  KS {:.3} ({:.3})", g.cvm, g.ks, g.ks_p));
    }
    s.push_str(&format!("\nn = {}, converged = {}\n", fit.n, fit.converged));
    s
}

fn text_regression(fit: &RegFitResult, names: &[String], comparison: Option<&[ComparisonRow]>) -> String {
    let mut s = format!("{:<24} {:>12} {:>10} {:>10}\n", "parameter", "estimate", "SE", "p-value");
    for r in coefficient_rows(fit, names) {
        let num = |v: &str| v.parse::<f64>().map_or("-".to_string(), |x| format!("{x:.4}"));
        s.push_str(&format!("{:<24} {:>12} {:>10} {:>10}\n", r[0], num(&r[1]), num(&r[2]), num(&r[3])));
    }
    s.push_str(&format!(
        "\nGD {:.2}  AIC {:.2}  BIC {:.2}  converged = {}\n",
        fit.gd, fit.aic, fit.bic, fit.converged
    ));
    if let Some(rows) = comparison {
        s.push_str(&format!("\n{:<8} {:>10} {:>10} {:>10}\n", "model", "GD", "AIC", "BIC"));
        for r in rows {
            let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
            s.push_str(&format!(
                "{:<8} {:>10} {:>10} {:>10}\n",
                format!("{:?}", r.model).to_lowercase(),
                f(r.gd),
                f(r.aic),
                f(r.bic)
            ));
        }
    }
    s
}

/// Renders a report without touching the file system.
pub fn render_report(report: &Report, format: Format) -> Result<String, serde_json::Error> {
    Ok(match (report, format) {
        (r, Format::Json) => serde_json::to_string_pretty(r)? + "\n",
        (Report::Fit { fit, gof }, Format::Csv) => write_csv_rows(
            &["field", "value"],
            field_rows(Some(fit), gof.as_ref()).into_iter().map(|(a, b)| [a, b]),
        ),
        (Report::Gof(g), Format::Csv) => {
            write_csv_rows(&["field", "value"], field_rows(None, Some(g)).into_iter().map(|(a, b)| [a, b]))
        }
        (Report::Regression { fit, names, .. }, Format::Csv) => {
            write_csv_rows(&["parameter", "estimate", "se", "p_value"], coefficient_rows(fit, names))
        }
        (Report::Sim(s), Format::Csv) => to_table(s, TableLayout::Csv),
        (Report::Fit { fit, gof }, Format::Text) => text_fit(fit, gof.as_ref()),
        (Report::Gof(g), Format::Text) => format!(
            "KS {:.4} (p = {:.4})  W* {:.4}  AIC {:.2}  BIC {:.2}  n = {}\n",
            g.ks, g.ks_p, g.cvm, g.aic, g.bic, g.n
        ),
        (
            Report::Regression {
                fit,
                names,
                comparison,
            },
            Format::Text,
        ) => text_regression(fit, names, comparison.as_deref()),
        (Report::Sim(s), Format::Text) => to_table(s, TableLayout::Text),
    })
}

pub fn write_report(report: &Report, path: &Path, format: Format) -> Result<(), IoError> {
    let shown = path.display().to_string();
    let text = render_report(report, format).map_err(|source| IoError::Json {
        path: shown.clone(),
        source,
    })?;
    fs::write(path, text).map_err(|source| IoError::Io { path: shown, source })
}

/// Reads back a JSON report written by [`write_report`].
pub fn read_report(path: &Path) -> Result<Report, IoError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| IoError::Io {
        path: shown.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: shown, source })
}
