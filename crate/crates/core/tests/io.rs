use std::fs;

use bgamma::estimate::fit_mle;
use bgamma::gof::gof_report;
use bgamma::io::{
    read_csv, read_csv_with, read_report, render_report, wheaton, wheaton_path, write_report, Format, IoError,
    ReadOptions, Report, Schema, WHEATON_SHA256,
};
use bgamma::regress::{fit_regression, RegressionSpec};
use bgamma::sim::{run_grid, SimGrid, CSV_HEADER};
use sha2::{Digest, Sha256};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn fixture_checksum_and_contents() {
    let raw = fs::read(wheaton_path()).unwrap();
    assert_eq!(hex(&Sha256::digest(&raw)), WHEATON_SHA256);
    let x = wheaton();
    assert_eq!(x.len(), 72);
    assert!(x.iter().all(|v| *v > 0.0));
    let from_disk = read_csv(&wheaton_path(), &Schema::Sample { column: None }).unwrap();
    assert_eq!(from_disk.columns[0].values, x);
    assert_eq!(from_disk.rows(), 72);
}

#[test]
fn fit_report_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let x = wheaton();
    let fit = fit_mle(&x, false).unwrap();
    let gof = gof_report(&fit, &x).unwrap();
    let report = Report::Fit { fit, gof: Some(gof) };
    let path = dir.path().join("fit.json");
    write_report(&report, &path, Format::Json).unwrap();
    assert_eq!(read_report(&path).unwrap(), report);
    for format in [Format::Csv, Format::Text] {
        assert!(!render_report(&report, format).unwrap().is_empty());
    }
}

#[test]
fn survival_file_to_regression_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surv.csv");
    let mut body = String::from("time,status,group\n");
    for i in 0..60 {
        let t = 0.5 + (i as f64 * 0.37) % 4.0;
        body += &format!("{t},{},{}\n", i32::from(i % 3 != 0), i % 2);
    }
    fs::write(&path, body).unwrap();
    let ds = read_csv(&path, &Schema::Survival).unwrap();
    let data = ds.to_censored_sample(None).unwrap();
    assert_eq!(data.p(), 2);
    assert_eq!(data.n(), 60);
    let spec = RegressionSpec { alpha_cols: vec![0], beta_cols: vec![0, 1], include_delta: false };
    let fit = fit_regression(&data, &spec).unwrap();
    let report = Report::Regression { fit, names: data.names().to_vec(), comparison: None };
    let out = dir.path().join("reg.json");
    write_report(&report, &out, Format::Json).unwrap();
    assert_eq!(read_report(&out).unwrap(), report);
    let csv = render_report(&report, Format::Csv).unwrap();
    assert!(csv.starts_with("parameter,estimate,se,p_value"));
}

#[test]
fn sim_csv_schema() {
    let grid = SimGrid { sample_sizes: vec![20], alphas: vec![1.0], betas: vec![1.0], deltas: vec![0.0], replications: 5, seed: 1 };
    let report = Report::Sim(run_grid(&grid, 1).unwrap());
    let csv = render_report(&report, Format::Csv).unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, CSV_HEADER);
    let rows: Vec<_> = rdr.records().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "20");
}

#[test]
fn bad_files_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    };
    let p = write("status.csv", "time,status\n1.0,1\n2.0,2\n");
    match read_csv(&p, &Schema::Survival) {
        Err(IoError::Status { line, value, .. }) => assert_eq!((line, value.as_str()), (3, "2")),
        other => panic!("{other:?}"),
    }
    let p = write("text.csv", "x\n1.0\nabc\n");
    let err = read_csv(&p, &Schema::Sample { column: None }).unwrap_err();
    assert!(matches!(err, IoError::NonNumeric { line: 3, .. }));
    assert!(err.to_string().contains("abc"));
    let p = write("neg.csv", "x\n1.0\n-2\n");
    assert!(matches!(read_csv(&p, &Schema::Sample { column: None }), Err(IoError::NonPositiveTime { line: 3, .. })));
    let p = write("empty.csv", "x\n");
    assert!(matches!(read_csv(&p, &Schema::Sample { column: None }), Err(IoError::Empty { .. })));
    let p = write("nan.csv", "x\n1.0\nNaN\n");
    assert!(matches!(read_csv(&p, &Schema::Sample { column: None }), Err(IoError::NonFinite { .. })));
    let ok = read_csv_with(&p, &Schema::Sample { column: None }, &ReadOptions { allow_non_finite: true }).unwrap();
    assert!(ok.columns[0].values[1].is_nan());
    let p = write("cols.csv", "a,b\n1,2\n");
    assert!(matches!(
        read_csv(&p, &Schema::Sample { column: Some("c".into()) }),
        Err(IoError::MissingColumn { .. })
    ));
    assert!(matches!(read_csv(&dir.path().join("nope.csv"), &Schema::Survival), Err(IoError::Io { .. })));
}
