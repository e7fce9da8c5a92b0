mod common;

use std::collections::BTreeSet;

use common::*;
use seafield_cli::config::{Config, IngestConfig};
use seafield_cli::series::{ingest, GriddedSeries};

fn day_set(s: &GriddedSeries) -> BTreeSet<i64> {
    s.days().into_iter().collect()
}

#[test]
fn six_hourly_input_thinned_to_daily() {
    let t = truth(4, 3, [2.0, 3.0], [2.0, 2.0], 0.5);
    let raw = raw_csv(&t, 5, 3);
    let s = ingest(raw.as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(s.times, vec![0.0, 24.0, 48.0, 72.0, 96.0]);
    assert_eq!(s.n_cells(), 12);
    let direct = t.sampler().bivariate(3, 2).unwrap();
    for j in 0..12 {
        assert_eq!(s.values[2][j], Some((direct.0[j], direct.1[j])));
    }
    let all = ingest(raw.as_bytes(), &IngestConfig { thin_hours: 0.0, ..Default::default() }).unwrap();
    assert_eq!(all.times.len(), 20);
    assert_eq!(all.values[4], s.values[1]);
}

#[test]
fn lattice_gaps_are_missing_cells() {
    let raw = "time,lon,lat,hs,t1\n0,0,0,1,7\n0,1,0,1.2,7\n0,0,1,NaN,7\n24,1,1,2,8\n";
    let s = ingest(raw.as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(s.n_cells(), 4);
    assert_eq!(s.values[0], vec![Some((1.0, 7.0)), Some((1.2, 7.0)), None, None]);
    assert_eq!(s.values[1][3], Some((2.0, 8.0)));
    let d = s.to_dataset().unwrap();
    assert!(d.x[0][2].is_nan() && (d.x[1][3] - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn malformed_rows_report_line_numbers() {
    let cfg = IngestConfig::default();
    let e = ingest("time,lon,lat,hs,t1\n0,0,0,1,7\n0,1,0,-2,7\n".as_bytes(), &cfg).unwrap_err();
    assert!(matches!(e, seafield::Error::Parse { line: 3, .. }), "{e}");
    let e = ingest("time,lon,lat,hs,t1\n0,0,0,1,7\n6,0,x,1,7\n".as_bytes(), &cfg).unwrap_err();
    assert!(matches!(e, seafield::Error::Parse { line: 3, .. }), "{e}");
    let e = ingest("time,lon,lat,hs\n0,0,0,1\n".as_bytes(), &cfg).unwrap_err();
    assert!(matches!(e, seafield::Error::Parse { line: 1, .. }));
    let e = ingest("time,lon,lat,hs,t1\n0,0,0,1,7\n0,0,0,1,7\n".as_bytes(), &cfg).unwrap_err();
    assert!(matches!(e, seafield::Error::Parse { line: 3, .. }));
}

#[test]
fn negative_hs_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", "time,lon,lat,hs,t1\n0,0,0,1,7\n0,1,0,-1,7\n");
    let o = run(dir.path(), &["ingest", "--input", "raw.csv", "--output", "s.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn config_errors_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", "time,lon,lat,hs,t1\n0,0,0,1,7\n");
    write(dir.path(), "bad.toml", "[fit]\nunknown = 1\n");
    let o = run(dir.path(), &["--config", "bad.toml", "ingest", "--input", "raw.csv", "--output", "s.csv"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(dir.path(), &["--config", "missing.toml", "ingest", "--input", "raw.csv", "--output", "s.csv"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(dir.path(), &["--threads", "0", "ingest", "--input", "raw.csv", "--output", "s.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn exit_code_classes() {
    use seafield_cli::exit_code;
    assert_eq!(exit_code(&seafield::Error::Data("x".into())), 2);
    assert_eq!(exit_code(&seafield::Error::NotSpd { pivot: 0 }), 3);
    assert_eq!(exit_code(&seafield::Error::Quadrature { residual: 1.0 }), 3);
    assert_eq!(exit_code(&seafield::Error::Config("x".into())), 4);
}

#[test]
fn alternate_day_split() {
    let raw = "time,lon,lat,hs,t1\n0,0,0,1,7\n24,0,0,2,7\n48,0,0,3,7\n72,0,0,4,7\n";
    let s = ingest(raw.as_bytes(), &IngestConfig::default()).unwrap();
    let (a, b) = s.split().unwrap();
    assert_eq!(day_set(&a), [0, 2].into());
    assert_eq!(day_set(&b), [1, 3].into());
    assert_eq!(a.values[1][0], Some((3.0, 7.0)));
    assert_eq!(a.times.len() + b.times.len(), s.times.len());
    let one = ingest("time,lon,lat,hs,t1\n0,0,0,1,7\n".as_bytes(), &IngestConfig::default()).unwrap();
    assert!(one.split().is_err());
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", "time,lon,lat,hs,t1\n0,0,0,1,7\n");
    run_ok(dir.path(), &["ingest", "--input", "raw.csv", "--output", "s.csv"]);
    let o = run(dir.path(), &["split", "--input", "s.csv", "--train", "a.csv", "--test", "b.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_record_config_hash_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", "time,lon,lat,hs,t1\n0,0,0,1,7\n24,0,0,2,7\n");
    write(dir.path(), "a.toml", "[ingest]\nthin_hours = 24\n");
    write(dir.path(), "b.toml", "[ingest]\nthin_hours = 12\n");
    run_ok(dir.path(), &["--seed", "17", "--config", "a.toml", "ingest", "--input", "raw.csv", "--output", "a.csv"]);
    run_ok(dir.path(), &["--seed", "17", "--config", "b.toml", "ingest", "--input", "raw.csv", "--output", "b.csv"]);
    run_ok(dir.path(), &["--seed", "17", "ingest", "--input", "raw.csv", "--output", "c.csv"]);
    let first = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().next().unwrap().to_string();
    let (a, b, c) = (first("a.csv"), first("b.csv"), first("c.csv"));
    assert!(a.contains("seed=17") && a.contains("config_sha256="));
    assert_ne!(a, b);
    // the default config thins to 24 h, so the effective configuration matches
    assert_eq!(a, c);
    assert_eq!(Config::default().hash(), Config::from_toml("").unwrap().hash());
}

#[test]
fn series_file_round_trip() {
    let t = truth(3, 3, [2.0, 3.0], [2.0, 2.0], 0.5);
    let s = ingest(raw_csv(&t, 3, 8).as_bytes(), &IngestConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let header = seafield_cli::output::Header { command: "test".into(), config_hash: "0".into(), seed: 0 };
    let p = write(dir.path(), "s.csv", &s.to_csv(&header));
    assert_eq!(GriddedSeries::read(&p).unwrap(), s);
}

#[test]
fn pipeline_runs_and_simulation_is_seeded() {
    let t = truth(6, 5, [2.5, 3.5], [2.0, 2.0], 0.8);
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "raw.csv", &raw_csv(&t, 40, 5));
    write(d, "run.toml", &pipeline_config(40, 20, 3));
    let c = ["--config", "run.toml", "--seed", "9"];
    let with = |rest: &[&'static str]| -> Vec<&'static str> { [&c[..], rest].concat() };
    run_ok(d, &with(&["ingest", "--input", "raw.csv", "--output", "series.csv"]));
    run_ok(d, &with(&["split", "--input", "series.csv", "--train", "train.csv", "--test", "test.csv"]));
    run_ok(d, &with(&["fit", "--input", "train.csv", "--out-dir", "fit"]));
    let report = std::fs::read_to_string(d.join("fit/fit_report.csv")).unwrap();
    assert!(report.contains("x,neg_loglik") && report.contains("rho,"));
    run_ok(d, &with(&["simulate", "--model", "fit/model.txt", "--output", "sim1.csv"]));
    run_ok(d, &with(&["simulate", "--model", "fit/model.txt", "--output", "sim2.csv"]));
    assert_eq!(std::fs::read(d.join("sim1.csv")).unwrap(), std::fs::read(d.join("sim2.csv")).unwrap());
    run_ok(d, &["--config", "run.toml", "--seed", "10", "simulate", "--model", "fit/model.txt", "--output", "sim3.csv"]);
    assert_ne!(std::fs::read(d.join("sim1.csv")).unwrap(), std::fs::read(d.join("sim3.csv")).unwrap());
    let sim = GriddedSeries::read(&d.join("sim1.csv")).unwrap();
    assert_eq!(sim.times.len(), 5);
    assert_eq!(sim.n_cells(), 30);
    run_ok(d, &with(&["risk", "--model", "fit/model.txt", "--data", "test.csv", "--out-dir", "risk"]));
    for f in ["risk_to_europe.csv", "risk_to_america.csv", "risk_to_europe_samples.csv"] {
        assert!(d.join("risk").join(f).exists(), "{f}");
    }
    let cdf = std::fs::read_to_string(d.join("risk/risk_to_europe.csv")).unwrap();
    assert!(cdf.contains("coverage=") && cdf.contains("value,lower,upper,data_cdf"));
    run_ok(d, &with(&["crosscorr", "--input", "train.csv", "--model", "fit/model.txt", "--output", "cc.csv"]));
    let cc = std::fs::read_to_string(d.join("cc.csv")).unwrap();
    assert_eq!(cc.lines().filter(|l| !l.starts_with('#')).count(), 31);
}
