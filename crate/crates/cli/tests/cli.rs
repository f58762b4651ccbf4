use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn mev(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mev")).args(args).output().expect("run mev");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn annual_file(dir: &Path, name: &str, values: &[&str]) -> String {
    let mut s = String::from("# variable=hs units=m\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{}-01-01T00:00:00Z,{v}\n", 2000 + i));
    }
    let path = dir.join(name);
    fs::write(&path, s).unwrap();
    path.to_str().unwrap().to_string()
}

fn simulate_case1(dir: &Path, years: &str, paired: &str) {
    let (code, err) = mev(&["simulate", "--case", "1", "--years", years, "--paired-years", paired, "--seed", "3", "--out-dir", p(dir)]);
    assert_eq!(code, 0, "{err}");
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn parse_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases = [
        ("order.csv", "# variable=hs units=m\n2001-01-01T00:00:00Z,1\n2000-01-01T00:00:00Z,2\n"),
        ("value.csv", "# variable=hs units=m\n2001-01-01T00:00:00Z,abc\n"),
        ("empty.csv", ""),
        ("header.csv", "2001-01-01T00:00:00Z,1\n"),
        ("stamp.csv", "# variable=hs units=m\nnot-a-time,1\n"),
    ];
    for (name, body) in cases {
        fs::write(d.join(name), body).unwrap();
        let (code, err) = mev(&["fit-ev", "--x", p(&d.join(name)), "--out-dir", p(d)]);
        assert_eq!(code, 2, "{name}: {err}");
    }
    let (code, err) = mev(&["fit-ev", "--x", p(&d.join("order.csv")), "--out-dir", p(d)]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");
    let (code, _) = mev(&["fit-ev", "--x", p(&d.join("missing.csv")), "--out-dir", p(d)]);
    assert_eq!(code, 2);

    let ok = annual_file(d, "ok.csv", &["1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11"]);
    assert_eq!(mev(&["fit-ev", "--x", &ok, "--ev", "pp", "--out-dir", p(d)]).0, 2);
    assert_eq!(mev(&["fit-ev", "--x", &ok, "--alpha", "1.5", "--out-dir", p(d)]).0, 2);
    assert_eq!(mev(&["fit-ev", "--x", &ok, "--T", "0.5", "--out-dir", p(d)]).0, 2);
    assert!(!d.join("report.json").exists());
}

#[test]
fn non_convergence_exits_3_and_numeric_failure_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ties = annual_file(d, "ties.csv", &["1", "1", "1", "1", "1", "1", "1", "1", "1", "1", "2"]);
    let (code, err) = mev(&["fit-ev", "--x", &ties, "--out-dir", p(d)]);
    assert_eq!(code, 3, "{err}");
    let flat = annual_file(d, "flat.csv", &["5"; 11]);
    let (code, err) = mev(&["fit-ev", "--x", &flat, "--out-dir", p(d)]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn fit_ev_reports_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_case1(d, "200", "200");
    let (code, err) = mev(&["fit-ev", "--x", p(&d.join("x.csv")), "--out-dir", p(d)]);
    assert_eq!(code, 0, "{err}");
    let r = report(d);
    assert_eq!(r["schema_version"], 1);
    let names: Vec<&str> = r["ev_fit"]["params"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["mu", "log_psi", "xi"]);
    let mu = r["ev_fit"]["params"][0]["estimate"].as_f64().unwrap();
    assert!((mu - 10.0).abs() < 0.5);
    assert!(r["reg_fit"].is_null());
}

#[test]
fn mixed_curve_rows_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_case1(d, "100", "40");
    let (code, err) = mev(&[
        "mixed-curve", "--x", p(&d.join("x.csv")), "--z", p(&d.join("z.csv")), "--T", "2,10,50,100,500", "--out-dir", p(d),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(d.join("curves.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(text.lines().next().unwrap(), "T,q,model,quantile,lo,hi");
    assert_eq!(rows.len(), 5);
    let q: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(q.windows(2).all(|w| w[0] <= w[1]));
    for r in &rows {
        assert_eq!(r[2], "mixed");
        let (lo, mid, hi): (f64, f64, f64) = (r[4].parse().unwrap(), r[3].parse().unwrap(), r[5].parse().unwrap());
        assert!(lo < mid && mid < hi);
    }
}

#[test]
fn diagnose_reports_five_ljung_box_lags_per_fit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_case1(d, "60", "60");
    let (code, err) = mev(&["diagnose", "--x", p(&d.join("x.csv")), "--z", p(&d.join("z.csv")), "--out-dir", p(d)]);
    assert_eq!(code, 0, "{err}");
    let r = report(d);
    for fit in ["ev", "reg"] {
        let lb = r["diagnostics"][fit]["ljung_box"].as_array().unwrap();
        let lags: Vec<u64> = lb.iter().map(|t| t["lag"].as_u64().unwrap()).collect();
        assert_eq!(lags, [1, 2, 3, 4, 5]);
        assert!(r["diagnostics"][fit]["ks"]["p_value"].as_f64().is_some());
    }
    assert!(d.join("ppqq_ev.csv").exists() && d.join("ppqq_reg.csv").exists());
}

#[test]
fn full_run_writes_three_models() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_case1(d, "100", "100");
    let (code, err) = mev(&["full-run", "--x", p(&d.join("x.csv")), "--z", p(&d.join("z.csv")), "--out-dir", p(d)]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(d.join("curves.csv")).unwrap();
    let mut models: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    models.dedup();
    assert_eq!(models, ["reanalysis", "mixed", "instrumental_gev"]);
    let r = report(d);
    let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 6);
    for k in ["schema_version", "ev_fit", "reg_fit", "gev_z_fit", "diagnostics", "curves_meta"] {
        assert!(!r[k].is_null(), "{k}");
    }
}

#[test]
fn simulate_case2_round_trips_through_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, err) = mev(&["simulate", "--case", "2", "--years", "30", "--seed", "5", "--poisson-counts", "--out-dir", p(d)]);
    assert_eq!(code, 0, "{err}");
    let series = mev_core::series::read_series(&d.join("x.csv")).unwrap();
    let maxima = mev_core::series::annual_maxima(&series, 0.8);
    assert_eq!(maxima.len(), 30);
    assert!(maxima.dropped.is_empty());
    assert!(maxima.maxima.iter().all(|&m| m >= 2.5));

    let cfg = mev_core::simulate::SimulationConfig { years: 30, poisson_counts: true, ..mev_core::SimulationConfig64::case2(5) };
    let data = mev_core::simulate::simulate_case2(&cfg).unwrap();
    assert_eq!(maxima.maxima, data.x_max);
    let exc = mev_core::series::exceedances(&series, 2.5, &maxima);
    assert_eq!(exc, data.exceedances);
}
