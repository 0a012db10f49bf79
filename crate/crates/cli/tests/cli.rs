use std::path::PathBuf;
use std::process::{Command, Output};

fn vvix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vvix")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn records(csv_text: &str) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().unwrap().clone();
    (header, r.records().map(Result::unwrap).collect())
}

fn column(header: &csv::StringRecord, row: &csv::StringRecord, name: &str) -> f64 {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    row[i].parse().unwrap()
}

#[test]
fn table1_rows() {
    let (h, rows) = records(&stdout(&vvix(&["table1"])));
    assert_eq!(rows.len(), 6);
    assert!((column(&h, &rows[0], "f_vix") - 15.4).abs() < 0.05);
    assert!((column(&h, &rows[0], "log_contract") - 105.4).abs() < 0.5);
    assert!((column(&h, &rows[1], "replication_k1_10") - 193.0).abs() < 2.5);
    assert!((column(&h, &rows[2], "simple") - 382.0).abs() < 2.0);
}

#[test]
fn correlation_does_not_move_the_row() {
    let (h, a) = records(&stdout(&vvix(&["vvix", "--params", "set1"])));
    let (_, b) = records(&stdout(&vvix(&["vvix", "--params", "set1", "--rho", "0.5"])));
    for (i, name) in h.iter().enumerate() {
        if name != "rho" {
            assert_eq!(a[0][i], b[0][i], "column {name}");
        }
    }
    assert_eq!(column(&h, &b[0], "rho"), 0.5);
}

#[test]
fn json_and_csv_agree() {
    let (h, rows) = records(&stdout(&vvix(&["vvix", "--params", "set4"])));
    let json: serde_json::Value = serde_json::from_str(&stdout(&vvix(&["vvix", "--params", "set4", "--format", "json"]))).unwrap();
    let obj = &json[0];
    for name in ["f_vix", "log_contract", "replication_k1_5", "replication_k1_10", "simple"] {
        assert_eq!(obj[name].as_f64().unwrap(), column(&h, &rows[0], name), "{name}");
    }
    assert!(obj["mc_f_vix"].is_null());
}

#[test]
fn monte_carlo_columns() {
    let (h, rows) = records(&stdout(&vvix(&["vvix", "--params", "set2", "--mc-check", "--paths", "200000"])));
    let r = &rows[0];
    let z = (column(&h, r, "mc_log_contract") - column(&h, r, "log_contract")) / column(&h, r, "mc_log_contract_se");
    assert!(z.abs() < 3.0, "{z}");
    let z = (column(&h, r, "mc_f_vix") - column(&h, r, "f_vix")) / column(&h, r, "mc_f_vix_se");
    assert!(z.abs() < 3.0, "{z}");
}

#[test]
fn params_from_json_file() {
    let path = tmp("set3.json");
    std::fs::write(&path, r#"{"v0": 0.0371, "kappa": 3.449, "theta": 0.0497, "rho": -0.7558, "sigma": 1.7522}"#).unwrap();
    let from_file = stdout(&vvix(&["vvix", "--params", path.to_str().unwrap()]));
    let from_preset = stdout(&vvix(&["vvix", "--params", "set3"]));
    let (h, a) = records(&from_file);
    let (_, b) = records(&from_preset);
    assert_eq!(column(&h, &a[0], "log_contract"), column(&h, &b[0], "log_contract"));
}

#[test]
fn bad_inputs_exit_with_two() {
    let out = vvix(&["vvix", "--params", "set9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("neither a preset"));

    let path = tmp("broken.csv");
    std::fs::write(&path, "maturity,strike,type,price,impliedVol,discount\n0.5,100,call,5.1,0.2,1\n0.5,110,straddle,2.0,0.2,1\n").unwrap();
    let out = vvix(&["calibrate", "--quotes", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("type"), "{err}");
}

fn write_quotes(preset: &str, file: &str) -> PathBuf {
    let path = tmp(file);
    stdout(&vvix(&["quotes", "--params", preset, "--out", path.to_str().unwrap()]));
    path
}

fn calibrated(args: &[&str]) -> serde_json::Value {
    let out = vvix(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn calibration_round_trip() {
    let q = write_quotes("set4", "set4_quotes.csv");
    let res = calibrated(&["calibrate", "--quotes", q.to_str().unwrap(), "--weights", "vega"]);
    assert!(res["rms"].as_f64().unwrap() < 1e-8, "{}", res["rms"]);
    assert!((res["params"]["sigma"].as_f64().unwrap() / 0.6159 - 1.0).abs() < 1e-3);
    assert!(res["vvix"]["log_contract"].as_f64().is_some());
}

#[test]
fn calibration_with_fixed_kappa() {
    let q = write_quotes("set2", "set2_quotes.csv");
    let res = calibrated(&["calibrate", "--quotes", q.to_str().unwrap(), "--weights", "vega", "--fix-kappa", "0.75"]);
    assert_eq!(res["params"]["kappa"].as_f64(), Some(0.75));
    assert!(!res["free"].as_array().unwrap().iter().any(|n| n == "kappa"));
}

#[test]
fn calibration_anchored_on_vvix() {
    let q = write_quotes("set1", "set1_quotes.csv");
    let res = calibrated(&["calibrate", "--quotes", q.to_str().unwrap(), "--vvix-solve", "98"]);
    let sigma = res["params"]["sigma"].as_f64().unwrap();
    assert!((sigma - 0.315).abs() < 0.005, "{sigma}");
    assert!((res["vvix"]["simple"].as_f64().unwrap() - 98.0).abs() < 1e-6);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = write_quotes("set5", "set5_a.csv");
    let b = write_quotes("set5", "set5_b.csv");
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    let args = ["sweep", "--params", "set3", "--sweep", "0.5:1.5:0.5", "--format", "json"];
    assert_eq!(stdout(&vvix(&args)), stdout(&vvix(&args)));
}

#[test]
fn quote_file_reads_back() {
    let path = write_quotes("set6", "set6_quotes.csv");
    let text = std::fs::read_to_string(path).unwrap();
    let (h, rows) = records(&text);
    assert_eq!(h.iter().collect::<Vec<_>>(), ["maturity", "strike", "type", "price", "impliedVol", "discount"]);
    assert_eq!(rows.len(), 75);
    let quotes = vvix_core::calibration::io::read_quotes(text.as_bytes()).unwrap();
    assert_eq!(quotes.len(), 75);
}

#[test]
fn sweep_marks_failed_points() {
    // a first strike above the VIX future leaves the strip undefined
    let (h, rows) = records(&stdout(&vvix(&["sweep", "--params", "set1", "--sweep", "0.2:0.4:0.1", "--k1", "40"])));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(column(&h, r, "replication").is_nan());
        assert!(column(&h, r, "log_contract") > 0.0);
    }
    let (h, rows) = records(&stdout(&vvix(&["sweep", "--params", "set1", "--sweep", "0.0001:0.0001:1"])));
    assert!(column(&h, &rows[0], "simple") < 0.1);
    assert!(column(&h, &rows[0], "log_contract") < 0.1);
}

#[test]
fn pde_table_on_small_grids() {
    let out = vvix(&[
        "pde-table", "--params", "set2", "--grid", "25,12,16", "--grid", "50,25,30", "--spx-strikes", "200",
    ]);
    let (h, rows) = records(&stdout(&out));
    assert_eq!(rows.len(), 2);
    let (a, b) = (column(&h, &rows[0], "vvix"), column(&h, &rows[1], "vvix"));
    assert!(a > 100.0 && b > 100.0);
    assert!((column(&h, &rows[1], "increment") - (b - a)).abs() < 1e-9);
    assert_eq!(&rows[0][h.iter().position(|c| c == "increment").unwrap()], "");
}

#[test]
fn mc_check_table() {
    let text = stdout(&vvix(&["mc-check", "--params", "set4", "--paths", "100000"]));
    assert_eq!(text.lines().filter(|l| l.contains("PASS") || l.contains("FAIL")).count(), 5);
    assert!(text.trim_end().ends_with("failure(s)"));
}
