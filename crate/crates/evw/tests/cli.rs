use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn evw() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_evw"));
    c.env_remove("EVW_THREADS");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(cmd: &mut Command) -> (i32, Output) {
    let out = cmd.output().expect("binary runs");
    (out.status.code().expect("exit code"), out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn solve_writes_report_and_flows() {
    let dir = tempfile::tempdir().unwrap();
    let (code, o) = run(evw().args(["solve", "--out"]).arg(dir.path()));
    assert_eq!(code, 0, "{}", stderr(&o));
    let report = read_json(&dir.path().join("equilibrium.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["certified"], true);
    assert_eq!(report["meta"]["tool"], "evw");
    assert_eq!(report["meta"]["inputs"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("flows.csv")).unwrap();
    let rows = body(&csv);
    assert_eq!(rows[0], "arc_id,class,flow,travel_time_h,cost_eur");
    assert_eq!(rows.len(), 7);
    let total: f64 = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn solve_is_deterministic_and_file_network_matches_builtin() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert_eq!(run(evw().args(["solve", "--out"]).arg(a.path())).0, 0);
    assert_eq!(run(evw().args(["solve", "--out"]).arg(b.path())).0, 0);
    let (code, o) = run(evw()
        .arg("solve")
        .arg("--network")
        .arg(data("three_arc.json"))
        .arg("--scenario")
        .arg(data("two_slot.json"))
        .arg("--out")
        .arg(c.path()));
    assert_eq!(code, 0, "{}", stderr(&o));
    let fa = std::fs::read(a.path().join("equilibrium.json")).unwrap();
    let fb = std::fs::read(b.path().join("equilibrium.json")).unwrap();
    assert_eq!(fa, fb);
    let ca = std::fs::read_to_string(a.path().join("flows.csv")).unwrap();
    let cc = std::fs::read_to_string(c.path().join("flows.csv")).unwrap();
    assert_eq!(body(&ca), body(&cc));
}

#[test]
fn params_override_changes_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let (code, o) = run(evw()
        .arg("solve")
        .arg("--params")
        .arg(data("params_low_fuel.json"))
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(code, 0, "{}", stderr(&o));
    let report = read_json(&dir.path().join("equilibrium.json"));
    let gv_on_a = report["arcs"][0]["flow_gv"].as_f64().unwrap();
    assert!(gv_on_a < 0.2, "{gv_on_a}");
}

#[test]
fn iteration_cap_exits_2_with_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let (code, o) = run(evw().args(["solve", "--max-iter", "2", "--out"]).arg(dir.path()));
    assert_eq!(code, 2);
    assert!(stderr(&o).contains("no convergence"));
    let report = read_json(&dir.path().join("equilibrium.json"));
    assert_eq!(report["converged"], false);
    assert_eq!(report["iterations"], 2);
    assert!(dir.path().join("flows.csv").exists());
}

#[test]
fn multi_start_reports_small_spread() {
    let dir = tempfile::tempdir().unwrap();
    let (code, o) = run(evw()
        .args(["solve", "--multi-start", "3", "--seed", "9", "--out"])
        .arg(dir.path()));
    assert_eq!(code, 0, "{}", stderr(&o));
    let report = read_json(&dir.path().join("equilibrium.json"));
    let dev = report["multi_start"]["max_arc_total_deviation"].as_f64().unwrap();
    assert!(dev < 1e-4, "{dev}");
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn invalid_inputs_exit_3_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(data("three_arc.json")).unwrap();

    let neg = write(
        dir.path(),
        "neg.json",
        &base.replace("\"demand\": 1.0", "\"demand\": -1.0"),
    );
    let (code, o) = run(evw().arg("solve").arg("--network").arg(&neg));
    assert_eq!(code, 3);
    assert!(stderr(&o).contains("demand"), "{}", stderr(&o));

    let cap = write(
        dir.path(),
        "cap.json",
        &base.replacen("\"capacity\": 0.5", "\"capacity\": 0.0", 1),
    );
    let (code, o) = run(evw().arg("solve").arg("--network").arg(&cap));
    assert_eq!(code, 3);
    assert!(stderr(&o).contains("capacity"), "{}", stderr(&o));

    let unknown = write(dir.path(), "unk.json", &base.replace("\"alpha\"", "\"alfa\""));
    assert_eq!(run(evw().arg("solve").arg("--network").arg(&unknown)).0, 3);

    let broken = write(dir.path(), "broken.json", "{\n  \"nodes\": [\n");
    let (code, o) = run(evw().arg("solve").arg("--network").arg(&broken));
    assert_eq!(code, 3);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let (code, _) = run(evw().arg("solve").arg("--network").arg(dir.path().join("missing.json")));
    assert_eq!(code, 3);

    let sc = write(dir.path(), "sc.json", r#"{"n": 2, "eta": [0.01], "ell0": [1.0, 2.0]}"#);
    assert_eq!(run(evw().arg("check-lambda").arg("--scenario").arg(&sc)).0, 3);

    let bad_csv = write(dir.path(), "bad.csv", "date,hour,kwh\n2021-01-01,3,x\n");
    let (code, o) = run(evw().arg("loadstats").arg("--data").arg(&bad_csv));
    assert_eq!(code, 3);
    assert!(stderr(&o).contains('2'), "{}", stderr(&o));

    assert_eq!(run(evw().args(["solve", "--gap-tol=-1"])).0, 3);
    assert_eq!(run(evw().args(["sweep-toll", "--arc", "zz"])).0, 3);
    assert_eq!(run(evw().args(["sweep-toll", "--step", "0"])).0, 3);
    assert_eq!(run(evw().args(["frobnicate"])).0, 3);
    assert_eq!(run(evw().args(["sweep-toll"]).env("EVW_THREADS", "many")).0, 3);
}

#[test]
fn schedule_and_check_lambda_reference_values() {
    let (code, o) = run(evw().args(["schedule", "--charging-need", "20"]));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let ell: Vec<f64> = v["ell_e_kwh"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((ell[0] - 14.45).abs() < 1e-9 && (ell[1] - 5.55).abs() < 1e-9, "{ell:?}");

    let (code, o) = run(evw().arg("check-lambda"));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["increasing"], true);

    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "zero.json", r#"{"n": 2, "eta": 0.01, "ell0": [0.0, 5.0]}"#);
    let (code, o) = run(evw().arg("check-lambda").arg("--scenario").arg(&sc));
    assert_eq!(code, 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degeneracy"], "zero_first_slot");
    assert_eq!(v["increasing"], false);
}

#[test]
fn loadstats_has_one_row_per_month_and_slot_count() {
    let dir = tempfile::tempdir().unwrap();
    let (code, o) = run(evw()
        .arg("loadstats")
        .arg("--data")
        .arg(data("sample_load.csv"))
        .args(["--T", "2,4,8", "--out"])
        .arg(dir.path()));
    assert_eq!(code, 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("loadstats.csv")).unwrap();
    let rows = body(&csv);
    assert_eq!(rows[0], "month,T,fraction,days_counted");
    assert_eq!(rows.len(), 1 + 3 * 12);
    assert!(rows.contains(&"1,2,1,31"));
    assert!(rows.contains(&"3,4,,0"));
}

#[test]
fn sweeps_do_not_depend_on_thread_count() {
    let outs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|t| {
            let (code, o) = run(evw()
                .args(["sweep-penetration", "--x-step", "0.3", "--step", "0.25", "--gamma", "2"])
                .env("EVW_THREADS", t));
            assert_eq!(code, 0, "{}", stderr(&o));
            o.stdout
        })
        .collect();
    assert_eq!(outs[0], outs[1]);

    let (code, o) = run(evw().args(["sweep-fuel", "--min", "1.0", "--max", "1.2", "--step", "0.1"]));
    assert_eq!(code, 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = body(&text);
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("1,") && rows[3].starts_with("1.2,"));
}
