//! End-to-end checks of the `rebate` binary: output contracts, exit codes,
//! and byte stability.
#![allow(clippy::excessive_precision)] // reference constants keep their generator digits

use std::path::Path;
use std::process::{Command, Output};

use rebate_core::RewardSchedule;

fn rebate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rebate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_schedule(dir: &Path, sched: &RewardSchedule) -> String {
    let path = dir.join("schedule.json");
    std::fs::write(&path, sched.to_json()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn price_prints_fig1_value() {
    let out = rebate(&["price", "--theta", "5", "--sigma-eps", "0.6", "--sigma-theta", "0.8"]);
    assert!(out.status.success());
    let p: f64 = stdout_of(&out).trim().parse().unwrap();
    assert!((p - 3.91).abs() < 0.005, "printed {p}");
}

#[test]
fn cutoff_for_constant_schedule_is_price_minus_level() {
    let dir = tempfile::tempdir().unwrap();
    let sched = RewardSchedule::constant(1.2, 3.92).unwrap();
    let path = write_schedule(dir.path(), &sched);
    let out = rebate(&[
        "cutoff",
        "--theta",
        "5",
        "--sigma-eps",
        "0.6",
        "--sigma-theta",
        "0.8",
        "--schedule",
        &path,
    ]);
    assert!(out.status.success());
    let c: f64 = stdout_of(&out).trim().parse().unwrap();
    let p = 3.9106980304392100066;
    assert!((c - (p - 1.2)).abs() < 1e-6, "cutoff {c}");
}

#[test]
fn unknown_flag_exits_2_with_usage_on_stderr() {
    let out = rebate(&["price", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "stderr was: {err}");
}

#[test]
fn missing_required_input_exits_2() {
    let out = rebate(&["price"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn no_equilibrium_exits_3() {
    // degenerate tastes + a refund band holding the price but not zero:
    // the indifference equation has no solution
    let dir = tempfile::tempdir().unwrap();
    let sched = RewardSchedule::interval_refund(3.92, vec![(2.0, 5.0)]).unwrap();
    let path = write_schedule(dir.path(), &sched);
    let out = rebate(&[
        "cutoff",
        "--theta",
        "5",
        "--sigma-eps",
        "0",
        "--sigma-theta",
        "1",
        "--schedule",
        &path,
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_csv_contract_and_byte_stability() {
    let args = [
        "sweep",
        "--theta",
        "5",
        "--sigma-total",
        "1",
        "--grid",
        "0.3:0.9:3",
        "--format",
        "csv",
    ];
    let first = rebate(&args);
    assert!(first.status.success());
    let text = stdout_of(&first);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sigma_eps,sigma_theta,p,profit_no_reward,profit_sc,profit_rc,pi1,pi2,pi_h"
    );
    assert_eq!(lines.count(), 3);
    let second = rebate(&args);
    assert_eq!(stdout_of(&second), text, "CSV output not byte-stable");
}

#[test]
fn sweep_json_matches_csv_values_and_single_commands() {
    let csv_out = rebate(&[
        "sweep", "--theta", "5", "--sigma-total", "1", "--grid", "0.9:0.9:1", "--format", "csv",
    ]);
    let json_out = rebate(&[
        "sweep", "--theta", "5", "--sigma-total", "1", "--grid", "0.9:0.9:1", "--format", "json",
    ]);
    assert!(csv_out.status.success() && json_out.status.success());
    let csv = stdout_of(&csv_out);
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
    let doc: serde_json::Value = serde_json::from_str(stdout_of(&json_out).trim()).unwrap();
    assert_eq!(doc["schema"], 1);
    let jrow = &doc["rows"][0];
    for (i, key) in
        ["sigma_eps", "sigma_theta", "p", "profit_no_reward", "profit_sc", "profit_rc", "pi1", "pi2", "pi_h"]
            .iter()
            .enumerate()
    {
        assert_eq!(fields[i].to_bits(), jrow[*key].as_f64().unwrap().to_bits(), "{key}");
    }

    // one-point sweep equals the single commands
    let price_out = rebate(&["price", "--theta", "5", "--sigma-eps", "0.9", "--sigma-theta", "0.43588989435406735"]);
    let p: f64 = stdout_of(&price_out).trim().parse().unwrap();
    assert!((fields[2] - p).abs() <= 1e-9);
    let bounds_out = rebate(&[
        "bounds", "--theta", "5", "--sigma-eps", "0.9", "--sigma-theta", "0.43588989435406735",
        "--format", "csv",
    ]);
    let btext = stdout_of(&bounds_out);
    let brow: Vec<f64> =
        btext.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    // pi1, pi2, pi_h agree with the sweep row to solver reproducibility
    assert!((brow[1] - fields[6]).abs() <= 1e-9);
    assert!((brow[2] - fields[7]).abs() <= 1e-9);
    assert!((brow[3] - fields[8]).abs() <= 1e-9);
}

#[test]
fn solve_rc_reports_converged_system() {
    let out = rebate(&[
        "solve", "rc", "--theta", "5", "--sigma-eps", "0.5", "--sigma-theta",
        "0.8660254037844386",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["converged"], true);
    assert_eq!(doc["names"][0], "cutoff");
    assert_eq!(doc["schedule"]["form"]["type"], "saturated_linear");
    // ramp width = tau * p with tau = 0.75 at this split
    let sol = doc["solution"].as_array().unwrap();
    let width = sol[2].as_f64().unwrap() - sol[1].as_f64().unwrap();
    assert!((width - 0.75 * 3.9106980304392100066).abs() < 1e-8, "width {width}");
}

#[test]
fn simulate_writes_records_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sched = RewardSchedule::step(1.5, 4.5, 3.92).unwrap();
    let path = write_schedule(dir.path(), &sched);
    let records = dir.path().join("records.csv");
    let out = rebate(&[
        "simulate",
        "--theta",
        "5",
        "--sigma-eps",
        "0.9",
        "--sigma-theta",
        "0.43588989435406735",
        "--schedule",
        &path,
        "--agents",
        "200",
        "--draws",
        "50",
        "--seed",
        "9",
        "--records",
        records.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert_eq!(doc["schema"], 1);
    assert!(doc["mean_profit"].as_f64().unwrap() > 0.0);
    let text = std::fs::read_to_string(&records).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "draw_index,v,a_bar,payout,profit");
    assert_eq!(lines.count(), 50);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("price.txt");
    let out = rebate(&[
        "price", "--theta", "5", "--sigma-eps", "0.6", "--sigma-theta", "0.8", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout_of(&out).is_empty());
    let p: f64 = std::fs::read_to_string(&path).unwrap().trim().parse().unwrap();
    assert!((p - 3.91).abs() < 0.005);
}
