//! End-to-end checks of the binary: JSON envelope shape, exit codes,
//! flag and environment-variable handling.

use std::process::{Command, Output};

use serde_json::Value;

fn obstrukt(args: &[&str]) -> (Value, Output) {
    let out = Command::new(env!("CARGO_BIN_EXE_obstrukt"))
        .args(args)
        .env_remove("OBSTRUKT_PRECISION")
        .output()
        .expect("binary runs");
    let json: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {:?}", out));
    (json, out)
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn obstruction_verdict_and_envelope() {
    let (json, out) = obstrukt(&["obstruction", "--a=-1", "--poly=-6,0,5,0,-1"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["schema"], 1);
    assert_eq!(json["command"], "obstruction");
    assert_eq!(json["inputs"]["a"], "-1/1");
    assert_eq!(json["verdict"], "Obstructed");
    assert_eq!(json["rank"], 1);
    assert!(json["timingMs"].is_u64());
}

#[test]
fn hilbert_real_symbol() {
    let (json, out) = obstrukt(&["hilbert", "--a=-1", "--b=-1", "--place=real"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["value"], -1);
    assert_eq!(json["inputs"]["place"], "real");
}

#[test]
fn sv_nonsquare_at_five() {
    let (json, out) = obstrukt(&["sv", "--t=5", "--place=5"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["membership"], "N_v");
    let (json, _) = obstrukt(&["sv", "--t=4/9", "--place=5"]);
    assert_eq!(json["membership"], "S_v");
}

#[test]
fn sqclass_reduces_squares() {
    let (json, out) = obstrukt(&["sqclass", "--t=8/18"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["class"], "1");
    let (json, _) = obstrukt(&["sqclass", "--t=-12"]);
    assert_eq!(json["class"], "-3");
}

#[test]
fn local_solve_and_basis() {
    let (json, out) = obstrukt(&["local-solve", "--a=-1", "--poly=-6,0,5,0,-1", "--place=2"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["solvable"], true);
    let (json, out) = obstrukt(&["basis", "--a=-1", "--poly=-6,0,5,0,-1"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["rank"], 1);
}

#[test]
fn family_and_exceptional() {
    let (json, out) = obstrukt(&["family", "--t=1"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["verdict"], "Obstructed");
    let (json, out) = obstrukt(&["exceptional", "--bound=50"]);
    assert_eq!(exit_code(&out), 0);
    assert!(json["classes"].is_array());
    assert!(json["F"].is_array());
}

#[test]
fn scan_lists_obstructed_classes() {
    let (json, out) = obstrukt(&["scan", "--poly=-6,0,5,0,-1", "--bound=30", "--jobs=1"]);
    assert_eq!(exit_code(&out), 0);
    let classes: Vec<&str> = json["obstructedClasses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(classes.contains(&"-1"), "a = -1 missing from {classes:?}");
}

#[test]
fn usage_errors_exit_one() {
    // Unknown flag.
    let (json, out) = obstrukt(&["obstruction", "--a=-1", "--nope=1"]);
    assert_eq!(exit_code(&out), 1);
    assert_eq!(json["error"]["kind"], "usage");
    // Malformed inputs reach the parser and come back as input errors.
    let (json, out) = obstrukt(&["obstruction", "--a=-1", "--poly=bananas"]);
    assert_eq!(exit_code(&out), 1);
    assert_eq!(json["error"]["kind"], "input");
    // a = 0 is not a valid coefficient.
    let (_, out) = obstrukt(&["obstruction", "--a=0", "--poly=-6,0,5,0,-1"]);
    assert_eq!(exit_code(&out), 1);
    // A polynomial with a repeated root is rejected.
    let (_, out) = obstrukt(&["obstruction", "--a=-1", "--poly=1,2,1"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn precision_flag_and_env_agree() {
    let base = obstrukt(&["obstruction", "--a=-1", "--poly=-6,0,5,0,-1"]).0;
    let flagged = obstrukt(&["--precision=2", "obstruction", "--a=-1", "--poly=-6,0,5,0,-1"]).0;
    let out = Command::new(env!("CARGO_BIN_EXE_obstrukt"))
        .args(["obstruction", "--a=-1", "--poly=-6,0,5,0,-1"])
        .env("OBSTRUKT_PRECISION", "2")
        .output()
        .expect("binary runs");
    let env_json: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["verdict", "rank", "perPlace", "aClass"] {
        assert_eq!(base[key], flagged[key], "--precision changed {key}");
        assert_eq!(base[key], env_json[key], "OBSTRUKT_PRECISION changed {key}");
    }
}

#[test]
fn not_obstructed_surface_reports_witness() {
    // a = 2: x = 2 gives P(2) = 2, and y^2 - 2 z^2 = 2 has (2, 1).
    let (json, out) = obstrukt(&["obstruction", "--a=2", "--poly=-6,0,5,0,-1"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(json["verdict"], "NotObstructed");
    assert!(json["witness"].is_object());
}
