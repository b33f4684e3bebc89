use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(rel: &str) -> String {
    let p: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    p.to_string_lossy().into_owned()
}

fn latc(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_latc")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn check_prints_every_definition() {
    let (code, out) = latc(&["check", &fixture("programs/two_node.lat")]);
    assert_eq!(code, 0);
    assert_eq!(out, "x : (Nat, 5, 0)\nmain : (Nat, 5, 200)\n");
}

#[test]
fn explicit_topology_overrides_comment() {
    let (code, out) = latc(&[
        "check",
        &fixture("programs/two_node.lat"),
        "--topology",
        &fixture("topologies/asymmetric.topo"),
    ]);
    assert_eq!(code, 0);
    assert!(out.ends_with("main : (Nat, 5, 100)\n"), "{out}");
}

#[test]
fn ill_typed_program_reports_one_line() {
    let (code, out) = latc(&["check", &fixture("rejected/bound_too_low.lat")]);
    assert_eq!(code, 1);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("ERROR "));
    assert!(out.contains(":2:1 [UnprovenBound]"));
    assert!(out.trim_end().ends_with("unproved: 200 <= 100"));
}

#[test]
fn missing_files_are_usage_errors() {
    assert_eq!(latc(&["check", &fixture("programs/two_node.lat"), "--topology", "/nonexistent.topo"]).0, 3);
    assert_eq!(latc(&["check", "/nonexistent.lat"]).0, 3);
    assert_eq!(latc(&["frobnicate"]).0, 3);
    assert_eq!(latc(&["run", &fixture("programs/unit.lat"), "--strategy", "sideways"]).0, 3);
    assert_eq!(latc(&["--help"]).0, 0);
}

#[test]
fn run_reports_value_and_latency() {
    let (code, out) = latc(&["run", &fixture("programs/two_node.lat")]);
    assert_eq!(code, 0);
    assert_eq!(out, "value = 5\nlatency = 200\n");
}

#[test]
fn run_trace_has_one_line_per_step() {
    let (_, out) = latc(&["run", &fixture("programs/two_node.lat"), "--trace"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines, ["2 {s1} 0 get", "2 {s1} 0 unfold", "1 {c1} 200 return", "value = 5", "latency = 200"]);
}

#[test]
fn run_strategies() {
    for s in ["leftmost", "seeded:3", "enumerate"] {
        let (code, out) = latc(&["run", &fixture("programs/get_list.lat"), "--strategy", s]);
        assert_eq!(code, 0, "{s}");
        assert!(out.ends_with("latency = 400\n"), "{s}: {out}");
    }
}

#[test]
fn zero_fuel_exhausts() {
    let (code, out) = latc(&["run", &fixture("programs/succ.lat"), "--fuel", "0"]);
    assert_eq!(code, 1);
    assert!(out.contains("fuel exhausted"));
}

#[test]
fn verify_outcomes() {
    let two = fixture("programs/two_node.lat");
    assert_eq!(latc(&["verify", &two]), (0, "OK max_lR=200 bound=200\n".to_string()));
    let (code, out) = latc(&["verify", &two, "--inject-bound-delta", "-1"]);
    assert_eq!(code, 2);
    assert!(out.starts_with("VIOLATION lR=200 bound=199"));
    assert!(out.contains("1 {c1} 200 return"));
    let (code, out) = latc(&["verify", &fixture("programs/get_list.lat"), "--cap", "1"]);
    assert_eq!(code, 2);
    assert!(out.starts_with("INCONCLUSIVE"));
}

#[test]
fn fuzz_summary_and_determinism() {
    assert_eq!(latc(&["fuzz", "--count", "0"]), (0, "0 ok, 0 violations\n".to_string()));
    let a = latc(&["fuzz", "--count", "25", "--seed", "11", "--verbose"]);
    let b = latc(&["fuzz", "--count", "25", "--seed", "11", "--verbose"]);
    assert_eq!(a, b);
    assert_eq!(a.0, 0);
    assert!(a.1.ends_with("25 ok, 0 violations\n"));
    assert_eq!(a.1.lines().filter(|l| l.starts_with('#')).count(), 25);
}

#[test]
fn fuzz_with_fixed_topology() {
    let (code, out) = latc(&["fuzz", "--count", "20", "--seed", "1", "--topology", &fixture("topologies/three_tier.topo")]);
    assert_eq!(code, 0);
    assert_eq!(out, "20 ok, 0 violations\n");
}
