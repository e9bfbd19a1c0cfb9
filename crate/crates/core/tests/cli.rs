use std::path::Path;
use std::process::Command;

use serde_json::Value;
use toeplitz_core::seq::read_seqw;

fn toeplitz(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_toeplitz")).args(args).output().expect("spawn toeplitz")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn construct_small_instance_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = toeplitz(&[
        "construct",
        "--k",
        "2",
        "--source",
        "periodic:1,2,2",
        "--epsilon",
        "3/10",
        "--stages",
        "2",
        "--window",
        "5000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["stages"][0]["l"], 20);
    assert_eq!(r["stages"][1]["l"], 2400);
    assert_eq!(r["stages"][1]["epsilon"], "1/30");
    assert_eq!(r["config"]["epsilon"], "3/10");
    assert_eq!(r["tool_version"], env!("CARGO_PKG_VERSION"));
    let checks = r["checks"].as_array().unwrap();
    for prefix in ["I_1", "I_2", "III_1", "III_2", "II_2[N=5000]"] {
        let c = checks.iter().find(|c| c["name"] == prefix).unwrap_or_else(|| panic!("{prefix} missing"));
        assert_eq!(c["status"], "pass");
    }
}

#[test]
fn zero_epsilon_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = toeplitz(&["construct", "--source", "periodic:1,2,2", "--epsilon", "0/1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
    assert!(!out.exists());
}

#[test]
fn unknown_generator_exits_2() {
    let o = toeplitz(&["entropy", "--source", "morse:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn file_source_outside_domain_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let seqw = dir.path().join("a.seqw");
    std::fs::write(&seqw, "SEQW v1 k=2 start=-5 len=11\n1 2 1 2 1 2 1 2 1 2 1\n").unwrap();
    let src = format!("file:{}", seqw.display());
    let ok = toeplitz(&["entropy", "--source", &src, "--window", "5", "--n-max", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["metrics"]["profile"][2]["count"], 2);
    let bad = toeplitz(&["entropy", "--source", &src, "--window", "100", "--n-max", "3"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let trace = dir.path().join(format!("{name}.trace"));
        let o = toeplitz(&[
            "construct",
            "--source",
            "bernoulli:seed=42",
            "--epsilon",
            "3/10",
            "--window",
            "2400",
            "--out",
            out.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read(&out).unwrap(), std::fs::read(&trace).unwrap())
    };
    let (r1, t1) = run("a.json");
    let (r2, t2) = run("a.json");
    assert_eq!(r1, r2);
    assert_eq!(t1, t2);
    let trace: Value = serde_json::from_slice(&t1).unwrap();
    assert_eq!(trace["epsilon"], "3/10");
    assert_eq!(trace["window"]["start"], -20);
    assert_eq!(trace["window"]["len"], 40);
}

#[test]
fn dump_round_trips_through_file_source() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("b.seqw");
    let o = toeplitz(&[
        "construct",
        "--source",
        "periodic:1,2,2",
        "--epsilon",
        "10",
        "--override-l",
        "1=4",
        "--override-l",
        "2=16",
        "--window",
        "16",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let w = read_seqw(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    let golden = read_seqw(include_str!("data/hand_122_l4_l16.seqw")).unwrap();
    assert_eq!(w.start, -16);
    assert_eq!(&w.symbols[..32], &golden.symbols[..]);

    // the dump is itself a valid source
    let src = format!("file:{}", dump.display());
    let o = toeplitz(&["entropy", "--source", &src, "--window", "16", "--n-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_runs_every_check() {
    let o = toeplitz(&[
        "verify",
        "--source",
        "periodic:1,2,2",
        "--epsilon",
        "10",
        "--override-l",
        "1=4",
        "--override-l",
        "2=16",
        "--window",
        "64",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["c1_2", "c2_2", "c3_2", "toeplitz_coverage", "returning_times_2", "max_gap_2", "density<epsilon"] {
        assert!(names.contains(&n), "{n} missing from {names:?}");
    }
    assert_eq!(v["metrics"]["coverage"]["fraction"], "1/1");
}

#[test]
fn mobius_and_correlate() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("mu.txt");
    let o = toeplitz(&["mobius", "--N", "1000", "--table", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["metrics"]["mertens"]["10"], -1);
    assert_eq!(v["metrics"]["mertens"]["1000"], 2);
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 1000);
    assert_eq!(text.lines().take(6).collect::<Vec<_>>(), vec!["1", "-1", "-1", "0", "-1", "1"]);

    let o = toeplitz(&[
        "correlate",
        "--source",
        "bernoulli:seed=42",
        "--epsilon",
        "3/10",
        "--N",
        "10000",
        "--recode",
        "1=1,2=-1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["metrics"]["correlation"]["10000"].is_number());
    assert_eq!(v["metrics"]["max_abs_xi"], 1.0);

    let o = toeplitz(&["mobius", "--N", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
