use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const CHSH: &str = "1,1\n1,-1\n";
const VERTESI_PAL: &str = "\
1,1,1,1
-1,1,1,1
1,-1,1,1
-1,-1,1,1
1,1,-1,1
-1,1,-1,1
1,-1,-1,1
-1,-1,-1,1
";
const GENERIC: &str = "1,2,3\n0.3,-1,2\n4,0.1,-1\n";

fn bellbound(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_bellbound"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn bound_on_chsh() {
    let out = bellbound(&["bound", "-"], CHSH);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "bound");
    assert_eq!(v["classical"].as_f64(), Some(2.0));
    assert_eq!(v["sv_bound"].to_string(), "2.82842712474619");
    assert_eq!(v["tight"], true);
}

#[test]
fn classical_on_identity() {
    let out = bellbound(&["classical", "-"], "1,0\n0,1\n");
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["classical"].as_f64(), Some(2.0));
}

#[test]
fn witness_on_vertesi_pal() {
    let out = bellbound(&["witness", "--dmax", "4", "--observed", "16", "-"], VERTESI_PAL);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let t: Vec<f64> = v["thresholds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["value"].as_f64().unwrap())
        .collect();
    assert_eq!(t.len(), 4);
    assert!((t[0] - 12.0).abs() < 1e-9);
    assert!((t[3] - 16.0).abs() < 1e-4);
    assert!(t[2] < 16.0 - 0.01);
    assert_eq!(v["classification"]["dimension"], 4);
    assert_eq!(v["sv_bound"].as_f64(), Some(16.0));
}

#[test]
fn tight_directions_realize() {
    let v = json(&bellbound(&["tight", "-"], VERTESI_PAL));
    assert_eq!(v["tight"], true);
    assert_eq!(v["alpha"]["rank_dprime"], 4);

    let v = json(&bellbound(&["directions", "-"], CHSH));
    assert_eq!(v["strategy"]["dimension"], 2);
    assert!((v["value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);

    let out = bellbound(&["realize", "-"], CHSH);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["bell_value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["local_dimension"], 2);
    assert_eq!(v["expected"].as_array().unwrap().len(), 2);
}

#[test]
fn seesaw_defaults_to_m1_plus_m2() {
    let v = json(&bellbound(&["seesaw", "-"], CHSH));
    assert_eq!(v["dimension"], 4);
    assert_eq!(v["config"]["seed"], 42);
    assert_eq!(v["config"]["restarts"], 32);
    let v = json(&bellbound(&["seesaw", "--dim", "1", "-"], CHSH));
    assert_eq!(v["value"].as_f64(), Some(2.0));
}

#[test]
fn exit_codes() {
    // not certified: report on stdout, status 3
    for cmd in ["tight", "directions", "realize"] {
        let out = bellbound(&[cmd, "-"], GENERIC);
        assert_eq!(code(&out), 3, "{cmd}");
        assert_eq!(json(&out)["tight"], false);
        assert!(String::from_utf8_lossy(&out.stderr).contains("No solution alpha found"));
    }
    // an uncertified bound is still a successful bound computation
    assert_eq!(code(&bellbound(&["bound", "-"], GENERIC)), 0);

    // validation errors
    assert_eq!(code(&bellbound(&["bound", "-"], "1,2\n3\n")), 1);
    assert_eq!(code(&bellbound(&["bound", "-"], "0,0\n0,0\n")), 1);
    assert_eq!(code(&bellbound(&["seesaw", "--dim", "0", "-"], CHSH)), 1);
    assert_eq!(code(&bellbound(&["bound", "--tol", "-1", "-"], CHSH)), 1);
    assert_eq!(code(&bellbound(&["bound", "--restarts", "0", "-"], CHSH)), 1);
    assert_eq!(code(&bellbound(&["bound", "/nonexistent/matrix.csv"], "")), 1);
    assert_eq!(code(&bellbound(&["frobnicate"], "")), 1);
    assert_eq!(code(&bellbound(&["classical", "--output", "csv", "-"], CHSH)), 1);
    let out = bellbound(&["bound", "-"], "1,1\n1,oops\n");
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn json_round_trip_gives_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("vp.csv");
    let json_path = dir.path().join("vp.json");
    std::fs::write(&csv_path, VERTESI_PAL).unwrap();
    let g = bellbound::input::parse_csv(VERTESI_PAL).unwrap();
    std::fs::write(&json_path, bellbound::input::to_json(&g)).unwrap();

    for cmd in ["bound", "tight", "witness"] {
        let a = bellbound(&[cmd, csv_path.to_str().unwrap()], "");
        let b = bellbound(&[cmd, json_path.to_str().unwrap()], "");
        let c = bellbound(&[cmd, "--format", "json", "-"], &bellbound::input::to_json(&g));
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{cmd}");
        assert_eq!(a.stdout, c.stdout, "{cmd}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["bound", "-"][..],
        &["seesaw", "--dim", "3", "--seed", "7", "-"],
        &["witness", "--dmax", "3", "-"],
    ] {
        let a = bellbound(args, GENERIC);
        let b = bellbound(args, GENERIC);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let a = bellbound(&["rotate-scan", "--samples", "13", "--output", "csv"], "");
    let b = bellbound(&["rotate-scan", "--samples", "13", "--output", "csv"], "");
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn rotate_scan_outputs() {
    let out = bellbound(&["rotate-scan", "--samples", "5", "--output", "csv"], "");
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phi_rad,classical,quantum,ratio");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1], "0,3.41421356237,4,1.17157287525");

    let v = json(&bellbound(
        &[
            "rotate-scan",
            "--phi-min",
            "0",
            "--phi-max",
            "1.5707963267948966",
            "--samples",
            "3",
        ],
        "",
    ));
    assert_eq!(v["samples"].as_array().unwrap().len(), 3);
    assert!((v["max"]["ratio"].as_f64().unwrap() - (4.0 - 2.0 * 2f64.sqrt())).abs() < 1e-6);

    assert_eq!(
        code(&bellbound(&["rotate-scan", "--phi-min", "2", "--phi-max", "1"], "")),
        1
    );
}
