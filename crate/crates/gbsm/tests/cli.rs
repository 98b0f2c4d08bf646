use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gbsm::mdp_file::load_mdp;
use gbsm::table::{read_distance_csv, read_reports_csv};
use gbsm_core::metric::gbsm;

fn gbsm_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbsm")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = gbsm_cmd(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn garnet(dir: &Path, name: &str, states: usize, seed: u64) -> String {
    let path = dir.join(name);
    let (states, seed) = (states.to_string(), seed.to_string());
    let path_str = path.to_str().unwrap();
    ok(&[
        "garnet",
        "--states",
        &states,
        "--actions",
        "2",
        "--gamma",
        "0.6",
        "--seed",
        &seed,
        "--out",
        path_str,
    ]);
    path_str.to_string()
}

#[test]
fn gbsm_command_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (garnet(dir.path(), "a.json", 5, 1), garnet(dir.path(), "b.json", 4, 2));
    let out = ok(&["gbsm", &a, &b, "--tol", "1e-7"]);
    let (rows, cols, values) = read_distance_csv(out.stdout.as_slice()).unwrap();
    assert_eq!((rows, cols), (5, 4));
    let d = gbsm(&load_mdp(&a).unwrap(), &load_mdp(&b).unwrap(), 1e-7).unwrap();
    assert_eq!(values, d.as_slice());
}

#[test]
fn single_mdp_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (garnet(dir.path(), "a.json", 4, 1), garnet(dir.path(), "b.json", 4, 2));
    let (rows, _, values) = read_distance_csv(ok(&["bsm", &a]).stdout.as_slice()).unwrap();
    assert_eq!(rows, 4);
    assert!((0..4).all(|s| values[s * 4 + s] <= 1e-6));
    for cmd in ["lax", "onpolicy"] {
        let (rows, cols, _) = read_distance_csv(ok(&[cmd, &a, &b]).stdout.as_slice()).unwrap();
        assert_eq!((rows, cols), (4, 4));
    }
}

#[test]
fn garnet_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = garnet(dir.path(), "a.json", 6, 9);
    let b = garnet(dir.path(), "b.json", 6, 9);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn campaign_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let args = [
        "--states",
        "6",
        "--actions",
        "2",
        "--gammas",
        "0.3:0.5:0.2",
        "--trials",
        "2",
    ];
    for exp in ["transfer", "aggregation", "estimation"] {
        let mut full = vec![format!("exp-{exp}")];
        full.extend(args.iter().map(|s| s.to_string()));
        full.extend(["--out-dir".to_string(), out_dir.to_str().unwrap().to_string()]);
        let full: Vec<&str> = full.iter().map(String::as_str).collect();
        ok(&full);
        let csv = fs::read(out_dir.join(format!("{exp}.csv"))).unwrap();
        let rows = read_reports_csv(csv.as_slice()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.experiment == exp));
        let svg = fs::read_to_string(out_dir.join(format!("{exp}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

        ok(&full);
        assert_eq!(fs::read(out_dir.join(format!("{exp}.csv"))).unwrap(), csv);
    }
    let csv = out_dir.join("transfer.csv");
    let plot = ok(&["plot", csv.to_str().unwrap(), "--gamma", "0.5"]);
    assert!(String::from_utf8(plot.stdout).unwrap().contains("<svg"));
}

#[test]
fn validation_errors_exit_with_one() {
    let out = gbsm_cmd(&["exp-transfer", "--gammas", "0.5:1.0:0.5", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gbsm_cmd(&["gbsm", "/nonexistent/a.json", "/nonexistent/b.json"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"n_states":1,"n_actions":1,"gamma":0.5,"rewards":[[0]],"transitions":[[[0.9]]]}"#,
    )
    .unwrap();
    let out = gbsm_cmd(&["bsm", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant"));

    let csv = dir.path().join("r.csv");
    fs::write(
        &csv,
        "experiment,gamma,trial,seed,ground_truth,gbsm,tol\ntransfer,0.5,0,0,1,2,0.001\n",
    )
    .unwrap();
    let out = gbsm_cmd(&["plot", csv.to_str().unwrap(), "--gamma", "0.7"]);
    assert_eq!(out.status.code(), Some(1));
}
