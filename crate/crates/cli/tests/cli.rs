use std::path::Path;

use collapse_lab::cli::run;
use collapse_lab::RunSummary;

fn run_in(args: &[&str]) -> i32 {
    let mut v = vec!["collapse-lab"];
    v.extend_from_slice(args);
    run(v)
}

fn summary(dir: &Path) -> RunSummary {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn lp_writes_profile_with_header() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("lp");
    assert_eq!(run_in(&["lp", "--out", out.to_str().unwrap()]), 0);
    let csv = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(csv.starts_with("y,rho,omega,denominator,residual_rho,residual_omega\n"));
    assert!(!csv.contains('\r'));
    let s = summary(&out);
    assert!(s.all_pass);
    let y = s.headline["y_star_bar"].as_f64().unwrap();
    assert!((y - 2.3411172806).abs() < 1e-8);
    for f in &s.files {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn homogeneous_dust_collapses_at_once() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("dust");
    assert_eq!(run_in(&["dust", "--out", out.to_str().unwrap(), "--homogeneous", "--random_data", "4"]), 0);
    let map = std::fs::read_to_string(out.join("collapse_map.csv")).unwrap();
    let times: Vec<&str> = map.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(times.len() == 41 && times.iter().all(|t| *t == times[0]));
    assert!(summary(&out).diagnostics.iter().any(|d| d.name == "collapse_map_constant" && d.passed));
}

#[test]
fn config_errors_exit_with_two() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("x");
    let o = out.to_str().unwrap();
    assert_eq!(run_in(&["lp", "--out", o, "--no_such_key", "1"]), 2);
    let cfg = t.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_key=1\n").unwrap();
    assert_eq!(run_in(&["lp", "--out", o, "--config", cfg.to_str().unwrap()]), 2);
    assert_eq!(run_in(&["yahil", "--out", o, "--gamma", "1.5"]), 2);
    assert_eq!(run_in(&["rlp", "--out", o, "--eps", "0.2"]), 2);
    assert_eq!(run_in(&["neardust", "--out", o, "--gamma", "1.3", "--n", "10"]), 2);
    assert_eq!(run_in(&["lp", "--out", o, "--tol", "abc"]), 2);
    assert!(!out.join("summary.json").exists());
}

#[test]
fn failed_diagnostics_exit_with_one() {
    // F stays positive at eps = 0.02: no simple radial null geodesics
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("g");
    assert_eq!(run_in(&["geodesics", "--out", out.to_str().unwrap(), "--eps", "0.02"]), 1);
    let s = summary(&out);
    assert!(!s.all_pass);
    assert!(s.failures().iter().any(|d| d.name == "two_roots"));
}

#[test]
fn solver_failure_still_writes_a_summary() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("le");
    assert_eq!(run_in(&["lane-emden", "--out", out.to_str().unwrap(), "--delta", "0", "--vacuum_tol", "1e-30"]), 1);
    let s = summary(&out);
    assert!(!s.all_pass && s.diagnostics[0].name == "pipeline");
}

#[test]
fn config_echo_reproduces_the_run() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    let cfg = t.path().join("in.cfg");
    std::fs::write(&cfg, "# isotropic run\ngamma = 1.3\nt_end=50\ninstances=3\n").unwrap();
    assert_eq!(run_in(&["affine", "--out", a.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--t_end", "40"]), 0);
    let echo = std::fs::read_to_string(a.join("config.txt")).unwrap();
    assert!(echo.contains("gamma=1.3\n") && echo.contains("t_end=40\n"));
    assert_eq!(run_in(&["affine", "--out", b.to_str().unwrap(), "--config", a.join("config.txt").to_str().unwrap()]), 0);
    assert_eq!(collapse_lab::output::compare_trees(&a, &b).unwrap(), None);
}

#[test]
fn json_artifacts_round_trip() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("nd");
    assert_eq!(run_in(&["neardust", "--out", out.to_str().unwrap(), "--tau_min", "1e-3", "--n_r", "5"]), 0);
    for f in ["neardust.json", "summary.json"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(collapse_lab::output::json_string(&v).unwrap(), text, "{f}");
    }
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("neardust.json")).unwrap()).unwrap();
    assert_eq!(v["delta"].as_f64().unwrap(), 1.0 / 6.0);
}

#[test]
fn thread_count_does_not_change_the_output() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    // other tests may read the variable concurrently; it only sizes the pool
    std::env::set_var("COLLAPSE_LAB_THREADS", "1");
    assert_eq!(collapse_lab::thread_count(), Some(1));
    assert_eq!(run_in(&["dust", "--out", a.to_str().unwrap(), "--random_data", "6"]), 0);
    std::env::set_var("COLLAPSE_LAB_THREADS", "4");
    assert_eq!(run_in(&["dust", "--out", b.to_str().unwrap(), "--random_data", "6"]), 0);
    std::env::remove_var("COLLAPSE_LAB_THREADS");
    assert_eq!(collapse_lab::output::compare_trees(&a, &b).unwrap(), None);
}
