//! Runs `verify-all` twice, prints one line per criterion and fails on any
//! criterion outside the known-deviation list.

use collapse_lab::acceptance::{criterion_11, Criterion};
use collapse_lab::commands::verify::read_acceptance;
use collapse_lab::output::compare_trees;

fn verify_into(dir: &std::path::Path) -> Vec<Criterion> {
    let out = dir.join("out");
    let code = collapse_lab::cli::run(["collapse-lab", "verify-all", "--out", out.to_str().unwrap(), "--determinism_check", "false"]);
    // criterion 1 fails by construction, so the run exits 1
    assert!(code == 0 || code == 1, "verify-all exited with {code}");
    read_acceptance(&out).expect("acceptance.json")
}

fn main() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut criteria = verify_into(a.path());
    verify_into(b.path());
    let diff = compare_trees(&a.path().join("out"), &b.path().join("out")).unwrap();
    criteria.retain(|c| c.id != 11);
    criteria.push(criterion_11(Some(diff)));

    let mut unexpected = Vec::new();
    for c in &criteria {
        println!("{}", c.line());
        if !c.passed_except_known() {
            unexpected.push(c.id);
        }
    }
    let known: Vec<u8> = criteria.iter().filter(|c| !c.passed() && c.passed_except_known()).map(|c| c.id).collect();
    println!("known deviations (not asserted): criteria {known:?}");
    assert_eq!(criteria.len(), 11);
    assert!(unexpected.is_empty(), "criteria failing outside the known-deviation list: {unexpected:?}");
}
