use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{ensure_dir, finish, json, solver};
use crate::acceptance::{criterion_11, evaluate, report_text, Criterion, Runs, RUNS};
use crate::config::{param, Param, RunConfig};
use crate::output::{compare_trees, write_text};
use crate::report::RunSummary;
use crate::RunError;

pub const VERIFY_PARAMS: &[Param] =
    &[param("determinism_check", "true", "rerun every solver into a scratch directory and compare the trees")];

/// Runs every sub-run into `root/<name>`. Solver failures still leave a
/// summary behind; config and output errors abort.
pub fn run_all(root: &Path) -> Result<(Runs, Duration), RunError> {
    let mut runs = Runs::new();
    let mut lp_time = Duration::ZERO;
    for &(dir, name, overrides) in RUNS {
        let sv = solver(name).ok_or_else(|| RunError::Solver(format!("unknown solver {name}")))?;
        let out = root.join(dir);
        ensure_dir(&out)?;
        let ov: Vec<(String, String)> = overrides.iter().map(|&(k, v)| (k.to_string(), v.to_string())).collect();
        let cfg = RunConfig::build(name, sv.params, None, &ov, out)?;
        let start = Instant::now();
        let summary = match (sv.run)(&cfg) {
            Ok(s) => s,
            Err(RunError::Solver(msg)) => failed_summary(&cfg, name, &msg)?,
            Err(e) => return Err(e),
        };
        if dir == "lp" {
            lp_time = start.elapsed();
        }
        runs.insert(dir.to_string(), summary);
    }
    Ok((runs, lp_time))
}

pub(crate) fn failed_summary(cfg: &RunConfig, name: &str, msg: &str) -> Result<RunSummary, RunError> {
    let mut s = RunSummary::new(name);
    s.check("pipeline", false, msg, "completes");
    finish(cfg, s, &[])
}

#[derive(Serialize)]
struct AcceptanceFile<'a> {
    criteria: &'a [Criterion],
    all_pass: bool,
}

pub fn run_verify_all(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let determinism: bool = cfg.get("determinism_check")?;
    ensure_dir(&cfg.out)?;
    let (runs, lp_time) = run_all(&cfg.out)?;
    let mut criteria = evaluate(&runs, lp_time < Duration::from_secs(30));
    let diff = if determinism {
        let scratch = scratch_dir();
        let result = run_all(&scratch).and_then(|_| {
            let mut first = None;
            for &(dir, _, _) in RUNS {
                if let Some(d) = compare_trees(&cfg.out.join(dir), &scratch.join(dir))? {
                    first = Some(format!("{dir}: {d}"));
                    break;
                }
            }
            Ok(first)
        });
        let _ = std::fs::remove_dir_all(&scratch);
        Some(result?)
    } else {
        None
    };
    criteria.push(criterion_11(diff));

    let mut s = RunSummary::new("verify-all");
    for c in &criteria {
        if !c.skipped {
            s.check(&format!("criterion_{}", c.id), c.passed(), c.failures().iter().map(|f| &f.name).collect::<Vec<_>>(), c.title.clone());
        }
    }
    s.headline("criteria_passed", criteria.iter().filter(|c| c.passed()).count());
    s.headline("criteria_skipped", criteria.iter().filter(|c| c.skipped).count());
    s.headline("criteria_total", criteria.len());
    json(cfg, &mut s, "acceptance.json", &AcceptanceFile { criteria: &criteria, all_pass: criteria.iter().all(Criterion::passed) })?;
    write_text(&cfg.out.join("acceptance.txt"), &report_text(&criteria))?;
    s.file("acceptance.txt");
    for &(dir, _, _) in RUNS {
        s.file(&format!("{dir}/"));
    }
    finish(cfg, s, &[])
}

fn scratch_dir() -> PathBuf {
    std::env::temp_dir().join(format!("collapse-lab-verify-{}", std::process::id()))
}

/// Reads back the acceptance file written by [`run_verify_all`].
pub fn read_acceptance(out: &Path) -> Result<Vec<Criterion>, RunError> {
    let path = out.join("acceptance.json");
    let text = std::fs::read_to_string(&path).map_err(crate::output::io_err(&path))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(RunError::solver)?;
    serde_json::from_value(v["criteria"].clone()).map_err(RunError::solver)
}
