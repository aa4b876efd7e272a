//! Subcommand pipelines. Each writes its artifacts into `cfg.out` and returns
//! the run summary; the caller maps a failed summary to exit code 1.

pub mod affine;
pub mod dust;
pub mod newtonian;
pub mod relativistic;
pub mod verify;

use std::path::Path;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::config::{Param, RunConfig};
use crate::output::{plot_script, write_csv, write_json, write_text, Panel};
use crate::report::RunSummary;
use crate::RunError;

pub type RunFn = fn(&RunConfig) -> Result<RunSummary, RunError>;

pub struct Solver {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [Param],
    pub run: RunFn,
}

pub const SOLVERS: &[Solver] = &[
    Solver { name: "lp", about: "Larson–Penston profile (gamma = 1)", params: newtonian::LP_PARAMS, run: newtonian::run_lp },
    Solver { name: "yahil", about: "Yahil profile (1 < gamma < 4/3)", params: newtonian::YAHIL_PARAMS, run: newtonian::run_yahil },
    Solver { name: "rlp", about: "relativistic Larson–Penston profile", params: relativistic::RLP_PARAMS, run: relativistic::run_rlp },
    Solver {
        name: "geodesics",
        about: "simple radial null geodesics of the extended rLP solution",
        params: relativistic::GEODESIC_PARAMS,
        run: relativistic::run_geodesics,
    },
    Solver { name: "dust", about: "pressureless collapse trajectories and collapse map", params: dust::DUST_PARAMS, run: dust::run_dust },
    Solver { name: "neardust", about: "first near-dust corrector and its gain", params: dust::NEARDUST_PARAMS, run: dust::run_neardust },
    Solver {
        name: "affine",
        about: "Sideris matrix flows and isotropic scale dynamics",
        params: affine::AFFINE_PARAMS,
        run: affine::run_affine,
    },
    Solver {
        name: "lane-emden",
        about: "generalized Lane–Emden enthalpy with a vacuum at r = 1",
        params: affine::LANE_EMDEN_PARAMS,
        run: affine::run_lane_emden,
    },
    Solver {
        name: "verify-all",
        about: "acceptance suite over every solver family",
        params: verify::VERIFY_PARAMS,
        run: verify::run_verify_all,
    },
];

pub fn solver(name: &str) -> Option<&'static Solver> {
    SOLVERS.iter().find(|s| s.name == name)
}

pub(crate) fn rng(cfg: &RunConfig) -> Result<StdRng, RunError> {
    Ok(StdRng::seed_from_u64(cfg.get("seed")?))
}

/// Writes a CSV into the run directory and records it in the summary.
pub(crate) fn csv(cfg: &RunConfig, s: &mut RunSummary, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), RunError> {
    write_csv(&cfg.out.join(name), header, rows)?;
    s.file(name);
    Ok(())
}

pub(crate) fn json<T: serde::Serialize>(cfg: &RunConfig, s: &mut RunSummary, name: &str, value: &T) -> Result<(), RunError> {
    write_json(&cfg.out.join(name), value)?;
    s.file(name);
    Ok(())
}

/// Config echo, plot script and the summary itself.
pub(crate) fn finish(cfg: &RunConfig, mut s: RunSummary, panels: &[Panel]) -> Result<RunSummary, RunError> {
    write_text(&cfg.out.join("config.txt"), &cfg.render())?;
    s.file("config.txt");
    if !panels.is_empty() {
        write_text(&cfg.out.join("plot.py"), &plot_script(panels))?;
        s.file("plot.py");
    }
    s.file("summary.json");
    s.files.sort();
    write_json(&cfg.out.join("summary.json"), &s)?;
    Ok(s)
}

pub(crate) fn ensure_dir(path: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(path).map_err(crate::output::io_err(path))?;
    Ok(())
}
