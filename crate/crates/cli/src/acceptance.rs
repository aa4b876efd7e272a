//! Acceptance criteria evaluated over the summaries written by `verify-all`,
//! plus the few checks that need solver internals (series coefficients and
//! the grid-point comparison at eps = 0).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use collapse_core::newtonian::{assemble_lp, rhs_newtonian, sonic_taylor, Branch, GammaParams, NewtState, ShootOptions};
use collapse_core::numerics::{integrate_ivp, IvpOptions};
use collapse_core::relativistic::{assemble_rlp, shoot_rel, EpsParams, RelPointSource, RelShootOptions};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::RunSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Value,
    pub requirement: String,
    /// Set when the check is expected to fail; the reason is printed.
    pub known_deviation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    /// No checks were run (e.g. determinism when the rerun is disabled).
    pub skipped: bool,
}

impl Criterion {
    fn new(id: u8, title: &str) -> Self {
        Self { id, title: title.to_string(), checks: Vec::new(), skipped: false }
    }

    pub fn passed(&self) -> bool {
        !self.skipped && self.checks.iter().all(|c| c.passed)
    }

    /// Every check outside the known-deviation list passes.
    pub fn passed_except_known(&self) -> bool {
        self.skipped || self.checks.iter().all(|c| c.passed || c.known_deviation.is_some())
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&mut self, name: &str, passed: bool, measured: impl Serialize, requirement: impl Into<String>) -> &mut Check {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            measured: serde_json::to_value(measured).unwrap_or(Value::Null),
            requirement: requirement.into(),
            known_deviation: None,
        });
        self.checks.last_mut().expect("just pushed")
    }

    pub fn at_most(&mut self, name: &str, measured: f64, bound: f64) -> &mut Check {
        self.check(name, measured <= bound, measured, format!("<= {bound:e}"))
    }

    /// Copies a diagnostic from a run summary; a missing run or diagnostic fails.
    pub fn from_run(&mut self, runs: &Runs, run: &str, diag: &str) {
        let name = format!("{run}.{diag}");
        match runs.get(run).and_then(|s| s.diagnostics.iter().find(|d| d.name == diag)) {
            Some(d) => {
                self.check(&name, d.passed, d.measured.clone(), d.requirement.clone());
            }
            None => {
                let why = runs.get(run).map_or("run missing", |_| "diagnostic missing");
                self.check(&name, false, why, "present in the run summary");
            }
        }
    }

    /// One line: status, id, title and the failing checks.
    pub fn line(&self) -> String {
        let status = if self.skipped {
            "SKIP"
        } else if self.passed() {
            "PASS"
        } else {
            "FAIL"
        };
        let mut s = format!("[{status}] criterion {:>2}: {}", self.id, self.title);
        for c in self.failures() {
            let _ = write!(s, " | {} = {} (need {})", c.name, c.measured, c.requirement);
            if let Some(why) = &c.known_deviation {
                let _ = write!(s, " [known deviation: {why}]");
            }
        }
        s
    }
}

pub type Runs = BTreeMap<String, RunSummary>;

/// Directory, solver and overrides of one sub-run.
pub type RunSpec = (&'static str, &'static str, &'static [(&'static str, &'static str)]);

/// Sub-runs of `verify-all`.
pub const RUNS: &[RunSpec] = &[
    ("lp", "lp", &[]),
    ("yahil-1.1", "yahil", &[("gamma", "1.1")]),
    ("yahil-1.2", "yahil", &[("gamma", "1.2")]),
    ("yahil-1.3", "yahil", &[("gamma", "1.3")]),
    ("rlp", "rlp", &[("eps", "0.01")]),
    ("rlp-eps0", "rlp", &[("eps", "0"), ("extension", "false")]),
    ("geodesics", "geodesics", &[("eps", "0.01")]),
    ("dust", "dust", &[]),
    ("neardust", "neardust", &[("gamma", "1.2"), ("n", "20")]),
    ("affine", "affine", &[]),
    ("lane-emden-0", "lane-emden", &[("delta", "0")]),
    ("lane-emden-1", "lane-emden", &[("delta", "1")]),
];

pub const LP_BAND: (f64, f64) = (2.35, 2.47);
pub const LP_BAND_REASON: &str =
    "the gamma = 1 dip/no-dip transition sits at 2.3411, stable under series order, trust radius and tolerances";
pub const OMEGA1_SIGN_REASON: &str =
    "the order-1 equations require omega_1 = +(1/y*)(1 - 2/y*); the criterion expects the opposite sign";

fn headline_f64(runs: &Runs, run: &str, key: &str) -> f64 {
    runs.get(run).and_then(|s| s.headline.get(key)).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn criterion_1(runs: &Runs, lp_under_30s: bool) -> Criterion {
    let mut c = Criterion::new(1, "LP sonic point in [2.35, 2.47]");
    let y = headline_f64(runs, "lp", "y_star_bar");
    c.check("lp.y_star_bar", y >= LP_BAND.0 && y <= LP_BAND.1, y, format!("in [{}, {}]", LP_BAND.0, LP_BAND.1)).known_deviation =
        Some(LP_BAND_REASON.into());
    c.check("lp.runtime", lp_under_30s, if lp_under_30s { "< 30 s" } else { ">= 30 s" }, "< 30 s");
    c
}

fn criterion_2(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(2, "LP boundary data");
    for d in ["omega_origin_error", "rho_origin_positive", "omega_far_error", "tail_exponent_relative_error"] {
        c.from_run(runs, "lp", d);
    }
    c
}

fn criterion_3(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(3, "Yahil profiles at gamma 1.1, 6/5, 1.3");
    for run in ["yahil-1.1", "yahil-1.2", "yahil-1.3"] {
        for d in ["tail_exponent_relative_error", "omega_origin_error", "single_sonic_point", "denominator_sign_pattern"] {
            c.from_run(runs, run, d);
        }
    }
    c
}

/// Type-1 coefficients, growth bound and series vs continued integration.
fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "sonic series at y* = 2.5");
    let p = GammaParams::isothermal();
    let y = 2.5;
    let e = match sonic_taylor(y, Branch::Type1, p, 40) {
        Ok(e) => e,
        Err(err) => {
            c.check("expansion", false, err.to_string(), "series computed");
            return c;
        }
    };
    c.check("rho_0", e.rho[0] == 1.0 / y, e.rho[0], "= 1/y*");
    c.check("omega_0", e.omega[0] == 1.0 / y, e.omega[0], "= 1/y*");
    let rho1 = -1.0 / (y * y);
    c.check("rho_1", (e.rho[1] - rho1).abs() <= f64::EPSILON * rho1.abs(), e.rho[1], format!("= -1/y*^2 = {rho1}"));
    let omega1 = -(1.0 / y) * (1.0 - 2.0 / y);
    c.check("omega_1_magnitude", (e.omega[1].abs() - omega1.abs()).abs() <= f64::EPSILON, e.omega[1].abs(), format!("= {}", omega1.abs()));
    c.check("omega_1_sign", e.omega[1].signum() == omega1.signum(), e.omega[1], format!("= {omega1}")).known_deviation =
        Some(OMEGA1_SIGN_REASON.into());
    let k = e.growth_constant;
    let worst = (2..=40)
        .map(|n| {
            let bound = k.powi(n as i32) / (n * n) as f64;
            (e.rho[n].abs() / bound).max(e.omega[n].abs() / bound)
        })
        .fold(0.0, f64::max);
    c.check("growth_bound", k.is_finite() && worst <= 1.0 + 1e-12, json!({ "C": k, "max_ratio": worst }), "|c_N| <= C^N / N^2, N = 2..40");
    let d = e.delta_trust;
    let f = |y: f64, s: &[f64; 2]| rhs_newtonian(NewtState { y, rho: s[0], omega: s[1] }, p).unwrap_or([f64::NAN; 2]);
    let mut gap = 0.0f64;
    for (from, to) in [(y - d, y - d / 2.0), (y + d, y + d / 2.0)] {
        let s = e.eval_unchecked(from);
        match integrate_ivp(f, from, [s.rho, s.omega], to, &IvpOptions::with_tol(1e-13, 1e-15), &[]) {
            Ok(r) => {
                let t = e.eval_unchecked(to);
                let u = r.y_final();
                gap = gap.max((u[0] - t.rho).abs()).max((u[1] - t.omega).abs());
            }
            Err(_) => gap = f64::INFINITY,
        }
    }
    c.at_most("series_vs_integration", gap, 1e-8);
    c
}

fn criterion_5(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(5, "explicit-solution oracles");
    for run in ["lp", "rlp"] {
        c.from_run(runs, run, "friedmann_residual");
        c.from_run(runs, run, "far_field_residual");
    }
    c
}

/// eps = 0 against gamma = 1 grid point by grid point, eps = 1e-3 sonic point,
/// and the factorization residual of every relativistic run.
fn criterion_6(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(6, "relativistic reduction");
    let ropts = RelShootOptions::default();
    let newt = assemble_lp(GammaParams::isothermal(), &ShootOptions::default(), 1e4);
    let rel = EpsParams::new(0.0).map_err(|e| e.to_string()).and_then(|p| assemble_rlp(p, &ropts, 1e4).map_err(|e| e.to_string()));
    match (&newt, &rel) {
        (Ok(newt), Ok(rel)) => {
            c.at_most("x_star_eps0", (rel.diagnostics.x_star - newt.shoot.y_star_bar).abs(), 1e-12);
            // centre-mode amplification makes points below 0.025 step-sequence dependent
            let tol = 1e5 * ropts.rtol;
            let mut worst = 0.0f64;
            let mut compared = 0usize;
            for p in &rel.profile.points {
                let other = match p.source {
                    RelPointSource::Left => newt.shoot.left.eval(p.x),
                    RelPointSource::Right => newt.right.eval(p.x),
                    RelPointSource::Bridge => continue,
                };
                let Some(s) = other.filter(|_| p.x >= 0.025) else { continue };
                worst = worst.max((p.d - s[0]).abs() / s[0]).max((p.w - s[1]).abs() / s[1].abs().max(1.0));
                compared += 1;
            }
            c.check(
                "profile_eps0",
                worst <= tol && compared > 100,
                json!({ "max_rel_diff": worst, "points": compared }),
                format!("<= {tol:e} on > 100 points"),
            );
        }
        _ => {
            let why = [newt.err().map(|e| e.to_string()), rel.err()].into_iter().flatten().collect::<Vec<_>>().join("; ");
            c.check("profile_eps0", false, why, "both pipelines complete");
        }
    }
    let small = EpsParams::new(1e-3).map_err(|e| e.to_string()).and_then(|p| shoot_rel(p, &ropts).map_err(|e| e.to_string()));
    let y_bar = headline_f64(runs, "lp", "y_star_bar");
    match small {
        Ok(s) => {
            c.at_most("x_star_eps1e-3", (s.x_star_bar - y_bar).abs(), 0.05);
        }
        Err(e) => {
            c.check("x_star_eps1e-3", false, e, "shoot completes");
        }
    }
    for run in ["rlp", "rlp-eps0"] {
        c.from_run(runs, run, "factorization_residual");
    }
    c
}

fn criterion_7(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(7, "relativistic geodesics at eps = 0.01");
    for d in ["divergent_limits", "negative_dip", "two_roots", "finite_y_ms", "joint_divergence", "sandwich_d_over_w"] {
        c.from_run(runs, "geodesics", d);
    }
    c
}

fn criterion_8(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(8, "dust");
    for d in ["explicit_solution_error", "event_vs_quadrature_time", "blowup_exponent_error", "energy_drift", "collapse_map_monotone"] {
        c.from_run(runs, "dust", d);
    }
    c
}

fn criterion_9(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(9, "near-dust gain at (1.2, 20)");
    let delta = headline_f64(runs, "neardust", "delta");
    c.check("neardust.delta", delta == 1.0 / 6.0, delta, "= 1/6 exactly");
    c.from_run(runs, "neardust", "gain_ratio_bounded");
    c.from_run(runs, "neardust", "homogeneous_residual");
    c
}

fn criterion_10(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(10, "affine flows and Lane–Emden vacuum");
    c.from_run(runs, "affine", "sideris_batch_energy_drift");
    c.from_run(runs, "affine", "radial_rate_change");
    for run in ["lane-emden-0", "lane-emden-1"] {
        for d in ["vacuum", "outward_slope_negative", "physical_vacuum"] {
            c.from_run(runs, run, d);
        }
    }
    c
}

/// Criterion 11 from a tree comparison: `None` = not run, `Some(None)` = identical.
pub fn criterion_11(diff: Option<Option<String>>) -> Criterion {
    let mut c = Criterion::new(11, "determinism");
    match diff {
        None => c.skipped = true,
        Some(d) => {
            let same = d.is_none();
            c.check("artifact_trees", same, d.unwrap_or_else(|| "identical".into()), "byte-identical reruns");
        }
    }
    c
}

/// Criteria 1–10.
pub fn evaluate(runs: &Runs, lp_under_30s: bool) -> Vec<Criterion> {
    vec![
        criterion_1(runs, lp_under_30s),
        criterion_2(runs),
        criterion_3(runs),
        criterion_4(),
        criterion_5(runs),
        criterion_6(runs),
        criterion_7(runs),
        criterion_8(runs),
        criterion_9(runs),
        criterion_10(runs),
    ]
}

pub fn report_text(criteria: &[Criterion]) -> String {
    let mut s = String::new();
    for c in criteria {
        s.push_str(&c.line());
        s.push('\n');
    }
    s
}
