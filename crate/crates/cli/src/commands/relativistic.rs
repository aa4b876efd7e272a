use collapse_core::relativistic::*;
use serde::Serialize;

use rand::Rng;

use super::{csv, finish, json, rng};
use crate::config::{param, Param, RunConfig};
use crate::output::Panel;
use crate::report::RunSummary;
use crate::RunError;

macro_rules! rel_params {
    ($($extra:expr),*) => {
        &[
            param("eps", "0.01", "sound speed squared, 0 <= eps <= 0.05"),
            param("window", "auto", "sonic window lo,hi (auto = [2 + 10 eps, 3 - 10 eps])"),
            param("tol", "1e-12", "bisection width on the sonic point"),
            param("scan", "24", "scan intervals over the window"),
            param("order", "40", "sonic series order"),
            param("delta_frac", "0.05", "series trust radius as a fraction of x*"),
            param("x_min", "1e-3", "left integration end"),
            param("x_max", "1e4", "right integration end"),
            param("rtol", "1e-12", "integrator relative tolerance"),
            param("atol", "1e-14", "integrator absolute tolerance"),
            param("fit_x_min", "100", "profile points beyond this enter the Y = 0 fit"),
            param("tail_degree", "3", "polynomial degree of the Y = 0 series"),
            param("start_offset", "2e-4", "extension starts at Y = -start_offset"),
            param("samples", "100", "random points for the explicit-solution checks"),
            param("seed", "1", "seed for the random points"),
            $($extra,)*
        ]
    };
}

pub const RLP_PARAMS: &[Param] = rel_params!(param("extension", "true", "continue past Y = 0 to the massive singularity"));
pub const GEODESIC_PARAMS: &[Param] = rel_params!(param("geodesic_samples", "400", "F samples between the extension ends"));

fn eps_params(cfg: &RunConfig) -> Result<EpsParams, RunError> {
    let eps: f64 = cfg.get("eps")?;
    EpsParams::new(eps).map_err(|e| cfg.invalid("eps", e.to_string()).into())
}

fn shoot_options(cfg: &RunConfig) -> Result<RelShootOptions, RunError> {
    Ok(RelShootOptions {
        window: cfg.window("window")?,
        tol: cfg.get("tol")?,
        scan: cfg.get("scan")?,
        order: cfg.get("order")?,
        delta_frac: cfg.get("delta_frac")?,
        x_min: cfg.get("x_min")?,
        rtol: cfg.get("rtol")?,
        atol: cfg.get("atol")?,
        ..RelShootOptions::default()
    })
}

fn extension_options(cfg: &RunConfig) -> Result<ExtensionOptions, RunError> {
    Ok(ExtensionOptions {
        fit_x_min: cfg.get("fit_x_min")?,
        degree: cfg.get("tail_degree")?,
        start_offset: cfg.get("start_offset")?,
        ..ExtensionOptions::default()
    })
}

/// The JSON exported per run.
#[derive(Serialize)]
struct RlpReport<'a> {
    eps: f64,
    x_star: f64,
    roots: Vec<f64>,
    #[serde(rename = "Y_ms")]
    y_ms: Option<f64>,
    diagnostics: &'a RlpDiagnostics,
}

fn profile_rows(sol: &RlpSolution) -> Vec<Vec<f64>> {
    sol.profile.points.iter().map(|p| vec![p.x, p.y, p.d, p.w, p.b, p.j, p.h, p.f, p.mu, p.lambda, p.constraint_residual]).collect()
}

const PROFILE_HEADER: [&str; 11] = ["x", "y", "D", "W", "B", "J", "H", "f", "mu", "lambda", "constraint_residual"];

fn extension_rows(ext: &UpperExtension) -> Vec<Vec<f64>> {
    ext.points.iter().map(|p| vec![p.big_y, p.y, p.d, p.w, p.chi, p.s, ext.params.eps() / p.s - 1.0]).collect()
}

const EXTENSION_HEADER: [&str; 7] = ["Y", "y", "d", "w", "chi", "S", "F"];

/// Friedmann and far-field states must be exact solutions of the Eulerian system.
fn explicit_checks(cfg: &RunConfig, s: &mut RunSummary, p: EpsParams) -> Result<(), RunError> {
    let samples: usize = cfg.get("samples")?;
    let mut rng = rng(cfg)?;
    let (mut fried, mut far) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x = rng.gen_range(0.01..1.5);
        let (d, w) = p.friedmann();
        match rhs_rel_eulerian(EulerianStateRel { x, d, w }, p) {
            Ok(r) => fried = fried.max(r[0].abs() / d).max(r[1].abs() / w),
            Err(_) => fried = f64::INFINITY,
        }
        let x = rng.gen_range(5.0..1e3);
        let (d, w) = p.far_field(x);
        let exact = p.tail_exponent() * d / x;
        match rhs_rel_eulerian(EulerianStateRel { x, d, w }, p) {
            Ok(r) => far = far.max((r[0] - exact).abs() / exact.abs()).max(r[1].abs() * x),
            Err(_) => far = f64::INFINITY,
        }
    }
    s.at_most("friedmann_residual", fried, 1e-12);
    s.at_most("far_field_residual", far, 1e-12);
    Ok(())
}

fn profile_checks(s: &mut RunSummary, sol: &RlpSolution) {
    let d = &sol.diagnostics;
    s.headline("eps", d.eps);
    s.headline("x_star", d.x_star);
    s.headline("d_origin", d.d_origin);
    s.headline("w_origin", d.w_origin);
    s.headline("tail_exponent", d.tail_exponent);
    s.headline("mu_exponent", d.mu_exponent);
    s.at_most("factorization_residual", d.max_factorization_residual, 1e-13);
    s.check("sandwich_left", d.sandwich_left.is_none(), d.sandwich_left, "f > 0 and xW < xD at every x < x*");
    let right = d.sandwich_right.unwrap_or(f64::INFINITY);
    s.check("sandwich_right_interval", right > d.x_star, right, "xW > xD > J on a non-empty interval (x*, x1)");
    s.at_most("constraint_residual", d.max_constraint_residual, 1e-6);
    s.at_most("sonic_metric_residual", d.sonic_metric_residual.abs(), 1e-12);
    s.check("single_sonic_point", d.sonic_points == 1, d.sonic_points, "== 1");
    s.check("denominator_sign_pattern", d.denominator_pattern, d.denominator_pattern, "+ left of x*, - right of x*");
    s.at_most("w_origin_error", (d.w_origin - 1.0 / 3.0).abs(), 2e-3);
    s.at_most("w_far_error", (d.w_at_x_max - 1.0).abs(), 1e-3);
    s.at_most("tail_exponent_relative_error", ((d.tail_exponent - d.tail_exponent_target) / d.tail_exponent_target).abs(), 1e-2);
    s.at_most("series_tail", d.series_tail, 1e-12);
}

fn extension_checks(s: &mut RunSummary, ext: &UpperExtension) {
    s.headline("Y_ms", ext.big_y_ms);
    s.headline("y_ms", ext.y_ms);
    s.headline("divergence_rate", ext.divergence_rate);
    s.headline("sandwich_c", ext.sandwich_c);
    s.headline("tail_series_misfit", ext.tail.misfit);
    s.check("finite_y_ms", ext.big_y_ms.is_finite() && ext.big_y_ms < 0.0, ext.big_y_ms, "finite and negative");
    let [d, w, chi] = ext.final_state;
    s.check("joint_divergence", d > 1e6 && w >= 1e8 && 1.0 / chi > 1e5, [d, w, 1.0 / chi], "d > 1e6, w >= 1e8, 1/chi > 1e5 at the end");
    s.check(
        "sandwich_d_over_w",
        ext.sandwich_c > 0.0 && ext.sandwich_max < 1.0,
        [ext.sandwich_c, ext.sandwich_max],
        "c <= d/w < 1 with c > 0",
    );
}

pub fn run_rlp(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let params = eps_params(cfg)?;
    let opts = shoot_options(cfg)?;
    let with_ext: bool = cfg.get("extension")?;
    let sol = assemble_rlp(params, &opts, cfg.get("x_max")?).map_err(RunError::solver)?;
    let mut s = RunSummary::new("rlp");
    profile_checks(&mut s, &sol);
    explicit_checks(cfg, &mut s, params)?;
    csv(cfg, &mut s, "profile.csv", &PROFILE_HEADER, &profile_rows(&sol))?;
    let mut roots = Vec::new();
    let mut y_ms = None;
    if with_ext {
        let ext = extend_upper(&sol, &extension_options(cfg)?).map_err(RunError::solver)?;
        extension_checks(&mut s, &ext);
        y_ms = Some(ext.big_y_ms);
        if let Ok(r) = rng_roots(&ext, &GeodesicOptions::default()) {
            roots = r.roots;
        }
        s.headline("roots", &roots);
        csv(cfg, &mut s, "extension.csv", &EXTENSION_HEADER, &extension_rows(&ext))?;
    }
    let report = RlpReport { eps: params.eps(), x_star: sol.diagnostics.x_star, roots, y_ms, diagnostics: &sol.diagnostics };
    json(cfg, &mut s, "rlp.json", &report)?;
    let mut panels = vec![
        Panel { csv: "profile.csv", x: "x", ys: &["D", "W"], loglog: false, title: "Eulerian profile" },
        Panel { csv: "profile.csv", x: "x", ys: &["D", "constraint_residual"], loglog: true, title: "tail and constraint" },
    ];
    if with_ext {
        panels.push(Panel { csv: "extension.csv", x: "Y", ys: &["d", "w", "chi"], loglog: false, title: "extension" });
    }
    finish(cfg, s, &panels)
}

pub fn run_geodesics(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let params = eps_params(cfg)?;
    let sol = assemble_rlp(params, &shoot_options(cfg)?, cfg.get("x_max")?).map_err(RunError::solver)?;
    let ext = extend_upper(&sol, &extension_options(cfg)?).map_err(RunError::solver)?;
    let mut s = RunSummary::new("geodesics");
    s.headline("eps", params.eps());
    s.headline("x_star", sol.diagnostics.x_star);
    extension_checks(&mut s, &ext);
    let opts = GeodesicOptions { samples: cfg.get("geodesic_samples")?, ..GeodesicOptions::default() };
    let (table, roots, dip, extremes) = match rng_roots(&ext, &opts) {
        Ok(r) => (r.table, r.roots, r.dip, r.f_at_extremes),
        Err(RelativisticError::NoSignChange { table }) => {
            let dip = table.iter().copied().fold((f64::NAN, f64::INFINITY), |m, t| if t.1 < m.1 { t } else { m });
            let ext = (table.first().map_or(f64::NAN, |t| t.1), table.last().map_or(f64::NAN, |t| t.1));
            (table, Vec::new(), dip, ext)
        }
        Err(e) => return Err(RunError::solver(e)),
    };
    s.headline("roots", &roots);
    s.headline("dip", dip);
    s.headline("f_at_extremes", extremes);
    s.check("divergent_limits", extremes.0 > 1e3 && extremes.1 > 1e3, extremes, "F > 1e3 at both sampling extremes");
    s.check("negative_dip", dip.1 < 0.0, dip.1, "min F < 0");
    s.check("two_roots", roots.len() >= 2, roots.len(), ">= 2 bracketed roots");
    let rows: Vec<Vec<f64>> = table.iter().map(|&(y, f)| vec![y, f]).collect();
    csv(cfg, &mut s, "geodesics.csv", &["y", "F"], &rows)?;
    csv(cfg, &mut s, "extension.csv", &EXTENSION_HEADER, &extension_rows(&ext))?;
    let report =
        RlpReport { eps: params.eps(), x_star: sol.diagnostics.x_star, roots, y_ms: Some(ext.big_y_ms), diagnostics: &sol.diagnostics };
    json(cfg, &mut s, "rlp.json", &report)?;
    finish(cfg, s, &[Panel { csv: "geodesics.csv", x: "y", ys: &["F"], loglog: false, title: "F(y)" }])
}
