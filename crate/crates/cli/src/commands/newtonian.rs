use collapse_core::newtonian::*;
use collapse_core::numerics::SingularSystem;
use rand::Rng;

use super::{csv, finish, rng};
use crate::config::{param, Param, RunConfig};
use crate::output::Panel;
use crate::report::RunSummary;
use crate::RunError;

macro_rules! shoot_params {
    ($($extra:expr),*) => {
        &[
            $($extra,)*
            param("window", "auto", "sonic window lo,hi (auto = [2, 3])"),
            param("tol", "1e-12", "bisection width on the sonic point"),
            param("scan", "24", "scan intervals over the window"),
            param("order", "40", "sonic series order"),
            param("delta_frac", "0.05", "series trust radius as a fraction of y*"),
            param("y_min", "1e-4", "left integration end"),
            param("y_max", "1e4", "right integration end"),
            param("rtol", "1e-12", "integrator relative tolerance"),
            param("atol", "1e-14", "integrator absolute tolerance"),
            param("samples", "100", "random points for the explicit-solution checks"),
            param("seed", "1", "seed for the random points"),
        ]
    };
}

pub const LP_PARAMS: &[Param] = shoot_params!();
pub const YAHIL_PARAMS: &[Param] = shoot_params!(param("gamma", "1.2", "adiabatic index in (1, 4/3)"));

pub fn shoot_options(cfg: &RunConfig) -> Result<ShootOptions, RunError> {
    Ok(ShootOptions {
        window: cfg.window("window")?,
        tol: cfg.get("tol")?,
        scan: cfg.get("scan")?,
        y_min: cfg.get("y_min")?,
        order: cfg.get("order")?,
        delta_frac: cfg.get("delta_frac")?,
        rtol: cfg.get("rtol")?,
        atol: cfg.get("atol")?,
        ..ShootOptions::default()
    })
}

pub fn run_lp(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    run_profile(cfg, "lp", GammaParams::isothermal())
}

pub fn run_yahil(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let gamma: f64 = cfg.get("gamma")?;
    if !(gamma > 1.0 && gamma < 4.0 / 3.0) {
        return Err(cfg.invalid("gamma", "need 1 < gamma < 4/3").into());
    }
    let p = GammaParams::new(gamma).map_err(|e| cfg.invalid("gamma", e.to_string()))?;
    run_profile(cfg, "yahil", p)
}

fn run_profile(cfg: &RunConfig, name: &str, p: GammaParams) -> Result<RunSummary, RunError> {
    let opts = shoot_options(cfg)?;
    let y_max: f64 = cfg.get("y_max")?;
    let samples: usize = cfg.get("samples")?;
    let mut rng = rng(cfg)?;
    let sol = assemble_lp(p, &opts, y_max).map_err(RunError::solver)?;
    let d = &sol.diagnostics;
    let mut s = RunSummary::new(name);
    s.headline("gamma", p.gamma());
    s.headline("y_star_bar", sol.shoot.y_star_bar);
    s.headline("bracket", sol.shoot.bracket);
    s.headline("rho_origin", d.rho_origin);
    s.headline("omega_origin", d.omega_origin);
    s.headline("tail_exponent", d.tail_exponent);
    s.headline("tail_prefactor", sol.tail_fit.prefactor);
    s.headline("growth_constant", d.growth_constant);
    s.headline("density_convention", p.convention());

    // explicit solutions
    let mut fried = 0.0f64;
    let mut far = 0.0f64;
    for _ in 0..samples {
        let y = rng.gen_range(0.01..1.5);
        let (rho, omega) = p.friedmann();
        if let Ok(r) = rhs_newtonian(NewtState { y, rho, omega }, p) {
            fried = fried.max(r[0].abs() / rho).max(r[1].abs());
        }
        let y = rng.gen_range(1.0..1e3);
        let (rho, omega) = p.far_field(y);
        if let Ok(r) = rhs_newtonian(NewtState { y, rho, omega }, p) {
            let exact = p.tail_exponent() * rho / y;
            far = far.max((r[0] - exact).abs() / exact.abs()).max(r[1].abs() * y);
        }
    }
    s.at_most("friedmann_residual", fried, 1e-12);
    s.at_most("far_field_residual", far, 1e-12);

    let exp = &sol.shoot.expansion;
    let sys = NewtonianSystem::new(p);
    let y = exp.y_star;
    let state = NewtState { y, rho: exp.rho[0], omega: exp.omega[0] };
    let sonic = denominator(state, p).abs().max(sys.num_u(&y, &exp.rho[0], &exp.omega[0]).abs());
    s.at_most("sonic_consistency", sonic, 1e-12);
    if p.is_isothermal() {
        s.check("absorbing_region", d.absorbing_left, d.absorbing_left, "omega stays below 1/3 once it crosses");
    }

    let flow = SelfSimilarFlow::new(&sol.profile, 0.7);
    let scaled = flow.scaled(2.0);
    let mut scaling = 0.0f64;
    for pt in sol.profile.points.iter().step_by(37) {
        if let Some((rho, omega)) = scaled.rederive(-0.3, pt.y) {
            scaling = scaling.max((rho - pt.rho).abs() / pt.rho).max((omega - pt.omega).abs() / pt.omega.abs().max(1.0));
        }
    }
    s.at_most("scaling_oracle", scaling, 1e-9);

    let omega_tol = if p.is_isothermal() { 1e-3 } else { 2e-3 };
    s.at_most("omega_origin_error", (d.omega_origin - d.omega_origin_target).abs(), omega_tol);
    s.check("rho_origin_positive", d.rho_origin > 0.0, d.rho_origin, "> 0");
    let omega_far = p.far_field(d.y_max).1;
    s.at_most("omega_far_error", (d.omega_at_y_max - omega_far).abs(), 1e-3);
    s.at_most("tail_exponent_relative_error", (d.tail_exponent / d.tail_exponent_target - 1.0).abs(), 1e-2);
    s.check("single_sonic_point", d.sonic_points == 1, d.sonic_points, "== 1");
    s.check("denominator_sign_pattern", d.denominator_pattern, d.denominator_pattern, "+ left of y*, - right of y*");
    s.at_most("max_step_residual", d.max_residual, 1e-8);
    s.at_most("series_tail", d.series_tail, 1e-10);

    let rows: Vec<Vec<f64>> =
        sol.profile.points.iter().map(|q| vec![q.y, q.rho, q.omega, q.denominator, q.residual_rho, q.residual_omega]).collect();
    csv(cfg, &mut s, "profile.csv", &["y", "rho", "omega", "denominator", "residual_rho", "residual_omega"], &rows)?;
    let series: Vec<Vec<f64>> = (0..exp.rho.len()).map(|n| vec![n as f64, exp.rho[n], exp.omega[n]]).collect();
    csv(cfg, &mut s, "sonic_series.csv", &["n", "rho_n", "omega_n"], &series)?;
    finish(
        cfg,
        s,
        &[
            Panel { csv: "profile.csv", x: "y", ys: &["rho", "omega"], loglog: false, title: "profile" },
            Panel { csv: "profile.csv", x: "y", ys: &["rho", "denominator"], loglog: true, title: "tails" },
        ],
    )
}
