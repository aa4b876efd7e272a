use collapse_core::affine::*;
use collapse_core::dust::{trajectory_with_g, DustData, DustOptions};
use collapse_core::Matrix3;
use rand::Rng;
use rayon::prelude::*;

use super::{csv, finish, rng};
use crate::config::{param, Param, RunConfig};
use crate::output::Panel;
use crate::report::RunSummary;
use crate::RunError;

pub const AFFINE_PARAMS: &[Param] = &[
    param("gamma", "1.4", "adiabatic index (> 1)"),
    param("delta", "1", "pressure coefficient of the Sideris flow (> 0)"),
    param("t_end", "100", "end time of the matrix runs"),
    param("instances", "20", "random Sideris instances for the drift check"),
    param("seed", "1", "seed for the random instances"),
    param("radial_t_end", "1e5", "end time of the isotropic expansion run"),
    param("gw_lambda1", "-0.5", "initial velocity of the collapsing Goldreich–Weber run"),
    param("gw_sweep", "17", "initial velocities on [-2, 2] for the Goldreich–Weber dichotomy"),
    param("rtol", "1e-12", "integrator relative tolerance"),
    param("atol", "1e-14", "integrator absolute tolerance"),
];

pub const LANE_EMDEN_PARAMS: &[Param] = &[
    param("delta", "0", "source strength (>= 0)"),
    param("branch", "polytropic", "polytropic or source (two vacuum solutions exist for delta > 0)"),
    param("r0", "1e-3", "series start radius"),
    param("n_out", "201", "output grid size on [0, 1]"),
    param("vacuum_tol", "1e-10", "required |w(1)|"),
    param("rtol", "1e-13", "integrator relative tolerance"),
    param("atol", "1e-15", "integrator absolute tolerance"),
];

fn random_instance(rng: &mut impl Rng) -> (AffineState, f64) {
    loop {
        let a = Matrix3::identity() + Matrix3::from_flat(&std::array::from_fn::<f64, 9, _>(|_| rng.gen_range(-0.3..0.3)));
        let adot = Matrix3::from_flat(&std::array::from_fn::<f64, 9, _>(|_| rng.gen_range(-1.0..1.0)));
        let gamma = rng.gen_range(1.1..1.67);
        let delta = rng.gen_range(0.1..2.0);
        if a.det() > 0.2 {
            return (AffineState { a, adot, delta }, gamma);
        }
    }
}

pub fn run_affine(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let gamma: f64 = cfg.get("gamma")?;
    if !(gamma > 1.0) {
        return Err(cfg.invalid("gamma", "need gamma > 1").into());
    }
    let delta: f64 = cfg.get("delta")?;
    if !(delta > 0.0) {
        return Err(cfg.invalid("delta", "need delta > 0").into());
    }
    let t_end: f64 = cfg.get("t_end")?;
    let radial_t_end: f64 = cfg.get("radial_t_end")?;
    if !(t_end > 0.0 && radial_t_end > 0.0) {
        return Err(cfg.invalid("t_end", "end times must be positive").into());
    }
    let n_inst: usize = cfg.get("instances")?;
    let n_sweep: usize = cfg.get("gw_sweep")?;
    let l1: f64 = cfg.get("gw_lambda1")?;
    let (rtol, atol): (f64, f64) = (cfg.get("rtol")?, cfg.get("atol")?);
    let sopts = SiderisOptions { rtol, atol, ..SiderisOptions::default() };
    let ropts = RadialOptions { rtol, atol, ..RadialOptions::default() };
    let mut rng = rng(cfg)?;
    let mut s = RunSummary::new("affine");
    s.headline("gamma", gamma);
    s.headline("delta", delta);

    let a = Matrix3::from_flat(&[1.2, 0.1, 0.0, -0.2, 0.9, 0.3, 0.0, 0.1, 1.1]);
    let adot = Matrix3::from_flat(&[0.0, 0.2, 0.0, 0.0, 0.5, 0.0, 0.1, 0.0, -0.3]);
    let run = sideris_evolve(AffineState { a, adot, delta }, gamma, t_end, &sopts).map_err(RunError::solver)?;
    s.headline("sideris_energy", run.energy0);
    s.at_most("sideris_energy_drift", run.energy_drift, 1e-8);

    let instances: Vec<(AffineState, f64)> = (0..n_inst).map(|_| random_instance(&mut rng)).collect();
    let batch: Vec<SiderisRun> =
        instances.par_iter().map(|&(st, g)| sideris_evolve(st, g, t_end, &sopts)).collect::<Result<_, _>>().map_err(RunError::solver)?;
    let worst = batch.iter().map(|r| r.energy_drift).fold(0.0, f64::max);
    s.at_most("sideris_batch_energy_drift", worst, 1e-8);
    let min_det = batch.iter().flat_map(|r| r.samples.iter().map(|p| p.det)).fold(f64::INFINITY, f64::min);
    s.check("sideris_det_positive", min_det > 0.0, min_det, "> 0 on every sample");

    let expand = RadialScale { lambda: 1.0, lambdadot: 0.0, delta, mode: RadialMode::SimpleAffine { gamma } };
    let radial = radial_scale_evolve(expand, radial_t_end, &ropts).map_err(RunError::solver)?;
    match radial.outcome {
        RadialOutcome::Expanding { rate, rate_change, exponent } => {
            s.headline("radial_rate", rate);
            s.headline("radial_exponent", exponent);
            s.at_most("radial_rate_change", rate_change, 1e-3);
        }
        ref other => s.check("radial_rate_change", false, other, "expanding run"),
    }
    s.at_most("radial_energy_drift", radial.energy_drift, 1e-8);

    let gw = RadialScale { lambda: 1.0, lambdadot: l1, delta: -1.0, mode: RadialMode::Gw };
    let gw_run = radial_scale_evolve(gw, 10.0 * (1.0 + l1.abs()), &ropts).map_err(RunError::solver)?;
    match gw_run.outcome {
        RadialOutcome::Collapsing { t_star, exponent, expected_exponent, .. } => {
            s.headline("gw_t_star", t_star);
            s.headline("gw_exponent", exponent);
            s.at_most("gw_exponent_error", (exponent - expected_exponent).abs(), 0.01);
            // with delta = -1 the scale obeys dust with unit mass
            let dust = trajectory_with_g(0.5, 1.0, 0.0, DustData::uniform(1.0, l1), &DustOptions::default());
            match dust {
                Ok(d) => s.at_most("gw_vs_dust_collapse_time", (t_star - d.t_star_quadrature).abs() / t_star, 1e-8),
                Err(e) => s.check("gw_vs_dust_collapse_time", false, e.to_string(), "dust reference collapses"),
            }
        }
        ref other => s.check("gw_collapses", false, other, "collapse for the chosen initial velocity"),
    }

    let sweep: Vec<f64> = (0..n_sweep).map(|i| if n_sweep > 1 { -2.0 + 4.0 * i as f64 / (n_sweep - 1) as f64 } else { l1 }).collect();
    let sweep_runs: Vec<RadialRun> = sweep
        .par_iter()
        .map(|&v| radial_scale_evolve(RadialScale { lambda: 1.0, lambdadot: v, delta: -1.0, mode: RadialMode::Gw }, 200.0, &ropts))
        .collect::<Result<_, _>>()
        .map_err(RunError::solver)?;
    let mut sweep_rows = Vec::new();
    let mut dichotomy = true;
    for (&v, run) in sweep.iter().zip(&sweep_runs) {
        let predicted = run.energy0 < 0.0 || v < 0.0;
        let (collapsed, t_star) = match run.outcome {
            RadialOutcome::Collapsing { t_star, .. } => (true, t_star),
            RadialOutcome::Expanding { .. } => (false, f64::NAN),
        };
        dichotomy &= collapsed == predicted;
        sweep_rows.push(vec![v, run.energy0, f64::from(u8::from(collapsed)), t_star]);
    }
    s.check("gw_dichotomy", dichotomy, sweep_rows.len(), "collapse iff E < 0 or lambda'(0) < 0");

    let rows: Vec<Vec<f64>> = run
        .samples
        .iter()
        .map(|p| {
            let mut row = vec![p.t, p.det, p.energy];
            row.extend(p.singular_over_t);
            row
        })
        .collect();
    csv(cfg, &mut s, "sideris.csv", &["t", "det", "energy", "sv1_over_t", "sv2_over_t", "sv3_over_t"], &rows)?;
    let rows: Vec<Vec<f64>> =
        instances.iter().zip(&batch).map(|((st, g), r)| vec![*g, st.delta, st.a.det(), r.energy0, r.energy_drift]).collect();
    csv(cfg, &mut s, "sideris_batch.csv", &["gamma", "delta", "det0", "energy0", "energy_drift"], &rows)?;
    let rows: Vec<Vec<f64>> = radial.samples.iter().map(|p| vec![p.t, p.lambda, p.lambdadot, p.energy]).collect();
    csv(cfg, &mut s, "radial.csv", &["t", "lambda", "lambdadot", "energy"], &rows)?;
    let rows: Vec<Vec<f64>> = gw_run.samples.iter().map(|p| vec![p.t, p.lambda, p.lambdadot, p.energy]).collect();
    csv(cfg, &mut s, "gw.csv", &["t", "lambda", "lambdadot", "energy"], &rows)?;
    csv(cfg, &mut s, "gw_sweep.csv", &["lambda1", "energy", "collapsed", "t_star"], &sweep_rows)?;
    finish(
        cfg,
        s,
        &[
            Panel {
                csv: "sideris.csv",
                x: "t",
                ys: &["sv1_over_t", "sv2_over_t", "sv3_over_t"],
                loglog: false,
                title: "singular values of A/t",
            },
            Panel { csv: "radial.csv", x: "t", ys: &["lambda"], loglog: true, title: "isotropic expansion" },
            Panel { csv: "gw.csv", x: "t", ys: &["lambda"], loglog: false, title: "Goldreich–Weber collapse" },
        ],
    )
}

pub fn run_lane_emden(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let delta: f64 = cfg.get("delta")?;
    if !(delta >= 0.0) {
        return Err(cfg.invalid("delta", "need delta >= 0").into());
    }
    let branch = match cfg.raw("branch") {
        "polytropic" => LaneEmdenBranch::Polytropic,
        "source" => LaneEmdenBranch::Source,
        _ => return Err(cfg.invalid("branch", "expected polytropic or source").into()),
    };
    let opts = LaneEmdenOptions {
        branch,
        r0: cfg.get("r0")?,
        n_out: cfg.get("n_out")?,
        vacuum_tol: cfg.get("vacuum_tol")?,
        rtol: cfg.get("rtol")?,
        atol: cfg.get("atol")?,
        ..LaneEmdenOptions::default()
    };
    let p = lane_emden_shoot(delta, &opts).map_err(RunError::solver)?;
    let mut s = RunSummary::new("lane-emden");
    s.headline("delta", delta);
    s.headline("w0", p.w0);
    s.headline("w_prime_at_1", p.w_prime_at_1);
    s.headline("vacuum_ratio", p.vacuum_ratio);
    s.headline("roots_seen", &p.roots_seen);
    s.at_most("vacuum", p.w_at_1.abs(), opts.vacuum_tol);
    s.check("outward_slope_negative", p.w_prime_at_1 < 0.0, p.w_prime_at_1, "w'(1) < 0");
    let interior = p.w[..p.w.len().saturating_sub(1)].iter().copied().fold(f64::INFINITY, f64::min);
    s.check("interior_positive", interior > 0.0, interior, "w > 0 on [0, 1)");
    let (lo, hi) = p.vacuum_ratio;
    s.check("physical_vacuum", lo > 0.0 && hi.is_finite(), [lo, hi], "w/(1 - r) bounded above and away from 0 on [0.9, 1)");
    let rows: Vec<Vec<f64>> = p.r.iter().zip(&p.w).zip(&p.w_prime).map(|((&r, &w), &d)| vec![r, w, d]).collect();
    csv(cfg, &mut s, "lane_emden.csv", &["r", "w", "w_prime"], &rows)?;
    finish(cfg, s, &[Panel { csv: "lane_emden.csv", x: "r", ys: &["w"], loglog: false, title: "enthalpy" }])
}
