use collapse_core::dust::*;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{csv, finish, json, rng};
use crate::config::{param, switch, Param, RunConfig};
use crate::output::Panel;
use crate::report::RunSummary;
use crate::RunError;

pub const DUST_PARAMS: &[Param] = &[
    switch("homogeneous", "uniform density instead of rho_bar (1 - r^n)"),
    param("rho_bar", "1", "central density"),
    param("n", "20", "flatness order of the density at the centre"),
    param("r_traj", "0.5", "label of the exported trajectory"),
    param("labels", "41", "labels on [0, 1] for the collapse map and density"),
    param("density_time", "0.9", "density snapshot at this fraction of the first collapse time"),
    param("chi_event", "1e-8", "chi at which the collapse event fires"),
    param("rtol", "1e-12", "integrator relative tolerance"),
    param("atol", "1e-15", "integrator absolute tolerance"),
    param("random_data", "20", "random inward data for the blow-up fit"),
    param("seed", "1", "seed for the random data"),
];

pub const NEARDUST_PARAMS: &[Param] = &[
    param("gamma", "1.2", "adiabatic index in (1, 4/3)"),
    param("n", "20", "flatness order of the dust profile"),
    param("tau_min", "1e-6", "smallest tau on the grid"),
    param("n_r", "40", "labels on (0, 1]"),
    switch("strict_origin", "refuse to anchor a coefficient integral away from tau = 0"),
];

fn model(cfg: &RunConfig) -> Result<DustModel, RunError> {
    let rho_bar: f64 = cfg.get("rho_bar")?;
    let m = if cfg.get::<bool>("homogeneous")? { DustModel::homogeneous(rho_bar) } else { DustModel::flat(rho_bar, cfg.get("n")?) };
    m.map_err(|e| cfg.invalid("rho_bar", e.to_string()).into())
}

fn options(cfg: &RunConfig) -> Result<DustOptions, RunError> {
    Ok(DustOptions { chi_event: cfg.get("chi_event")?, rtol: cfg.get("rtol")?, atol: cfg.get("atol")?, ..DustOptions::default() })
}

/// `max |chi - (1 - g t)^(2/3)|` over 100 times up to 99% of collapse.
fn explicit_error(model: &DustModel, tr: &DustTrajectory) -> f64 {
    let g = model.g(tr.r);
    (0..=99)
        .map(|i| {
            let t = 0.99 * i as f64 / 99.0 / g;
            match tr.at(t) {
                Some([chi, _]) => (chi - (1.0 - g * t).powf(2.0 / 3.0)).abs(),
                None => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

struct RandomRun {
    r: f64,
    data: DustData,
    t_star_ode: f64,
    t_star_quadrature: f64,
    exponent: f64,
    drift: f64,
}

pub fn run_dust(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let m = model(cfg)?;
    let opts = options(cfg)?;
    let homogeneous: bool = cfg.get("homogeneous")?;
    let r_traj: f64 = cfg.get("r_traj")?;
    if !(0.0..=1.0).contains(&r_traj) {
        return Err(cfg.invalid("r_traj", "need 0 <= r_traj <= 1").into());
    }
    let n_labels: usize = cfg.get("labels")?;
    if n_labels < 2 {
        return Err(cfg.invalid("labels", "need at least 2 labels").into());
    }
    let frac: f64 = cfg.get("density_time")?;
    if !(frac > 0.0 && frac < 1.0) {
        return Err(cfg.invalid("density_time", "need 0 < density_time < 1").into());
    }
    let n_random: usize = cfg.get("random_data")?;
    let mut rng = rng(cfg)?;
    let mut s = RunSummary::new("dust");
    s.headline("model", format!("{:?}", m.profile()));

    let labels: Vec<f64> = (0..n_labels).map(|i| i as f64 / (n_labels - 1) as f64).collect();
    let trajs: Vec<DustTrajectory> = labels
        .par_iter()
        .map(|&r| dust_trajectory(&m, r, DustData::explicit(&m, r), &opts))
        .collect::<Result<_, _>>()
        .map_err(RunError::solver)?;
    let explicit = trajs.par_iter().map(|tr| explicit_error(&m, tr)).reduce(|| 0.0, f64::max);
    s.at_most("explicit_solution_error", explicit, 1e-6);
    let closed = trajs.iter().map(|tr| (tr.t_star_quadrature * m.g(tr.r) - 1.0).abs()).fold(0.0, f64::max);
    s.at_most("quadrature_vs_closed_form", closed, 1e-8);

    // collapse map: t* must follow G, strictly where G resolves a difference
    let map: Vec<CollapsePoint> = trajs.iter().map(|tr| CollapsePoint { r: tr.r, t_star: tr.t_star_quadrature, g: m.g(tr.r) }).collect();
    let monotone = map.windows(2).all(|w| if w[1].g < w[0].g { w[1].t_star > w[0].t_star } else { w[1].t_star == w[0].t_star });
    let spread = map.last().map_or(0.0, |p| p.t_star) - map[0].t_star;
    if homogeneous {
        s.check("collapse_map_constant", spread == 0.0, spread, "t*(r) constant");
    } else {
        s.check("collapse_map_monotone", monotone && spread > 0.0, spread, "t* strictly increasing wherever g(r) strictly decreases");
    }
    s.headline("t_star_origin", map[0].t_star);
    s.headline("t_star_edge", map.last().map(|p| p.t_star));

    let t_snap = frac * map.iter().map(|p| p.t_star).fold(f64::INFINITY, f64::min);
    let density = eulerian_density(&m, t_snap, &labels, &opts).map_err(RunError::solver)?;
    let min_jac = density.iter().map(|d| d.jacobian).fold(f64::INFINITY, f64::min);
    s.check("jacobian_positive", min_jac > 0.0, min_jac, "> 0 before the first collapse");
    s.headline("density_time", t_snap);

    let draws: Vec<(f64, DustData)> =
        (0..n_random).map(|_| (rng.gen_range(0.0..1.0), DustData::uniform(rng.gen_range(0.2..3.0), rng.gen_range(-3.0..-0.01)))).collect();
    let random: Vec<RandomRun> = draws
        .par_iter()
        .map(|&(r, data)| {
            let tr = dust_trajectory(&m, r, data, &opts)?;
            let fit = blowup_exponent(&tr)?;
            Ok(RandomRun {
                r,
                data,
                t_star_ode: tr.t_star_ode,
                t_star_quadrature: tr.t_star_quadrature,
                exponent: fit.exponent,
                drift: tr.energy_drift(),
            })
        })
        .collect::<Result<_, DustError>>()
        .map_err(RunError::solver)?;
    let all_times =
        trajs.iter().map(|t| (t.t_star_ode, t.t_star_quadrature)).chain(random.iter().map(|r| (r.t_star_ode, r.t_star_quadrature)));
    let times = all_times.map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    s.at_most("event_vs_quadrature_time", times, 1e-8);
    let drift = trajs.iter().map(|t| t.energy_drift()).chain(random.iter().map(|r| r.drift)).fold(0.0, f64::max);
    s.at_most("energy_drift", drift, 10.0 * opts.rtol);
    let worst = random.iter().map(|r| (r.exponent - 2.0 / 3.0).abs()).fold(0.0, f64::max);
    s.at_most("blowup_exponent_error", worst, 0.01);

    let tr = dust_trajectory(&m, r_traj, DustData::explicit(&m, r_traj), &opts).map_err(RunError::solver)?;
    let g = m.g(r_traj);
    let rows: Vec<Vec<f64>> =
        tr.samples().iter().map(|p| vec![p.t, p.chi, p.chi_t, p.energy, (1.0 - g * p.t).max(0.0).powf(2.0 / 3.0)]).collect();
    csv(cfg, &mut s, "trajectory.csv", &["t", "chi", "chi_t", "energy", "chi_explicit"], &rows)?;
    let rows: Vec<Vec<f64>> = map.iter().map(|p| vec![p.r, p.t_star, p.g]).collect();
    csv(cfg, &mut s, "collapse_map.csv", &["r", "t_star", "g"], &rows)?;
    let rows: Vec<Vec<f64>> = density.iter().map(|d| vec![d.r, d.x, d.chi, d.chi_r, d.jacobian, d.density]).collect();
    csv(cfg, &mut s, "density.csv", &["r", "x", "chi", "chi_r", "jacobian", "density"], &rows)?;
    let rows: Vec<Vec<f64>> =
        random.iter().map(|r| vec![r.r, r.data.chi0, r.data.chi1, r.t_star_ode, r.t_star_quadrature, r.exponent, r.drift]).collect();
    csv(cfg, &mut s, "blowup.csv", &["r", "chi0", "chi1", "t_star_ode", "t_star_quadrature", "exponent", "energy_drift"], &rows)?;
    finish(
        cfg,
        s,
        &[
            Panel { csv: "trajectory.csv", x: "t", ys: &["chi", "chi_explicit"], loglog: false, title: "trajectory" },
            Panel { csv: "collapse_map.csv", x: "r", ys: &["t_star"], loglog: false, title: "collapse map" },
            Panel { csv: "density.csv", x: "x", ys: &["density"], loglog: false, title: "Eulerian density" },
        ],
    )
}

#[derive(Serialize)]
struct NearDustReport<'a> {
    gamma: f64,
    n: u32,
    delta: f64,
    sup_gain_ratio: f64,
    argmax: (f64, f64),
    sup_derivative_ratios: [f64; 2],
    anchors: (Anchor, Anchor),
    sup_by_decade: &'a [(f64, f64)],
}

pub fn run_neardust(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let gamma: f64 = cfg.get("gamma")?;
    let n: u32 = cfg.get("n")?;
    let tau_min: f64 = cfg.get("tau_min")?;
    if !(tau_min > 0.0 && tau_min < 1.0) {
        return Err(cfg.invalid("tau_min", "need 0 < tau_min < 1").into());
    }
    let n_r: usize = cfg.get("n_r")?;
    if n_r == 0 {
        return Err(cfg.invalid("n_r", "need at least one label").into());
    }
    let run = NearDustRun::new(gamma, n).map_err(|e| cfg.invalid("gamma", e.to_string()))?;
    let grid = NearDustGrid { strict_origin: cfg.get("strict_origin")?, ..NearDustGrid::standard(tau_min, n_r) };
    let source = leading_source(gamma, n);
    let rep = neardust_phi1(&run, &grid, source, run.source_exponent()).map_err(RunError::solver)?;

    let mut s = RunSummary::new("neardust");
    s.headline("gamma", gamma);
    s.headline("n", n);
    s.headline("delta", run.delta());
    s.headline("sup_gain_ratio", rep.sup_gain_ratio);
    s.headline("anchors", rep.anchors);
    let formula = 2.0 * (4.0 / 3.0 - gamma - 1.0 / n as f64);
    s.at_most("delta_formula", (run.delta() - formula).abs(), 4.0 * f64::EPSILON * formula.abs());
    let worst = rep.sup_by_decade.iter().map(|d| d.1).fold(0.0, f64::max);
    let last = rep.sup_by_decade.last().map_or(f64::NAN, |d| d.1);
    s.check(
        "gain_ratio_bounded",
        rep.sup_gain_ratio.is_finite() && last <= worst && rep.sup_derivative_ratios.iter().all(|d| d.is_finite()),
        [rep.sup_gain_ratio, last],
        "finite sup, lowest decade not above the overall sup",
    );
    let (a, b) = indicial_roots();
    let homog = grid
        .taus
        .iter()
        .flat_map(|&t| [a, b].map(|e| homogeneous_residual(e, t).abs() / (4.0 / 9.0 * t.powf(e - 2.0))))
        .fold(0.0, f64::max);
    s.at_most("homogeneous_residual", homog, 1e-12);
    let small =
        NearDustGrid { taus: grid.taus.iter().step_by(8).copied().collect(), rs: vec![0.5, 1.0], strict_origin: grid.strict_origin };
    let x = neardust_phi1(&run, &small, source, run.source_exponent()).map_err(RunError::solver)?;
    let y = neardust_phi1(&run, &small, |t, r| -3.5 * source(t, r), run.source_exponent()).map_err(RunError::solver)?;
    let lin = x.samples.iter().zip(&y.samples).map(|(p, q)| (q.phi1 + 3.5 * p.phi1).abs() / p.phi1.abs().max(1e-300)).fold(0.0, f64::max);
    s.at_most("linearity", lin, 1e-12);

    let report = NearDustReport {
        gamma,
        n,
        delta: run.delta(),
        sup_gain_ratio: rep.sup_gain_ratio,
        argmax: rep.argmax,
        sup_derivative_ratios: rep.sup_derivative_ratios,
        anchors: rep.anchors,
        sup_by_decade: &rep.sup_by_decade,
    };
    json(cfg, &mut s, "neardust.json", &report)?;
    let rows: Vec<Vec<f64>> = rep.samples.iter().map(|p| vec![p.tau, p.r, p.phi1, p.dphi1, p.ddphi1, p.ratio]).collect();
    csv(cfg, &mut s, "phi1.csv", &["tau", "r", "phi1", "dphi1", "ddphi1", "ratio"], &rows)?;
    let rows: Vec<Vec<f64>> = rep.sup_by_decade.iter().map(|&(t, r)| vec![t, r]).collect();
    csv(cfg, &mut s, "gain_by_decade.csv", &["tau_hi", "sup_ratio"], &rows)?;
    finish(cfg, s, &[Panel { csv: "gain_by_decade.csv", x: "tau_hi", ys: &["sup_ratio"], loglog: true, title: "gain ratio by decade" }])
}
