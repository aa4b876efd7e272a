//! Full profiles: left continuation, series bridge across the sonic point and
//! far-field continuation, with their diagnostics.

use serde::{Deserialize, Serialize};

use super::expansion::SonicExpansion;
use super::shoot::{shoot_friedmann, ShootOptions, ShootResult};
use super::{denominator, field, DensityConvention, GammaParams, NewtState, NewtonianError, NewtonianSystem};
use crate::numerics::fit::{fit_power_law, PowerLawFit};
use crate::numerics::ode::{integrate_ivp, IvpResult};
use crate::numerics::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    Left,
    Bridge,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub y: f64,
    pub rho: f64,
    pub omega: f64,
    pub denominator: f64,
    pub residual_rho: f64,
    pub residual_omega: f64,
    pub source: PointSource,
}

/// A profile on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub gamma: f64,
    pub convention: DensityConvention,
    pub y_star: f64,
    /// Index of the grid point at the sonic point.
    pub sonic_index: usize,
    pub points: Vec<ProfilePoint>,
}

/// Per-step ODE defect `|Δu - ∫ f| / |Δy|` on the dense output, one entry per
/// sample (the first sample gets 0).
pub fn step_defects(traj: &IvpResult<f64, 2>, f: impl Fn(f64, &[f64; 2]) -> [f64; 2]) -> Vec<[f64; 2]> {
    let (nodes, weights) = gauss_legendre::<f64>(6);
    let mut out = vec![[0.0; 2]];
    for i in 1..traj.times.len() {
        let (a, b) = (traj.times[i - 1], traj.times[i]);
        let h = b - a;
        let mut integral = [0.0; 2];
        for (x, w) in nodes.iter().zip(&weights) {
            let t = a + 0.5 * h * (1.0 + x);
            let s = traj.eval(t).unwrap_or(traj.states[i]);
            let d = f(t, &s);
            integral[0] += 0.5 * h * w * d[0];
            integral[1] += 0.5 * h * w * d[1];
        }
        let du = [traj.states[i][0] - traj.states[i - 1][0], traj.states[i][1] - traj.states[i - 1][1]];
        out.push([((du[0] - integral[0]) / h).abs(), ((du[1] - integral[1]) / h).abs()]);
    }
    out
}

fn trajectory_points(traj: &IvpResult<f64, 2>, params: GammaParams, source: PointSource) -> Vec<ProfilePoint> {
    let sys = NewtonianSystem::new(params);
    let f = field(sys, 0.0);
    let defects = step_defects(traj, f);
    traj.times
        .iter()
        .zip(&traj.states)
        .zip(defects)
        .map(|((&y, s), d)| ProfilePoint {
            y,
            rho: s[0],
            omega: s[1],
            denominator: denominator(NewtState { y, rho: s[0], omega: s[1] }, params),
            residual_rho: d[0],
            residual_omega: d[1],
            source,
        })
        .collect()
}

fn bridge_points(exp: &SonicExpansion, from: f64, to: f64, n: usize) -> (Vec<ProfilePoint>, usize) {
    let mut pts = Vec::with_capacity(n + 1);
    let mut sonic = 0;
    for i in 0..=n {
        let y = if i == n / 2 { exp.y_star } else { from + (to - from) * i as f64 / n as f64 };
        if i == n / 2 {
            sonic = i;
        }
        let s = exp.eval_unchecked(y);
        let d = exp.defect(y);
        pts.push(ProfilePoint {
            y,
            rho: s.rho,
            omega: s.omega,
            denominator: denominator(s, exp.params),
            residual_rho: d[0].abs(),
            residual_omega: d[1].abs(),
            source: PointSource::Bridge,
        });
    }
    (pts, sonic)
}

/// Right continuation from `y_star + delta` to `y_max`.
pub fn extend_far_field(exp: &SonicExpansion, y_max: f64, opts: &ShootOptions) -> Result<IvpResult<f64, 2>, NewtonianError> {
    let y0 = exp.y_star + opts.delta_frac * exp.y_star;
    let (s, _) = exp.local_eval(y0)?;
    let f = field(NewtonianSystem::new(exp.params), opts.floor);
    let res = integrate_ivp(f, y0, [s.rho, s.omega], y_max, &opts.ivp(), &[])?;
    if !res.termination.reached_end() {
        return Err(NewtonianError::RightIntegrationFailed { y: res.t_final() });
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    pub y_star: f64,
    pub rho_origin: f64,
    pub omega_origin: f64,
    pub omega_origin_target: f64,
    pub omega_at_y_max: f64,
    pub y_max: f64,
    pub tail_exponent: f64,
    pub tail_exponent_target: f64,
    pub tail_fit_residual: f64,
    /// Number of sign changes of the denominator along the grid.
    pub sonic_points: usize,
    /// `G > 0` strictly left and `G < 0` strictly right of the sonic point.
    pub denominator_pattern: bool,
    pub rho_gt_omega_left: bool,
    pub omega_gt_rho_right: bool,
    pub omega_monotone_left: bool,
    /// `omega_F < omega < 1` on the right continuation.
    pub trapped_right: bool,
    /// Once below `omega_F` the left continuation never returns.
    pub absorbing_left: bool,
    pub max_residual: f64,
    pub series_tail: f64,
    pub growth_constant: f64,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub shoot: ShootResult,
    pub right: IvpResult<f64, 2>,
    pub profile: Profile,
    pub diagnostics: ProfileDiagnostics,
    pub tail_fit: PowerLawFit<f64>,
}

/// Log-spaced samples of the density on `[lo, hi]` from the dense output.
fn tail_samples(right: &IvpResult<f64, 2>, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .filter_map(|i| {
            let y = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            right.eval(y).map(|s| (y, s[0]))
        })
        .collect()
}

/// Shooting, far-field continuation and diagnostics for the given γ.
pub fn assemble_lp(params: GammaParams, opts: &ShootOptions, y_max: f64) -> Result<LpSolution, NewtonianError> {
    let shoot = shoot_friedmann(params, opts)?;
    let exp = &shoot.expansion;
    let right = extend_far_field(exp, y_max, opts)?;
    let delta = opts.delta_frac * exp.y_star;

    let mut left_pts = trajectory_points(&shoot.left, params, PointSource::Left);
    left_pts.reverse();
    let n_left = left_pts.len();
    let (mut bridge, sonic_local) = bridge_points(exp, exp.y_star - delta, exp.y_star + delta, 20);
    // the series start values coincide with the integration endpoints
    bridge.remove(0);
    bridge.pop();
    let right_pts = trajectory_points(&right, params, PointSource::Right);
    let sonic_index = n_left + sonic_local - 1;
    let mut points = left_pts;
    points.extend(bridge);
    points.extend(right_pts);
    let profile = Profile { gamma: params.gamma(), convention: params.convention(), y_star: exp.y_star, sonic_index, points };

    let (_, omega_f) = params.friedmann();
    let pts = &profile.points;
    let left_interior = &pts[..sonic_index];
    let right_interior = &pts[sonic_index + 1..];
    let sonic_points = pts.windows(2).filter(|w| (w[0].denominator > 0.0) != (w[1].denominator > 0.0)).count();
    let denominator_pattern = left_interior.iter().all(|p| p.denominator > 0.0) && right_interior.iter().all(|p| p.denominator < 0.0);
    let rho_gt_omega_left = left_interior.iter().all(|p| p.rho > p.omega);
    let omega_gt_rho_right = right_interior.iter().all(|p| p.omega > p.rho);
    let omega_monotone_left = pts[..=sonic_index].windows(2).all(|w| w[1].omega > w[0].omega);
    let trapped_right = right_interior.iter().all(|p| p.omega > omega_f && p.omega < 1.0);
    let absorbing_left = {
        // walk from the sonic point towards the centre
        let mut below = false;
        let mut ok = true;
        for p in left_interior.iter().rev() {
            if p.omega < omega_f && p.rho > p.omega {
                below = true;
            } else if below && p.omega >= omega_f {
                ok = false;
            }
        }
        ok
    };
    let max_residual =
        pts.iter().filter(|p| p.source != PointSource::Bridge).map(|p| p.residual_rho.max(p.residual_omega)).fold(0.0, f64::max);

    let samples = tail_samples(&right, y_max / 100.0, y_max, 41);
    let tail_fit = fit_power_law(&samples).map_err(|_| NewtonianError::RightIntegrationFailed { y: right.t_final() })?;
    let diagnostics = ProfileDiagnostics {
        y_star: exp.y_star,
        rho_origin: shoot.rho_origin,
        omega_origin: shoot.omega_origin,
        omega_origin_target: omega_f,
        omega_at_y_max: right.y_final()[1],
        y_max,
        tail_exponent: tail_fit.exponent,
        tail_exponent_target: params.tail_exponent(),
        tail_fit_residual: tail_fit.residual,
        sonic_points,
        denominator_pattern,
        rho_gt_omega_left,
        omega_gt_rho_right,
        omega_monotone_left,
        trapped_right,
        absorbing_left,
        max_residual,
        series_tail: exp.tail_estimate(exp.y_star + delta),
        growth_constant: exp.growth_constant,
    };
    Ok(LpSolution { shoot, right, profile, diagnostics, tail_fit })
}
