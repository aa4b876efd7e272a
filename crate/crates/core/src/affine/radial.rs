//! Isotropic scale `A = lambda I`: `lambda'' lambda^(3 gamma - 2) = delta`,
//! with the Goldreich–Weber case `gamma = 4/3`, `lambda'' lambda² = delta`.

use serde::{Deserialize, Serialize};

use super::AffineError;
use crate::numerics::fit::fit_power_law;
use crate::numerics::ode::{integrate_ivp, IvpOptions, IvpResult, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RadialMode {
    /// `gamma = 4/3`, any real `delta`.
    Gw,
    SimpleAffine {
        gamma: f64,
    },
}

impl RadialMode {
    pub fn gamma(&self) -> f64 {
        match *self {
            RadialMode::Gw => 4.0 / 3.0,
            RadialMode::SimpleAffine { gamma } => gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialScale {
    pub lambda: f64,
    pub lambdadot: f64,
    pub delta: f64,
    pub mode: RadialMode,
}

/// `½ lambda'² + delta lambda^(3 - 3 gamma) / (3 gamma - 3)`; for GW `½ lambda'² + delta/lambda`.
pub fn radial_energy(s: &RadialScale) -> f64 {
    let g = s.mode.gamma();
    0.5 * s.lambdadot * s.lambdadot + s.delta * s.lambda.powf(3.0 - 3.0 * g) / (3.0 * g - 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Collapse event at `lambda = lambda_floor · lambda0`.
    pub lambda_floor: f64,
    pub n_out: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, lambda_floor: 1e-8, n_out: 401 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub t: f64,
    pub lambda: f64,
    pub lambdadot: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialOutcome {
    Expanding {
        /// `lambda(t_end) / t_end`.
        rate: f64,
        /// Relative change of `lambda/t` between `t_end/10` and `t_end`.
        rate_change: f64,
        /// Fitted exponent of `lambda ~ t^p` on the last decade.
        exponent: f64,
    },
    Collapsing {
        t_star: f64,
        /// Whether `lambda' = 0` is crossed before the collapse.
        turning_point: Option<f64>,
        /// Fitted exponent of `lambda ~ (t* - t)^p` on `t* - t ∈ [1e-6, 1e-4] t*`.
        exponent: f64,
        /// `2 / (3 gamma - 1)`.
        expected_exponent: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RadialRun {
    pub initial: RadialScale,
    pub energy0: f64,
    pub energy_drift: f64,
    pub outcome: RadialOutcome,
    pub samples: Vec<RadialSample>,
}

/// Collapse iff the force is attractive and either the energy is negative or
/// the initial motion is inward.
fn collapses(s: &RadialScale) -> bool {
    s.delta < 0.0 && (radial_energy(s) < 0.0 || s.lambdadot < 0.0)
}

pub fn radial_scale_evolve(state0: RadialScale, t_end: f64, opts: &RadialOptions) -> Result<RadialRun, AffineError> {
    if !(state0.lambda > 0.0) {
        return Err(AffineError::NonPositiveLambda(state0.lambda));
    }
    let gamma = state0.mode.gamma();
    if !(gamma > 1.0) {
        return Err(AffineError::GammaOutOfRange(gamma));
    }
    if collapses(&state0) {
        collapse(state0, opts)
    } else {
        expand(state0, t_end, opts)
    }
}

fn energy_of(state0: &RadialScale, lambda: f64, lambdadot: f64) -> f64 {
    radial_energy(&RadialScale { lambda, lambdadot, ..*state0 })
}

/// Largest `|E - E(0)|` relative to `½ lambda'² + |V(lambda)|` at the same step.
fn relative_drift(state0: &RadialScale, energy0: f64, pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs
        .map(|(l, ld)| {
            let kinetic = 0.5 * ld * ld;
            let size = kinetic + (energy_of(state0, l, ld) - kinetic).abs();
            (energy_of(state0, l, ld) - energy0).abs() / size
        })
        .fold(0.0, f64::max)
}

fn expand(state0: RadialScale, t_end: f64, opts: &RadialOptions) -> Result<RadialRun, AffineError> {
    let (gamma, delta) = (state0.mode.gamma(), state0.delta);
    let f = move |_t: f64, s: &[f64; 2]| [s[1], delta * s[0].powf(2.0 - 3.0 * gamma)];
    let traj = integrate_ivp(f, 0.0, [state0.lambda, state0.lambdadot], t_end, &IvpOptions::with_tol(opts.rtol, opts.atol), &[])?;
    if !traj.termination.reached_end() {
        return Err(AffineError::Incomplete { t: traj.t_final() });
    }
    let energy0 = radial_energy(&state0);
    let energy_drift = relative_drift(&state0, energy0, traj.states.iter().map(|s| (s[0], s[1])));
    let at = |t: f64| traj.eval(t).unwrap_or([f64::NAN; 2]);
    let rate = at(t_end)[0] / t_end;
    let rate_change = ((rate - at(t_end / 10.0)[0] / (t_end / 10.0)) / rate).abs();
    let last_decade: Vec<(f64, f64)> = (0..=40)
        .map(|i| {
            let t = t_end / 10.0 * 10f64.powf(i as f64 / 40.0);
            (t, at(t)[0])
        })
        .collect();
    let exponent = fit_power_law(&last_decade).map(|p| p.exponent).unwrap_or(f64::NAN);
    let samples = uniform_samples(&state0, t_end, opts.n_out, |t| traj.eval(t));
    Ok(RadialRun { initial: state0, energy0, energy_drift, outcome: RadialOutcome::Expanding { rate, rate_change, exponent }, samples })
}

fn uniform_samples(state0: &RadialScale, t_end: f64, n: usize, eval: impl Fn(f64) -> Option<[f64; 2]>) -> Vec<RadialSample> {
    let n = n.max(2);
    (0..n)
        .filter_map(|i| {
            let t = t_end * i as f64 / (n - 1) as f64;
            let s = eval(t)?;
            Some(RadialSample { t, lambda: s[0], lambdadot: s[1], energy: energy_of(state0, s[0], s[1]) })
        })
        .collect()
}

/// Bisection on the monotone `t(sigma)` of a regularized run.
fn state_at(traj: &IvpResult<f64, 3>, t: f64) -> Option<[f64; 2]> {
    let (mut a, mut b) = (traj.times[0], traj.t_final());
    if !(t >= 0.0 && t <= traj.y_final()[0]) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if traj.eval(m)?[0] < t {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            break;
        }
    }
    let s = traj.eval(0.5 * (a + b))?;
    Some([s[1], s[2]])
}

fn collapse(state0: RadialScale, opts: &RadialOptions) -> Result<RadialRun, AffineError> {
    let (gamma, delta) = (state0.mode.gamma(), state0.delta);
    let p = 2.0 / (3.0 * gamma - 1.0);
    // dt/dsigma = lambda^(1/p): lambda and lambda' then vary exponentially in sigma near collapse
    let q = 1.0 / p;
    let f = move |_s: f64, y: &[f64; 3]| {
        let dt = y[1].powf(q);
        [dt, dt * y[2], dt * delta * y[1].powf(2.0 - 3.0 * gamma)]
    };
    let floor = opts.lambda_floor * state0.lambda;
    let g = move |_s: f64, y: &[f64; 3]| y[1] - floor;
    let ivp = IvpOptions { event_tol: 1e-13, ..IvpOptions::with_tol(opts.rtol, opts.atol) };
    let traj = integrate_ivp(f, 0.0, [0.0, state0.lambda, state0.lambdadot], 1e6, &ivp, &[&g])?;
    let Termination::Event { .. } = traj.termination else {
        return Err(AffineError::BlowDownUnresolved(format!("stopped at lambda = {:e} ({:?})", traj.y_final()[1], traj.termination)));
    };
    let end = traj.y_final();
    // lambda ≈ c (t* - t)^p gives t* - t = -p lambda / lambda'
    let t_star = end[0] - p * end[1] / end[2];
    let turning_point = traj
        .states
        .windows(2)
        .find(|w| w[0][2] > 0.0 && w[1][2] <= 0.0)
        .map(|w| w[0][0] + (w[1][0] - w[0][0]) * w[0][2] / (w[0][2] - w[1][2]));
    let mut tail = Vec::new();
    for i in 0..41 {
        let dt = t_star * 1e-6 * 100f64.powf(i as f64 / 40.0);
        if let Some(s) = state_at(&traj, t_star - dt) {
            tail.push((dt, s[0]));
        }
    }
    let exponent = fit_power_law(&tail).map_err(|e| AffineError::BlowDownUnresolved(e.to_string()))?.exponent;
    let energy0 = radial_energy(&state0);
    let energy_drift = relative_drift(&state0, energy0, traj.states.iter().map(|s| (s[1], s[2])));
    let samples = uniform_samples(&state0, end[0], opts.n_out, |t| state_at(&traj, t));
    Ok(RadialRun {
        initial: state0,
        energy0,
        energy_drift,
        outcome: RadialOutcome::Collapsing { t_star, turning_point, exponent, expected_exponent: p },
        samples,
    })
}
