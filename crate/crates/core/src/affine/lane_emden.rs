//! Enthalpy of the affine flows: `w'' + (2/r) w' + pi w³ = -3 delta / 4` on
//! `[0, 1]` with `w'(0) = 0` and a vacuum at `r = 1`.

use serde::{Deserialize, Serialize};

use super::AffineError;
use crate::numerics::ode::{integrate_ivp, IvpOptions, IvpResult, Termination};

/// `w(r) = delta (gamma - 1) / (2 gamma) (1 - r²)` and `w'(r)`.
pub fn sideris_enthalpy(delta: f64, gamma: f64, r: f64) -> (f64, f64) {
    let c = delta * (gamma - 1.0) / (2.0 * gamma);
    (c * (1.0 - r * r), -2.0 * c * r)
}

/// Which root of `w(1; w0) = 0` to return when the scan finds several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneEmdenBranch {
    /// Largest central value: the branch continuing the `delta = 0` polytrope.
    Polytropic,
    /// Smallest central value: close to `w0 - delta r²/8` for small `delta`.
    Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneEmdenOptions {
    /// Bisection bracket on `w(0)`; scanned for when `None`.
    pub bracket: Option<(f64, f64)>,
    pub branch: LaneEmdenBranch,
    /// Switch from the series to the ODE.
    pub r0: f64,
    /// `|w(1)|` accepted as the vacuum.
    pub vacuum_tol: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Output grid size on `[0, 1]`.
    pub n_out: usize,
}

impl Default for LaneEmdenOptions {
    fn default() -> Self {
        Self { bracket: None, branch: LaneEmdenBranch::Polytropic, r0: 1e-3, vacuum_tol: 1e-10, rtol: 1e-13, atol: 1e-15, n_out: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnthalpyProfile {
    pub delta: f64,
    pub w0: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    pub w_at_1: f64,
    pub w_prime_at_1: f64,
    /// `min` and `max` of `w/(1 - r)` on `[0.9, 1)`.
    pub vacuum_ratio: (f64, f64),
    /// Final bracket on `w(0)` and the number of bisection steps.
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// Central values at every sign change of the scan.
    pub roots_seen: Vec<f64>,
}

/// `(w, w')` at `r0` from `w = w0 - (pi w0³ + 3 delta/4) r²/6 + O(r⁴)`.
fn series_start(w0: f64, delta: f64, r0: f64) -> [f64; 2] {
    let c = std::f64::consts::PI * w0.powi(3) + 0.75 * delta;
    [w0 - c * r0 * r0 / 6.0, -c * r0 / 3.0]
}

fn integrate(w0: f64, delta: f64, opts: &LaneEmdenOptions, stop_at_zero: bool) -> Result<IvpResult<f64, 2>, AffineError> {
    let pi = std::f64::consts::PI;
    let f = move |r: f64, s: &[f64; 2]| [s[1], -2.0 * s[1] / r - pi * s[0].powi(3) - 0.75 * delta];
    let zero = |_r: f64, s: &[f64; 2]| s[0];
    let events: &[&dyn Fn(f64, &[f64; 2]) -> f64] = if stop_at_zero { &[&zero] } else { &[] };
    let traj = integrate_ivp(f, opts.r0, series_start(w0, delta, opts.r0), 1.0, &IvpOptions::with_tol(opts.rtol, opts.atol), events)?;
    match traj.termination {
        Termination::ReachedEnd | Termination::Event { .. } => Ok(traj),
        _ => Err(AffineError::Incomplete { t: traj.t_final() }),
    }
}

/// `w(1)` for the central value `w0`.
fn w_at_one(w0: f64, delta: f64, opts: &LaneEmdenOptions) -> Result<f64, AffineError> {
    Ok(integrate(w0, delta, opts, false)?.y_final()[0])
}

/// First zero of `w` on `(0, 1]`, or `2` when `w` stays positive.
fn first_zero(w0: f64, delta: f64, opts: &LaneEmdenOptions) -> Result<f64, AffineError> {
    if series_start(w0, delta, opts.r0)[0] <= 0.0 {
        return Ok(0.0);
    }
    let traj = integrate(w0, delta, opts, true)?;
    Ok(if traj.termination.is_event() { traj.t_final() } else { 2.0 })
}

/// Sign changes of `first_zero - 1` on a log grid of central values.
fn scan(delta: f64, opts: &LaneEmdenOptions) -> Result<Vec<(f64, f64)>, AffineError> {
    // delta = 0 puts the polytropic root at 3.89; the source branch scales like delta/8
    let lo = if delta > 0.0 { delta / 16.0 } else { 1e-2 };
    let hi = 1e2f64.max(delta);
    let n = 240;
    let grid: Vec<f64> = (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &w0 in &grid {
        vals.push(first_zero(w0, delta, opts)? - 1.0);
    }
    Ok((0..n).filter(|&i| (vals[i] > 0.0) != (vals[i + 1] > 0.0)).map(|i| (grid[i], grid[i + 1])).collect())
}

pub fn lane_emden_shoot(delta: f64, opts: &LaneEmdenOptions) -> Result<EnthalpyProfile, AffineError> {
    if !(delta >= 0.0) {
        return Err(AffineError::NegativeDelta(delta));
    }
    let (roots_seen, (mut a, mut b)) = match opts.bracket {
        Some(br) => (Vec::new(), br),
        None => {
            let brackets = scan(delta, opts)?;
            let pick = match opts.branch {
                LaneEmdenBranch::Polytropic => brackets.last(),
                LaneEmdenBranch::Source => brackets.first(),
            };
            let Some(&br) = pick else {
                let (lo, hi) = (if delta > 0.0 { delta / 16.0 } else { 1e-2 }, 1e2f64.max(delta));
                return Err(AffineError::NoSignChange { lo, hi, w1_lo: w_at_one(lo, delta, opts)?, w1_hi: w_at_one(hi, delta, opts)? });
            };
            (brackets.iter().map(|b| 0.5 * (b.0 + b.1)).collect(), br)
        }
    };
    let (mut fa, fb) = (w_at_one(a, delta, opts)?, w_at_one(b, delta, opts)?);
    if (fa > 0.0) == (fb > 0.0) {
        return Err(AffineError::NoSignChange { lo: a, hi: b, w1_lo: fa, w1_hi: fb });
    }
    let mut iterations = 0;
    let mut w1 = fa;
    while iterations < 200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        w1 = w_at_one(m, delta, opts)?;
        iterations += 1;
        if (w1 > 0.0) == (fa > 0.0) {
            a = m;
            fa = w1;
        } else {
            b = m;
        }
        if w1.abs() <= 0.01 * opts.vacuum_tol {
            break;
        }
    }
    let w0 = 0.5 * (a + b);
    let traj = integrate(w0, delta, opts, false)?;
    let [w_at_1, w_prime_at_1] = traj.y_final();
    if w_at_1.abs() > opts.vacuum_tol {
        return Err(AffineError::ShootTolerance { w1: w_at_1.min(w1), tol: opts.vacuum_tol });
    }
    let n = opts.n_out.max(2);
    let (mut r, mut w, mut w_prime) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        let s = if x < opts.r0 { series_start(w0, delta, x) } else { traj.eval(x).unwrap_or([f64::NAN; 2]) };
        r.push(x);
        w.push(s[0]);
        w_prime.push(s[1]);
    }
    let mut vacuum_ratio = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..200 {
        let x = 0.9 + 0.1 * i as f64 / 200.0;
        if let Some(s) = traj.eval(x) {
            let q = s[0] / (1.0 - x);
            vacuum_ratio = (vacuum_ratio.0.min(q), vacuum_ratio.1.max(q));
        }
    }
    Ok(EnthalpyProfile { delta, w0, r, w, w_prime, w_at_1, w_prime_at_1, vacuum_ratio, bracket: (a, b), iterations, roots_seen })
}
