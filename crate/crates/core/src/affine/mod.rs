//! Affine motions `x ↦ A(t) x`: the Sideris matrix flow, its isotropic
//! reduction and the Goldreich–Weber scale ODE, and the enthalpy profile
//! carried by such flows.

mod lane_emden;
mod radial;

pub use lane_emden::{lane_emden_shoot, sideris_enthalpy, EnthalpyProfile, LaneEmdenBranch, LaneEmdenOptions};
pub use radial::{radial_energy, radial_scale_evolve, RadialMode, RadialOptions, RadialOutcome, RadialRun, RadialSample, RadialScale};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::ode::{integrate_ivp, IvpError, IvpOptions, IvpResult, Termination};
use crate::numerics::Mat3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AffineError {
    #[error("gamma must exceed 1, got {0}")]
    GammaOutOfRange(f64),
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("delta must be non-negative, got {0}")]
    NegativeDelta(f64),
    #[error("det A0 must be positive, got {0}")]
    NonPositiveDet(f64),
    #[error("lambda0 must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("det collapse: det A = {det} at t = {t}")]
    DetCollapse { t: f64, det: f64 },
    #[error("integration stopped early at t = {t}")]
    Incomplete { t: f64 },
    #[error("blow-down unresolved: {0}")]
    BlowDownUnresolved(String),
    #[error("no sign change in shooting: w(1) = {w1_lo} at w(0) = {lo}, w(1) = {w1_hi} at w(0) = {hi}")]
    NoSignChange { lo: f64, hi: f64, w1_lo: f64, w1_hi: f64 },
    #[error("shooting did not reach |w(1)| <= {tol}: {w1}")]
    ShootTolerance { w1: f64, tol: f64 },
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineState {
    pub a: Mat3<f64>,
    pub adot: Mat3<f64>,
    pub delta: f64,
}

impl AffineState {
    /// `A = lambda I`, `A' = lambda1 I`.
    pub fn isotropic(lambda: f64, lambda1: f64, delta: f64) -> Self {
        Self { a: Mat3::identity().scale(lambda), adot: Mat3::identity().scale(lambda1), delta }
    }

    fn pack(&self) -> [f64; 18] {
        let (a, b) = (self.a.to_flat(), self.adot.to_flat());
        std::array::from_fn(|k| if k < 9 { a[k] } else { b[k - 9] })
    }

    fn unpack(s: &[f64; 18], delta: f64) -> Self {
        Self { a: Mat3::from_flat(&s[..9]), adot: Mat3::from_flat(&s[9..]), delta }
    }

    /// `½ tr(A'ᵀA') + delta/(gamma-1) det(A)^(1-gamma)`.
    pub fn energy(&self, gamma: f64) -> f64 {
        0.5 * self.adot.frobenius_sq() + self.delta / (gamma - 1.0) * self.a.det().powf(1.0 - gamma)
    }
}

/// `A'' = delta det(A)^(1-gamma) A^(-T)`.
pub fn sideris_rhs(a: &Mat3<f64>, delta: f64, gamma: f64) -> Option<Mat3<f64>> {
    let det = a.det();
    if !(det > 0.0) {
        return None;
    }
    Some(a.inverse_transpose()?.scale(delta * det.powf(1.0 - gamma)))
}

/// Time derivative of the energy along `(A, A')`, evaluated from the vector
/// field; zero up to round-off.
pub fn energy_rate(state: &AffineState, gamma: f64) -> Option<f64> {
    let acc = sideris_rhs(&state.a, state.delta, gamma)?;
    let kinetic: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| state.adot.0[i][j] * acc.0[i][j]).sum();
    // d det / dt = tr(cof(A)ᵀ A')
    let cof = state.a.cofactor();
    let ddet: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| cof.0[i][j] * state.adot.0[i][j]).sum();
    let potential = -state.delta * state.a.det().powf(-gamma) * ddet;
    Some(kinetic + potential)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiderisOptions {
    pub rtol: f64,
    pub atol: f64,
    pub det_floor: f64,
    /// Output samples on a uniform grid in `t`, endpoints included.
    pub n_out: usize,
}

impl Default for SiderisOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, det_floor: 1e-12, n_out: 201 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineSample {
    pub t: f64,
    /// Row-major entries of `A(t)`.
    pub a: [f64; 9],
    pub det: f64,
    pub energy: f64,
    /// Singular values of `A(t)/t`, ascending; zero at `t = 0`.
    pub singular_over_t: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SiderisRun {
    pub gamma: f64,
    pub delta: f64,
    pub energy0: f64,
    /// `max |E - E(0)| / |E(0)|` over every accepted step.
    pub energy_drift: f64,
    pub samples: Vec<AffineSample>,
    pub trajectory: IvpResult<f64, 18>,
}

impl SiderisRun {
    pub fn state_at(&self, t: f64) -> Option<AffineState> {
        self.trajectory.eval(t).map(|s| AffineState::unpack(&s, self.delta))
    }
}

pub fn sideris_evolve(state0: AffineState, gamma: f64, t_end: f64, opts: &SiderisOptions) -> Result<SiderisRun, AffineError> {
    if !(gamma > 1.0) {
        return Err(AffineError::GammaOutOfRange(gamma));
    }
    if !(state0.delta > 0.0) {
        return Err(AffineError::NonPositiveDelta(state0.delta));
    }
    let det0 = state0.a.det();
    if !(det0 > 0.0) {
        return Err(AffineError::NonPositiveDet(det0));
    }
    let delta = state0.delta;
    let f = move |_t: f64, s: &[f64; 18]| -> [f64; 18] {
        let acc = sideris_rhs(&Mat3::from_flat(&s[..9]), delta, gamma).map(|m| m.to_flat()).unwrap_or([f64::NAN; 9]);
        std::array::from_fn(|k| if k < 9 { s[k + 9] } else { acc[k - 9] })
    };
    let floor = opts.det_floor;
    let g = move |_t: f64, s: &[f64; 18]| Mat3::from_flat(&s[..9]).det() - floor;
    let traj = integrate_ivp(f, 0.0, state0.pack(), t_end, &IvpOptions::with_tol(opts.rtol, opts.atol), &[&g])?;
    match traj.termination {
        Termination::ReachedEnd => {}
        Termination::Event { t, .. } => return Err(AffineError::DetCollapse { t, det: floor }),
        Termination::StepUnderflow { t } | Termination::NonFinite { t } | Termination::MaxSteps { t } => {
            return Err(AffineError::Incomplete { t })
        }
    }
    let energy0 = state0.energy(gamma);
    let energy_drift =
        traj.states.iter().map(|s| (AffineState::unpack(s, delta).energy(gamma) - energy0).abs()).fold(0.0, f64::max) / energy0.abs();
    let n = opts.n_out.max(2);
    let samples = (0..n)
        .filter_map(|i| {
            let t = t_end * i as f64 / (n - 1) as f64;
            let st = AffineState::unpack(&traj.eval(t)?, delta);
            let singular_over_t = if t > 0.0 { st.a.scale(1.0 / t).singular_values() } else { [0.0; 3] };
            Some(AffineSample { t, a: st.a.to_flat(), det: st.a.det(), energy: st.energy(gamma), singular_over_t })
        })
        .collect();
    Ok(SiderisRun { gamma, delta, energy0, energy_drift, samples, trajectory: traj })
}
