//! Self-similar collapse of the isothermal (γ = 1) and polytropic (1 < γ < 4/3)
//! Euler–Poisson system: Larson–Penston and Yahil profiles.
//!
//! Unknowns are the self-similar density `rho` and the relative velocity
//! `omega = (u + (2 - γ) y) / y`. For γ = 1 the density is stored rescaled by
//! 2π ([`DensityConvention::Rescaled`]), which turns the far-field solution into
//! `rho = 1/y²` and the Friedmann solution into `rho = omega = 1/3`.

mod expansion;
mod flow;
mod profile;
mod shoot;

pub use expansion::{
    isothermal_branch, isothermal_recursion_matrix, sonic_state, sonic_taylor, sonic_taylor_generic, Branch, SonicExpansion,
};
pub use flow::SelfSimilarFlow;
pub use profile::{assemble_lp, extend_far_field, step_defects, LpSolution, PointSource, Profile, ProfileDiagnostics, ProfilePoint};
pub use shoot::{classify, default_window, omega_at_origin, shoot_friedmann, Classification, ShootOptions, ShootResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::sonic::{Field, SingularSystem};
use crate::numerics::{IvpError, SonicError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonianError {
    #[error("gamma must lie in [1, 4/3), got {0}")]
    GammaOutOfRange(f64),
    #[error("sonic evaluation: |G| = {den:e} below floor at y = {y}")]
    SonicEvaluation { y: f64, den: f64 },
    #[error(transparent)]
    Sonic(#[from] SonicError),
    #[error("no sonic state at y* = {y_star}: {reason}")]
    NoSonicState { y_star: f64, reason: String },
    #[error("y = {y} outside trust radius {delta} around y* = {y_star}")]
    OutsideTrustRadius { y: f64, y_star: f64, delta: f64 },
    #[error("window not straddling: [{a}, {b}] classify as {class_a} / {class_b}")]
    WindowNotStraddling { a: f64, b: f64, class_a: String, class_b: String },
    #[error("left integration failed at y = {y}")]
    LeftIntegrationFailed { y: f64 },
    #[error("right integration failed at y = {y}")]
    RightIntegrationFailed { y: f64 },
    #[error("integrator: {0}")]
    Ivp(#[from] IvpError),
}

/// Which density normalization a profile is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityConvention {
    /// Physical self-similar density.
    Physical,
    /// Density multiplied by 2π (used for γ = 1).
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    gamma: f64,
}

impl GammaParams {
    pub fn new(gamma: f64) -> Result<Self, NewtonianError> {
        if !(1.0..4.0 / 3.0).contains(&gamma) {
            return Err(NewtonianError::GammaOutOfRange(gamma));
        }
        Ok(Self { gamma })
    }

    pub fn isothermal() -> Self {
        Self { gamma: 1.0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_isothermal(&self) -> bool {
        self.gamma == 1.0
    }

    /// `1/(γ - 1)`, `None` in the isothermal case.
    pub fn alpha(&self) -> Option<f64> {
        (!self.is_isothermal()).then(|| 1.0 / (self.gamma - 1.0))
    }

    pub fn convention(&self) -> DensityConvention {
        if self.is_isothermal() {
            DensityConvention::Rescaled
        } else {
            DensityConvention::Physical
        }
    }

    /// Friedmann (homogeneous collapse) values `(rho_F, omega_F)` in this convention.
    pub fn friedmann(&self) -> (f64, f64) {
        let omega = (4.0 - 3.0 * self.gamma) / 3.0;
        let rho = 1.0 / (6.0 * std::f64::consts::PI);
        (self.to_convention(rho), omega)
    }

    /// Far-field solution at `y` in this convention.
    pub fn far_field(&self, y: f64) -> (f64, f64) {
        let g = self.gamma;
        let k = (g * (4.0 - 3.0 * g) / (2.0 * std::f64::consts::PI * (2.0 - g).powi(2))).powf(1.0 / (2.0 - g));
        (self.to_convention(k * y.powf(-2.0 / (2.0 - g))), 2.0 - g)
    }

    /// Exponent of the far-field density decay, `-2/(2 - γ)`.
    pub fn tail_exponent(&self) -> f64 {
        -2.0 / (2.0 - self.gamma)
    }

    /// Physical density to this profile's convention.
    pub fn to_convention(&self, rho_physical: f64) -> f64 {
        match self.convention() {
            DensityConvention::Physical => rho_physical,
            DensityConvention::Rescaled => 2.0 * std::f64::consts::PI * rho_physical,
        }
    }

    /// Density in this profile's convention back to the physical one.
    pub fn to_physical(&self, rho: f64) -> f64 {
        match self.convention() {
            DensityConvention::Physical => rho,
            DensityConvention::Rescaled => rho / (2.0 * std::f64::consts::PI),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtState {
    pub y: f64,
    pub rho: f64,
    pub omega: f64,
}

/// The self-similar system as `G · (rho', omega') = (num_rho, num_omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonianSystem {
    pub gamma: f64,
}

impl NewtonianSystem {
    pub fn new(params: GammaParams) -> Self {
        Self { gamma: params.gamma() }
    }

    fn iso(&self) -> bool {
        self.gamma == 1.0
    }

    /// `h(rho, omega)`, written for the physical density.
    fn h<F: Field<f64>>(&self, rho: &F, omega: &F) -> F {
        let g = self.gamma;
        omega.clone() * omega.clone() * rho.cst(2.0) + omega.clone() * rho.cst(g - 1.0)
            - rho.clone() * omega.clone() * rho.cst(4.0 * std::f64::consts::PI / (4.0 - 3.0 * g))
            + rho.cst((g - 1.0) * (2.0 - g))
    }
}

impl SingularSystem<f64> for NewtonianSystem {
    fn den<F: Field<f64>>(&self, y: &F, rho: &F, omega: &F) -> F {
        let yw = y.clone() * omega.clone();
        if self.iso() {
            y.cst(1.0) - yw.clone() * yw
        } else {
            rho.powf(self.gamma - 1.0) * y.cst(self.gamma) - yw.clone() * yw
        }
    }

    fn num_u<F: Field<f64>>(&self, y: &F, rho: &F, omega: &F) -> F {
        if self.iso() {
            y.clone() * rho.clone() * omega.clone() * (omega.clone() - rho.clone()) * y.cst(2.0)
        } else {
            y.clone() * rho.clone() * self.h(rho, omega)
        }
    }

    fn num_v<F: Field<f64>>(&self, y: &F, rho: &F, omega: &F) -> F {
        let den = self.den(y, rho, omega);
        if self.iso() {
            (y.cst(1.0) - omega.clone() * y.cst(3.0)) * den / y.clone()
                - y.clone() * omega.clone() * omega.clone() * (omega.clone() - rho.clone()) * y.cst(2.0)
        } else {
            (y.cst(4.0 - 3.0 * self.gamma) - omega.clone() * y.cst(3.0)) * den / y.clone() - y.clone() * omega.clone() * self.h(rho, omega)
        }
    }
}

/// Default `|G|` below which pointwise evaluation is refused.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;

/// Sonic denominator `G(y; rho, omega)` in the params' convention.
pub fn denominator(state: NewtState, params: GammaParams) -> f64 {
    NewtonianSystem::new(params).den(&state.y, &state.rho, &state.omega)
}

/// `(rho', omega')`; refuses points with `|G|` below `floor`.
pub fn rhs_newtonian_with_floor(state: NewtState, params: GammaParams, floor: f64) -> Result<[f64; 2], NewtonianError> {
    let sys = NewtonianSystem::new(params);
    let (y, rho, omega) = (state.y, state.rho, state.omega);
    let den = sys.den(&y, &rho, &omega);
    if !(den.abs() >= floor) {
        return Err(NewtonianError::SonicEvaluation { y, den });
    }
    Ok([sys.num_u(&y, &rho, &omega) / den, sys.num_v(&y, &rho, &omega) / den])
}

pub fn rhs_newtonian(state: NewtState, params: GammaParams) -> Result<[f64; 2], NewtonianError> {
    rhs_newtonian_with_floor(state, params, DENOMINATOR_FLOOR)
}

/// Vector field for the integrator: NaN inside the denominator floor so the
/// step is rejected.
pub(crate) fn field(sys: NewtonianSystem, floor: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + Copy {
    move |y, s| {
        let den = sys.den(&y, &s[0], &s[1]);
        if !(den.abs() >= floor) || !(s[0] > 0.0) {
            return [f64::NAN; 2];
        }
        [sys.num_u(&y, &s[0], &s[1]) / den, sys.num_v(&y, &s[0], &s[1]) / den]
    }
}
