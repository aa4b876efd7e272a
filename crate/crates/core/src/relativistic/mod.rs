//! Self-similar collapse of a relativistic gas with `p = eps rho` (relativistic
//! Larson–Penston profiles) for small `eps`.
//!
//! The profile is built in Schwarzschild-like ("Eulerian") variables `x, D, W`,
//! where it behaves like the isothermal Newtonian problem, then mapped to the
//! comoving coordinate `y` to recover the metric, continued past `tau = 0` in
//! the chart `Y = y^(-(1-eps)/(1+eps))`, and searched for simple radial null
//! geodesics through the scaling origin.

mod comoving;
mod extension;
mod geodesics;
mod shoot;

pub use comoving::{assemble_rlp, RelPointSource, RelProfile, RelProfilePoint, RlpDiagnostics, RlpSolution};
pub use extension::{extend_upper, ExtensionOptions, ExtensionPoint, TailSeries, UpperExtension};
pub use geodesics::{geodesic_function, rng_roots, GeodesicOptions, GeodesicReport};
pub use shoot::{
    classify_rel, default_window_rel, rel_sonic_state, rel_sonic_taylor, shoot_rel, RelClassification, RelExpansion, RelShootOptions,
    RelShootResult,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::sonic::{Field, SingularSystem};
use crate::numerics::{IvpError, SonicError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelativisticError {
    #[error("eps must lie in [0, 1), got {0}")]
    EpsOutOfRange(f64),
    #[error("eps = {eps} exceeds the working cap {cap}")]
    AboveCap { eps: f64, cap: f64 },
    #[error("sonic evaluation: |B| = {den:e} below floor at x = {x}")]
    SonicEvaluation { x: f64, den: f64 },
    #[error(transparent)]
    Sonic(#[from] SonicError),
    #[error("no sonic state at x* = {x_star}: {reason}")]
    NoSonicState { x_star: f64, reason: String },
    #[error("x = {x} outside trust radius {delta} around x* = {x_star}")]
    OutsideTrustRadius { x: f64, x_star: f64, delta: f64 },
    #[error("window not straddling: [{a}, {b}] classify as {class_a} / {class_b}")]
    WindowNotStraddling { a: f64, b: f64, class_a: String, class_b: String },
    #[error("left integration failed at x = {x}")]
    LeftIntegrationFailed { x: f64 },
    #[error("right integration failed at x = {x}")]
    RightIntegrationFailed { x: f64 },
    #[error("reconstruction diverged at x = {x}")]
    ReconstructionDiverged { x: f64 },
    #[error("tail fit failed: {0}")]
    TailFit(String),
    #[error("no blow-up detected before Y = {y_reached}")]
    NoBlowUp { y_reached: f64 },
    #[error("no sign change found in {} samples of F", table.len())]
    NoSignChange { table: Vec<(f64, f64)> },
    #[error("integrator: {0}")]
    Ivp(#[from] IvpError),
}

/// Default upper bound on `eps` accepted by the solvers.
pub const EPS_CAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsParams {
    eps: f64,
    cap: f64,
}

impl EpsParams {
    /// `eps = 0` is accepted and reduces everything to the isothermal Newtonian problem.
    pub fn new(eps: f64) -> Result<Self, RelativisticError> {
        Self::with_cap(eps, EPS_CAP)
    }

    pub fn with_cap(eps: f64, cap: f64) -> Result<Self, RelativisticError> {
        if !(0.0..1.0).contains(&eps) {
            return Err(RelativisticError::EpsOutOfRange(eps));
        }
        if eps > cap {
            return Err(RelativisticError::AboveCap { eps, cap });
        }
        Ok(Self { eps, cap })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// `2 eps / (1 - eps)`, the exponent in `D^(-eta)`.
    pub fn eta(&self) -> f64 {
        2.0 * self.eps / (1.0 - self.eps)
    }

    /// `(1 - eps) / (1 + eps)`, the exponent relating `Y` and `y`.
    pub fn k(&self) -> f64 {
        (1.0 - self.eps) / (1.0 + self.eps)
    }

    /// Density decay exponent `-2(1 - eps)/(1 + eps)` of the far field.
    pub fn tail_exponent(&self) -> f64 {
        -2.0 * self.k()
    }

    /// Growth exponent `4 eps/(1 + eps)` of `e^(2 mu)` at large `y`.
    pub fn mu_exponent(&self) -> f64 {
        4.0 * self.eps / (1.0 + self.eps)
    }

    pub fn friedmann(&self) -> (f64, f64) {
        (1.0 / 3.0, 1.0 / 3.0)
    }

    /// Far-field solution `(D_f(x), 1)`, `D_f = (1 + 6 eps + eps²)^(-k) x^(-2k)`.
    pub fn far_field(&self, x: f64) -> (f64, f64) {
        let e = self.eps;
        let c = (1.0 + 6.0 * e + e * e).powf(-self.k());
        (c * x.powf(self.tail_exponent()), 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerianStateRel {
    pub x: f64,
    /// Density variable `D`.
    pub d: f64,
    /// Velocity variable `W`.
    pub w: f64,
}

/// `B · (D', W') = (num_D, num_W)` in the Eulerian variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelSystem {
    pub eps: f64,
}

impl RelSystem {
    pub fn new(params: EpsParams) -> Self {
        Self { eps: params.eps }
    }

    /// `(W + eps)² - eps (W - 1)² + 4 eps D W`.
    fn q<F: Field<f64>>(&self, d: &F, w: &F) -> F {
        let e = self.eps;
        let we = w.clone() + w.cst(e);
        let wm = w.clone() - w.cst(1.0);
        we.clone() * we - wm.clone() * wm * w.cst(e) + d.clone() * w.clone() * w.cst(4.0 * e)
    }

    fn d_power<F: Field<f64>>(&self, d: &F) -> F {
        if self.eps == 0.0 {
            d.cst(1.0)
        } else {
            d.powf(-2.0 * self.eps / (1.0 - self.eps))
        }
    }
}

impl SingularSystem<f64> for RelSystem {
    fn den<F: Field<f64>>(&self, x: &F, d: &F, w: &F) -> F {
        self.d_power(d) - self.q(d, w) * x.clone() * x.clone()
    }

    fn num_u<F: Field<f64>>(&self, x: &F, d: &F, w: &F) -> F {
        let e = self.eps;
        x.clone() * d.clone() * (w.clone() + w.cst(e)) * (d.clone() - w.clone()) * x.cst(-2.0 * (1.0 - e))
    }

    fn num_v<F: Field<f64>>(&self, x: &F, d: &F, w: &F) -> F {
        let e = self.eps;
        (x.cst(1.0) - w.clone() * x.cst(3.0)) * self.den(x, d, w) / x.clone()
            + x.clone() * w.clone() * (w.clone() + w.cst(e)) * (d.clone() - w.clone()) * x.cst(2.0 * (1.0 + e))
    }
}

/// Default `|B|` below which pointwise evaluation is refused.
pub const REL_DENOMINATOR_FLOOR: f64 = 1e-10;

pub fn sonic_denominator(state: EulerianStateRel, params: EpsParams) -> f64 {
    RelSystem::new(params).den(&state.x, &state.d, &state.w)
}

pub fn rhs_rel_eulerian_with_floor(state: EulerianStateRel, params: EpsParams, floor: f64) -> Result<[f64; 2], RelativisticError> {
    let sys = RelSystem::new(params);
    let (x, d, w) = (state.x, state.d, state.w);
    let den = sys.den(&x, &d, &w);
    if !(den.abs() >= floor) {
        return Err(RelativisticError::SonicEvaluation { x, den });
    }
    Ok([sys.num_u(&x, &d, &w) / den, sys.num_v(&x, &d, &w) / den])
}

pub fn rhs_rel_eulerian(state: EulerianStateRel, params: EpsParams) -> Result<[f64; 2], RelativisticError> {
    rhs_rel_eulerian_with_floor(state, params, REL_DENOMINATOR_FLOOR)
}

pub(crate) fn rel_field(sys: RelSystem, floor: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + Copy {
    move |x, s| {
        let den = sys.den(&x, &s[0], &s[1]);
        if !(den.abs() >= floor) || !(s[0] > 0.0) {
            return [f64::NAN; 2];
        }
        [sys.num_u(&x, &s[0], &s[1]) / den, sys.num_v(&x, &s[0], &s[1]) / den]
    }
}

/// Split of the sonic denominator used to track its sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SonicFactorization {
    pub b: f64,
    pub j: f64,
    pub h: f64,
    /// `J - x D`.
    pub f: f64,
    /// `|B - (1 - eps)(J - xW)(H + xW)|` relative to the size of the terms of `B`.
    pub identity_residual: f64,
}

/// `B = (1 - eps) (J - xW) (H + xW)` with `J` the positive root of the quadratic
/// in `xW` and `H = J + 4 eps (1 + D) x / (1 - eps)`.
pub fn sonic_factorization(state: EulerianStateRel, params: EpsParams) -> SonicFactorization {
    let e = params.eps;
    let (x, d, w) = (state.x, state.d, state.w);
    let sys = RelSystem::new(params);
    let dp = sys.d_power(&d);
    let a = 2.0 * e / (1.0 - e) * (1.0 + d) * x;
    let j = -a + (a * a + e * x * x + dp / (1.0 - e)).sqrt();
    let h = j + 2.0 * a;
    let b = sys.den(&x, &d, &w);
    let product = (1.0 - e) * (j - x * w) * (h + x * w);
    let scale = dp + sys.q(&d, &w).abs() * x * x;
    SonicFactorization { b, j, h, f: j - x * d, identity_residual: (b - product).abs() / scale }
}

/// Metric quantities attached to an Eulerian state at comoving coordinate `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Metric {
    /// `mu`, gauge `e^mu = D^(-eps/(1-eps)) / (1 + eps)`.
    pub mu: f64,
    /// `V = e^(-mu) x (W - 1)/(1 + eps)`.
    pub v: f64,
    /// `Sigma = D^((1+eps)/(1-eps))`.
    pub sigma: f64,
    /// `d r~/dy = x (W + eps) / ((1 + eps) y)`.
    pub r_y: f64,
}

pub(crate) fn metric(params: EpsParams, x: f64, d: f64, w: f64, y: f64) -> Metric {
    let e = params.eps;
    let mu = -e / (1.0 - e) * d.ln() - (1.0 + e).ln();
    Metric { mu, v: (-mu).exp() * x * (w - 1.0) / (1.0 + e), sigma: d.powf((1.0 + e) / (1.0 - e)), r_y: x * (w + e) / ((1.0 + e) * y) }
}

/// Right-hand side `1 + eps V² - 4 eps Sigma W r~²` of the constraint
/// `r~_y² e^(-2 lambda) = 1 + eps V² - 4 eps Sigma W r~²`.
pub(crate) fn constraint_rhs(params: EpsParams, x: f64, w: f64, m: &Metric) -> f64 {
    let e = params.eps;
    1.0 + e * m.v * m.v - 4.0 * e * m.sigma * w * x * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newtonian::{rhs_newtonian, GammaParams, NewtState};

    #[test]
    fn zero_eps_is_the_isothermal_system() {
        let p = EpsParams::new(0.0).unwrap();
        for &(x, d, w) in &[(0.5, 0.9, 0.4), (2.0, 0.3, 0.2), (7.0, 0.01, 0.8)] {
            let r = rhs_rel_eulerian(EulerianStateRel { x, d, w }, p).unwrap();
            let n = rhs_newtonian(NewtState { y: x, rho: d, omega: w }, GammaParams::isothermal()).unwrap();
            assert!((r[0] - n[0]).abs() <= 1e-14 * (1.0 + n[0].abs()));
            assert!((r[1] - n[1]).abs() <= 1e-14 * (1.0 + n[1].abs()));
        }
        let s = sonic_factorization(EulerianStateRel { x: 2.0, d: 0.3, w: 0.2 }, p);
        assert_eq!((s.j, s.h), (1.0, 1.0));
        assert!((s.b - (1.0 - 0.16)).abs() < 1e-15);
    }

    #[test]
    fn friedmann_and_far_field_are_solutions() {
        let p = EpsParams::new(0.01).unwrap();
        let r = rhs_rel_eulerian(EulerianStateRel { x: 1.0, d: 1.0 / 3.0, w: 1.0 / 3.0 }, p).unwrap();
        assert_eq!(r, [0.0, 0.0]);
        let x = 10.0;
        let (d, w) = p.far_field(x);
        let r = rhs_rel_eulerian(EulerianStateRel { x, d, w }, p).unwrap();
        assert!((r[0] - p.tail_exponent() * d / x).abs() < 1e-14 * d / x);
        assert!(r[1].abs() < 1e-15);
    }

    #[test]
    fn friedmann_sonic_point_has_j_equal_x_w() {
        let p = EpsParams::new(0.02).unwrap();
        let sys = RelSystem::new(p);
        let third = 1.0 / 3.0;
        // B(x; 1/3, 1/3) = 0 solved in closed form
        let x = (sys.d_power(&third) / sys.q(&third, &third)).sqrt();
        let s = sonic_factorization(EulerianStateRel { x, d: third, w: third }, p);
        assert!(s.b.abs() < 1e-14);
        assert!((s.j - x * third).abs() < 1e-14);
    }
}
