//! Pressureless (dust) collapse in Lagrangian coordinates and the first rung
//! of the near-dust hierarchy.
//!
//! Each label `r` evolves independently by `chi_tt + G(r)/chi² = 0`; the
//! Eulerian particle position is `r chi(t, r)`.

mod neardust;

pub use neardust::{
    homogeneous_residual, indicial_roots, leading_source, neardust_phi1, Anchor, GainReport, NearDustGrid, NearDustRun, Phi1Sample,
};

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::fit::fit_power_law;
use crate::numerics::ode::{integrate_ivp, IvpOptions, IvpResult};
use crate::numerics::quad::integrate_adaptive;
use crate::numerics::IvpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DustError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("chi0 must be positive, got {0}")]
    NonPositiveChi0(f64),
    #[error("no collapse at r = {r}: {reason}")]
    NoCollapse { r: f64, reason: String },
    #[error("collapse event not reached at r = {r} (stopped at t = {t})")]
    EventMissed { r: f64, t: f64 },
    #[error("insufficient samples near collapse: {0}")]
    InsufficientSamples(String),
    #[error("label r = {r} is past collapse at t = {t} (t* = {t_star})")]
    LabelPastCollapse { r: f64, t: f64, t_star: f64 },
    #[error("gamma must lie in (1, 4/3), got {0}")]
    GammaOutOfRange(f64),
    #[error("no gain: delta = {delta} <= 0 for gamma = {gamma}, n = {n} (need n > {n_min})")]
    NoGain { gamma: f64, n: u32, delta: f64, n_min: f64 },
    #[error("non-integrable source at tau = 0: {0}")]
    NonIntegrableSource(String),
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Initial density `rho0` on `[0, 1]`.
#[derive(Clone)]
pub enum DensityProfile {
    Homogeneous {
        rho_bar: f64,
    },
    /// `rho_bar (1 - r^n)`: flat to order `n` at the centre, zero at `r = 1`.
    Flat {
        rho_bar: f64,
        n: u32,
    },
    /// Any decreasing profile; `G` and `G'` by quadrature.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for DensityProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Homogeneous { rho_bar } => write!(f, "Homogeneous {{ rho_bar: {rho_bar} }}"),
            Self::Flat { rho_bar, n } => write!(f, "Flat {{ rho_bar: {rho_bar}, n: {n} }}"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DustModel {
    profile: DensityProfile,
}

const QUAD_RTOL: f64 = 1e-14;

impl DustModel {
    pub fn homogeneous(rho_bar: f64) -> Result<Self, DustError> {
        if !(rho_bar > 0.0) {
            return Err(DustError::InvalidModel(format!("rho_bar must be positive, got {rho_bar}")));
        }
        Ok(Self { profile: DensityProfile::Homogeneous { rho_bar } })
    }

    pub fn flat(rho_bar: f64, n: u32) -> Result<Self, DustError> {
        if !(rho_bar > 0.0) || n == 0 {
            return Err(DustError::InvalidModel(format!("need rho_bar > 0 and n >= 1, got {rho_bar}, {n}")));
        }
        Ok(Self { profile: DensityProfile::Flat { rho_bar, n } })
    }

    /// Checks monotonicity and `rho0 >= 0` on a grid of 201 points.
    pub fn custom(rho0: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self, DustError> {
        let vals: Vec<f64> = (0..=200).map(|i| rho0(i as f64 / 200.0)).collect();
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || vals[0] <= 0.0 {
            return Err(DustError::InvalidModel("rho0 must be finite, non-negative and positive at 0".into()));
        }
        if vals.windows(2).any(|w| w[1] > w[0]) {
            return Err(DustError::InvalidModel("rho0 must be non-increasing".into()));
        }
        Ok(Self { profile: DensityProfile::Custom(Arc::new(rho0)) })
    }

    pub fn profile(&self) -> &DensityProfile {
        &self.profile
    }

    pub fn rho0(&self, r: f64) -> f64 {
        match &self.profile {
            DensityProfile::Homogeneous { rho_bar } => *rho_bar,
            DensityProfile::Flat { rho_bar, n } => rho_bar * (1.0 - r.powi(*n as i32)),
            DensityProfile::Custom(f) => f(r),
        }
    }

    /// Average density `G(r) = r^-3 ∫_0^r 4 pi rho0(s) s² ds`.
    pub fn big_g(&self, r: f64) -> f64 {
        match &self.profile {
            DensityProfile::Homogeneous { rho_bar } => 4.0 * PI * rho_bar / 3.0,
            DensityProfile::Flat { rho_bar, n } => {
                let n = *n as f64;
                4.0 * PI * rho_bar * (1.0 / 3.0 - r.powf(n) / (n + 3.0))
            }
            DensityProfile::Custom(_) => average_density(|s| self.rho0(s), r),
        }
    }

    /// `G'(r) = 3 (4 pi rho0(r)/3 - G(r)) / r`.
    pub fn big_g_prime(&self, r: f64) -> f64 {
        match &self.profile {
            DensityProfile::Homogeneous { .. } => 0.0,
            DensityProfile::Flat { rho_bar, n } => {
                let n = *n as f64;
                -4.0 * PI * rho_bar * n / (n + 3.0) * r.powf(n - 1.0)
            }
            DensityProfile::Custom(_) => average_density_prime(|s| self.rho0(s), r),
        }
    }

    /// `g(r) = sqrt(9 G(r)/2)`; the explicit solution collapses at `1/g(r)`.
    pub fn g(&self, r: f64) -> f64 {
        (4.5 * self.big_g(r)).sqrt()
    }

    pub fn g_prime(&self, r: f64) -> f64 {
        let g = self.g(r);
        if g == 0.0 {
            0.0
        } else {
            9.0 * self.big_g_prime(r) / (4.0 * g)
        }
    }
}

/// `G(r)` written as `4 pi ∫_0^1 rho0(r u) u² du`, which has no `1/r³` at the centre.
pub fn average_density(rho0: impl Fn(f64) -> f64, r: f64) -> f64 {
    4.0 * PI * integrate_adaptive(|u| rho0(r * u) * u * u, 0.0, 1.0, QUAD_RTOL, 1e-300).value
}

/// `G'(r) = (12 pi / r) ∫_0^1 (rho0(r) - rho0(r u)) u² du`.
pub fn average_density_prime(rho0: impl Fn(f64) -> f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let top = rho0(r);
    -12.0 * PI / r * integrate_adaptive(|u| (rho0(r * u) - top) * u * u, 0.0, 1.0, QUAD_RTOL, 1e-300).value
}

/// Initial position, velocity and their `r`-derivatives at one label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DustData {
    pub chi0: f64,
    pub chi1: f64,
    pub dchi0: f64,
    pub dchi1: f64,
}

impl DustData {
    /// Data of `chi = (1 - g t)^(2/3)`: `chi0 = 1`, `chi1 = -2g/3`.
    pub fn explicit(model: &DustModel, r: f64) -> Self {
        Self { chi0: 1.0, chi1: -2.0 * model.g(r) / 3.0, dchi0: 0.0, dchi1: -2.0 * model.g_prime(r) / 3.0 }
    }

    /// `r`-independent data (the variational initial values are zero).
    pub fn uniform(chi0: f64, chi1: f64) -> Self {
        Self { chi0, chi1, dchi0: 0.0, dchi1: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DustOptions {
    /// `chi` at which the collapse event fires.
    pub chi_event: f64,
    pub rtol: f64,
    pub atol: f64,
    pub quad_rtol: f64,
}

impl Default for DustOptions {
    fn default() -> Self {
        Self { chi_event: 1e-8, rtol: 1e-12, atol: 1e-15, quad_rtol: 1e-13 }
    }
}

impl DustOptions {
    fn ivp(&self) -> IvpOptions<f64> {
        IvpOptions { event_tol: 1e-15, ..IvpOptions::with_tol(self.rtol, self.atol) }
    }
}

#[derive(Debug, Clone)]
pub struct DustTrajectory {
    pub r: f64,
    pub big_g: f64,
    pub data: DustData,
    /// State `[t, chi, chi_t, d_r chi, d_t d_r chi]` against the regularised
    /// time `sigma` (`dt/dsigma = chi^(3/2)/sqrt(G)`), stopped at the collapse event.
    pub trajectory: IvpResult<f64, 5>,
    /// Event time plus the local `chi ∝ (t* - t)^(2/3)` correction.
    pub t_star_ode: f64,
    pub t_star_quadrature: f64,
    pub energy0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DustSample {
    pub t: f64,
    pub chi: f64,
    pub chi_t: f64,
    pub energy: f64,
}

impl DustTrajectory {
    pub fn energy(&self, chi: f64, chi_t: f64) -> f64 {
        0.5 * chi_t * chi_t - self.big_g / chi
    }

    pub fn samples(&self) -> Vec<DustSample> {
        self.trajectory.states.iter().map(|s| DustSample { t: s[0], chi: s[1], chi_t: s[2], energy: self.energy(s[1], s[2]) }).collect()
    }

    /// `max |E(t) - E(0)|` relative to the size `chi_t²/2 + G/chi` of its terms.
    pub fn energy_drift(&self) -> f64 {
        self.samples().iter().map(|s| (s.energy - self.energy0).abs() / (0.5 * s.chi_t * s.chi_t + self.big_g / s.chi)).fold(0.0, f64::max)
    }

    /// Full state at time `t` (bisection on the monotone `t(sigma)`); `None`
    /// outside `[0, t_event]`.
    pub fn state_at(&self, t: f64) -> Option<[f64; 5]> {
        let tr = &self.trajectory;
        let last = tr.y_final();
        if !(t >= 0.0 && t <= last[0]) {
            return None;
        }
        let (mut lo, mut hi) = (tr.times[0], tr.t_final());
        let i = tr.states.partition_point(|s| s[0] < t);
        if i > 0 && i < tr.len() {
            lo = tr.times[i - 1];
            hi = tr.times[i];
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if tr.eval(mid)?[0] < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        tr.eval(0.5 * (lo + hi))
    }

    /// `(chi, d_r chi)` at `t`; `None` past the event.
    pub fn at(&self, t: f64) -> Option<[f64; 2]> {
        self.state_at(t).map(|s| [s[1], s[3]])
    }
}

fn escape_check(r: f64, g: f64, d: &DustData) -> Result<(), DustError> {
    if g <= 0.0 {
        return Err(DustError::NoCollapse { r, reason: "G = 0: chi is linear in t (no gravitational collapse)".into() });
    }
    let e0 = 0.5 * d.chi1 * d.chi1 - g / d.chi0;
    if d.chi1 > 0.0 && e0 >= 0.0 {
        return Err(DustError::NoCollapse { r, reason: format!("outward data with E(0) = {e0:e} >= 0 escape") });
    }
    Ok(())
}

/// Collapse time from the energy relation by quadrature.
///
/// Inward data use `chi = chi0 sin²(theta)`, which removes both endpoint
/// singularities of `1/|chi_t|`; outward bound data add the rise to
/// `chi_max = -G/E` and the full fall from there.
pub fn collapse_time_quadrature(big_g: f64, chi0: f64, chi1: f64, rtol: f64) -> f64 {
    let q = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| integrate_adaptive(f, a, b, rtol, 1e-300).value;
    if chi1 <= 0.0 {
        let f = |th: f64| {
            let (s, c) = th.sin_cos();
            2.0 * chi0 * s * s * c / (chi1 * chi1 * s * s + 2.0 * big_g * c * c / chi0).sqrt()
        };
        return q(&f, 0.0, PI / 2.0);
    }
    let e0 = 0.5 * chi1 * chi1 - big_g / chi0;
    let chi_max = -big_g / e0;
    let k = (chi_max / (2.0 * big_g)).sqrt();
    // with chi = chi_max sin² the integrand is 2 chi_max k sin²
    let f = |th: f64| 2.0 * chi_max * k * th.sin().powi(2);
    let th0 = (chi0 / chi_max).sqrt().asin();
    q(&f, th0, PI / 2.0) + q(&f, 0.0, PI / 2.0)
}

fn dust_rhs(big_g: f64, big_g_prime: f64) -> impl Fn(f64, &[f64; 5]) -> [f64; 5] + Copy {
    let k = 1.0 / big_g.sqrt();
    move |_sigma, s| {
        let chi = s[1];
        let c2 = chi * chi;
        let dt = k * chi * chi.sqrt();
        [dt, dt * s[2], -dt * big_g / c2, dt * s[4], dt * (-big_g_prime / c2 + 2.0 * big_g * s[3] / (c2 * chi))]
    }
}

pub fn dust_trajectory(model: &DustModel, r: f64, data: DustData, opts: &DustOptions) -> Result<DustTrajectory, DustError> {
    trajectory_with_g(r, model.big_g(r), model.big_g_prime(r), data, opts)
}

/// [`dust_trajectory`] for given `G(r)` and `G'(r)`.
pub fn trajectory_with_g(r: f64, big_g: f64, big_g_prime: f64, data: DustData, opts: &DustOptions) -> Result<DustTrajectory, DustError> {
    if !(data.chi0 > 0.0) {
        return Err(DustError::NonPositiveChi0(data.chi0));
    }
    escape_check(r, big_g, &data)?;
    let t_quad = collapse_time_quadrature(big_g, data.chi0, data.chi1, opts.quad_rtol);
    let f = dust_rhs(big_g, big_g_prime);
    let chi_event = opts.chi_event;
    let g = move |_s: f64, s: &[f64; 5]| s[1] - chi_event;
    // sigma grows like log(1/(t* - t)) near collapse, so this bound is generous
    let sigma_end = 1e3 * (1.0 + t_quad * big_g.sqrt() / data.chi0.powf(1.5));
    let y0 = [0.0, data.chi0, data.chi1, data.dchi0, data.dchi1];
    let traj = integrate_ivp(f, 0.0, y0, sigma_end, &opts.ivp(), &[&g])?;
    let end = traj.y_final();
    if !traj.termination.is_event() {
        return Err(DustError::EventMissed { r, t: end[0] });
    }
    // chi ≈ c (t* - t)^(2/3) gives t* - t = -2 chi / (3 chi_t)
    let t_star_ode = end[0] - 2.0 * end[1] / (3.0 * end[2]);
    Ok(DustTrajectory {
        r,
        big_g,
        data,
        trajectory: traj,
        t_star_ode,
        t_star_quadrature: t_quad,
        energy0: 0.5 * data.chi1 * data.chi1 - big_g / data.chi0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub samples: usize,
}

/// Fits `chi ~ c (t* - t)^p` on `t* - t ∈ [1e-6 t*, 1e-4 t*]`, the last two
/// decades resolved before the event.
pub fn blowup_exponent(traj: &DustTrajectory) -> Result<BlowupFit, DustError> {
    let ts = traj.t_star_ode;
    let mut samples = Vec::new();
    for i in 0..41 {
        let dt = ts * 1e-6 * 100f64.powf(i as f64 / 40.0);
        if let Some(s) = traj.state_at(ts - dt) {
            samples.push((dt, s[1]));
        }
    }
    if samples.len() < 10 {
        return Err(DustError::InsufficientSamples(format!("{} samples in the last two decades", samples.len())));
    }
    let fit = fit_power_law(&samples).map_err(|e| DustError::InsufficientSamples(e.to_string()))?;
    Ok(BlowupFit { exponent: fit.exponent, prefactor: fit.prefactor, samples: samples.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub r: f64,
    pub t_star: f64,
    pub g: f64,
}

/// `t*(r)` for the explicit data on the given labels.
pub fn collapse_map(model: &DustModel, labels: &[f64], opts: &DustOptions) -> Result<Vec<CollapsePoint>, DustError> {
    labels
        .iter()
        .map(|&r| {
            let tr = dust_trajectory(model, r, DustData::explicit(model, r), opts)?;
            Ok(CollapsePoint { r, t_star: tr.t_star_quadrature, g: model.g(r) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub r: f64,
    /// Eulerian radius `r chi`.
    pub x: f64,
    pub chi: f64,
    pub chi_r: f64,
    /// `J = chi² (chi + r d_r chi)`.
    pub jacobian: f64,
    pub density: f64,
}

/// Eulerian density `rho0(r)/J` at time `t` along the explicit trajectories.
pub fn eulerian_density(model: &DustModel, t: f64, labels: &[f64], opts: &DustOptions) -> Result<Vec<DensitySample>, DustError> {
    labels
        .iter()
        .map(|&r| {
            let tr = dust_trajectory(model, r, DustData::explicit(model, r), opts)?;
            let [chi, chi_r] = tr.at(t).ok_or(DustError::LabelPastCollapse { r, t, t_star: tr.t_star_ode })?;
            let jacobian = chi * chi * (chi + r * chi_r);
            Ok(DensitySample { r, x: r * chi, chi, chi_r, jacobian, density: model.rho0(r) / jacobian })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_model_closed_forms_match_quadrature() {
        let m = DustModel::flat(1.0, 6).unwrap();
        for &r in &[1e-4, 0.1, 0.5, 0.9, 1.0] {
            let g = average_density(|s| m.rho0(s), r);
            let gp = average_density_prime(|s| m.rho0(s), r);
            assert!((g - m.big_g(r)).abs() < 1e-13 * g);
            assert!((gp - m.big_g_prime(r)).abs() < 1e-10 * (1.0 + gp.abs()));
        }
    }

    #[test]
    fn centre_value_is_the_central_density() {
        let m = DustModel::flat(2.0, 4).unwrap();
        assert!((m.big_g(0.0) - 4.0 * PI * 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_handles_outward_bound_data() {
        // cycloid: fall from rest at chi_max takes (pi/2) sqrt(chi_max³/(2G))
        let t = collapse_time_quadrature(1.0, 2.0, 0.0, 1e-13);
        assert!((t - PI / 2.0 * (8.0f64 / 2.0).sqrt()).abs() < 1e-12);
        let up = collapse_time_quadrature(1.0, 1.0, 0.5, 1e-13);
        let chi_max: f64 = 1.0 / (1.0 - 0.125);
        assert!(up > PI / 2.0 * (chi_max.powi(3) / 2.0).sqrt());
    }
}
