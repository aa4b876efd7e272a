//! First corrector of the near-dust expansion `phi = tau^(2/3) + eps phi_1 + ...`
//! in the foliation `tau = 1 - g(r) t`:
//!
//! `d_tau² phi_1 - 4/(9 tau²) phi_1 = -P(tau, r)`,
//!
//! solved by variation of parameters on the basis `tau^(4/3)`, `tau^(-1/3)`.

use serde::{Deserialize, Serialize};

use super::DustError;
use crate::numerics::quad::integrate_adaptive;

/// Roots of `s (s - 1) = 4/9`, larger first.
pub fn indicial_roots() -> (f64, f64) {
    let disc = (1.0f64 + 16.0 / 9.0).sqrt();
    ((1.0 + disc) / 2.0, (1.0 - disc) / 2.0)
}

/// `(tau^s)'' - 4/(9 tau²) tau^s`.
pub fn homogeneous_residual(s: f64, tau: f64) -> f64 {
    (s * (s - 1.0) - 4.0 / 9.0) * tau.powf(s - 2.0)
}

/// Leading form of the pressure source near `(tau, r) = (0, 0)`:
/// `tau^(1/3 - 2 gamma) r^(n-2) (1 + r^n/tau)^(-gamma)`.
pub fn leading_source(gamma: f64, n: u32) -> impl Fn(f64, f64) -> f64 + Copy {
    let n = n as i32;
    // same expression with the tau powers combined, so tiny tau does not overflow
    move |tau: f64, r: f64| tau.powf(1.0 / 3.0 - gamma) * r.powi(n - 2) * (tau + r.powi(n)).powf(-gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearDustRun {
    gamma: f64,
    n: u32,
    delta: f64,
}

impl NearDustRun {
    pub fn new(gamma: f64, n: u32) -> Result<Self, DustError> {
        if !(gamma > 1.0 && gamma < 4.0 / 3.0) {
            return Err(DustError::GammaOutOfRange(gamma));
        }
        let nf = n as f64;
        // 2 (4/3 - gamma - 1/n) over the common denominator 3n, exact for gamma = 6/5, n = 20
        let delta = 2.0 * (4.0 * nf - 3.0 * (gamma * nf) - 3.0) / (3.0 * nf);
        if !(delta > 0.0) {
            return Err(DustError::NoGain { gamma, n, delta, n_min: 1.0 / (4.0 / 3.0 - gamma) });
        }
        Ok(Self { gamma, n, delta })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `2 (4/3 - gamma - 1/n)`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Exponent of the leading source as `tau -> 0` at fixed `r > 0`.
    pub fn source_exponent(&self) -> f64 {
        1.0 / 3.0 - self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum Anchor {
    Origin,
    /// Lower limit at `tau_max` (the integral runs backwards).
    TauMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearDustGrid {
    pub taus: Vec<f64>,
    pub rs: Vec<f64>,
    /// Anchor both integrals at `tau = 0` and refuse otherwise.
    pub strict_origin: bool,
}

impl NearDustGrid {
    /// `tau` log-spaced on `[tau_min, 1]` (8 per decade), `r` uniform on `(0, 1]`.
    pub fn standard(tau_min: f64, n_r: usize) -> Self {
        let decades = (1.0 / tau_min).log10();
        let n_tau = (8.0 * decades).round() as usize + 1;
        let taus = (0..n_tau).map(|i| tau_min * 10f64.powf(decades * i as f64 / (n_tau - 1) as f64)).collect();
        let rs = (1..=n_r).map(|i| i as f64 / n_r as f64).collect();
        Self { taus, rs, strict_origin: false }
    }

    fn tau_max(&self) -> f64 {
        self.taus.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi1Sample {
    pub tau: f64,
    pub r: f64,
    pub phi1: f64,
    pub dphi1: f64,
    pub ddphi1: f64,
    /// `|phi_1| / (tau^delta phi_0)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub gamma: f64,
    pub n: u32,
    pub delta: f64,
    pub sup_gain_ratio: f64,
    pub argmax: (f64, f64),
    /// `(tau_hi, sup ratio over [tau_hi/10, tau_hi])` per decade.
    pub sup_by_decade: Vec<(f64, f64)>,
    /// `sup tau^m |d_tau^m phi_1| / (tau^delta phi_0)` for `m = 1, 2`.
    pub sup_derivative_ratios: [f64; 2],
    /// Anchors of the `tau^(-1/3)` and `tau^(4/3)` coefficient integrals.
    pub anchors: (Anchor, Anchor),
    pub samples: Vec<Phi1Sample>,
}

const QUAD_RTOL: f64 = 1e-12;
/// Lower cut in `ln s` below `ln tau` for integrals anchored at the origin.
const LOG_SPAN: f64 = 80.0;

/// `∫_a^b f(s) ds` computed in `u = ln s`.
fn log_integral(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate_adaptive(
        |u: f64| {
            let s = u.exp();
            f(s) * s
        },
        a.ln(),
        b.ln(),
        QUAD_RTOL,
        1e-300,
    )
    .value
}

/// `(phi_1, phi_1', phi_1'')` at one `(tau, r)`.
fn phi1_at(source: &impl Fn(f64, f64) -> f64, tau: f64, r: f64, anchors: (Anchor, Anchor), tau_max: f64) -> [f64; 3] {
    let p = |s: f64| source(s, r);
    let up = |s: f64| s.powf(4.0 / 3.0) * p(s);
    let down = |s: f64| s.powf(-1.0 / 3.0) * p(s);
    let integral = |f: &dyn Fn(f64) -> f64, anchor| match anchor {
        Anchor::Origin => log_integral(&f, tau * (-LOG_SPAN).exp(), tau),
        Anchor::TauMax => -log_integral(&f, tau, tau_max),
    };
    let i1 = integral(&up, anchors.0);
    let i2 = integral(&down, anchors.1);
    let phi = 0.6 * (tau.powf(-1.0 / 3.0) * i1 - tau.powf(4.0 / 3.0) * i2);
    let dphi = 0.6 * (-tau.powf(-4.0 / 3.0) * i1 / 3.0 - 4.0 * tau.powf(1.0 / 3.0) * i2 / 3.0);
    let ddphi = 4.0 / (9.0 * tau * tau) * phi - p(tau);
    [phi, dphi, ddphi]
}

/// Solves for `phi_1` on the grid and reports the gain ratio.
///
/// Each coefficient integral is anchored at `tau = 0` when its integrand
/// `s^a P` is integrable there (`a + source_exponent > -1`), otherwise at the
/// top of the grid; `strict_origin` turns the fallback into an error.
pub fn neardust_phi1(
    run: &NearDustRun,
    grid: &NearDustGrid,
    source: impl Fn(f64, f64) -> f64,
    source_exponent: f64,
) -> Result<GainReport, DustError> {
    let pick = |a: f64| {
        let exponent = a + source_exponent;
        if exponent > -1.0 {
            Ok(Anchor::Origin)
        } else if grid.strict_origin {
            Err(DustError::NonIntegrableSource(format!("s^{a:.4} P(s) ~ s^{exponent:.4} as s -> 0 (gamma = {}, n = {})", run.gamma, run.n)))
        } else {
            Ok(Anchor::TauMax)
        }
    };
    let anchors = (pick(4.0 / 3.0)?, pick(-1.0 / 3.0)?);
    let tau_max = grid.tau_max();
    let expo = run.delta + 2.0 / 3.0;
    let mut samples = Vec::with_capacity(grid.taus.len() * grid.rs.len());
    for &tau in &grid.taus {
        for &r in &grid.rs {
            let [phi1, dphi1, ddphi1] = phi1_at(&source, tau, r, anchors, tau_max);
            samples.push(Phi1Sample { tau, r, phi1, dphi1, ddphi1, ratio: phi1.abs() / tau.powf(expo) });
        }
    }
    let best = samples.iter().fold(&samples[0], |m, s| if s.ratio > m.ratio { s } else { m });
    let mut sup_by_decade = Vec::new();
    let mut hi = tau_max;
    let tau_min = grid.taus.iter().copied().fold(f64::INFINITY, f64::min);
    while hi > tau_min * (1.0 + 1e-12) {
        let sup = samples
            .iter()
            .filter(|s| s.tau <= hi * (1.0 + 1e-12) && s.tau >= hi / 10.0 * (1.0 - 1e-12))
            .map(|s| s.ratio)
            .fold(0.0, f64::max);
        sup_by_decade.push((hi, sup));
        hi /= 10.0;
    }
    let d1 = samples.iter().map(|s| s.tau * s.dphi1.abs() / s.tau.powf(expo)).fold(0.0, f64::max);
    let d2 = samples.iter().map(|s| s.tau * s.tau * s.ddphi1.abs() / s.tau.powf(expo)).fold(0.0, f64::max);
    Ok(GainReport {
        gamma: run.gamma,
        n: run.n,
        delta: run.delta,
        sup_gain_ratio: best.ratio,
        argmax: (best.tau, best.r),
        sup_by_decade,
        sup_derivative_ratios: [d1, d2],
        anchors,
        samples,
    })
}
