//! Continuation past `tau = 0` in the chart `Y = y^(-(1-eps)/(1+eps))`, with
//! unknowns `d = D`, `w = W`, `chi = r~ / y`. `Y > 0` is the collapse region
//! already covered by the Eulerian profile; the extension runs to `Y < 0` until
//! `d`, `w` and `1/chi` blow up together.

use serde::{Deserialize, Serialize};

use super::comoving::RlpSolution;
use super::{EpsParams, RelativisticError};
use crate::numerics::fit::{fit_polynomial, fit_power_law};
use crate::numerics::ode::{integrate_ivp, IvpOptions, IvpResult, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionOptions {
    /// Profile points with `x` above this enter the fit at `Y = 0`.
    pub fit_x_min: f64,
    /// Degree of the polynomials in `Y`.
    pub degree: usize,
    /// Start of the integration, `Y = -start_offset` (from the fitted series).
    pub start_offset: f64,
    /// `w` above which the solution is declared blown up.
    pub blowup: f64,
    pub y_floor: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        Self { fit_x_min: 100.0, degree: 3, start_offset: 2e-4, blowup: 1e8, y_floor: -1e3, rtol: 1e-12, atol: 1e-14 }
    }
}

/// `d ≈ Y² Σ a_k Y^k`, `w ≈ 1 + Y Σ b_k Y^k`, `chi ≈ Σ c_k Y^k` near `Y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSeries {
    pub d_over_y2: Vec<f64>,
    pub w_minus_one_over_y: Vec<f64>,
    pub chi: Vec<f64>,
    /// `Y` range of the fitted samples.
    pub fit_range: (f64, f64),
    /// Largest relative misfit over the samples.
    pub misfit: f64,
}

fn poly(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * y + a)
}

impl TailSeries {
    /// `(d, w, chi)` at `y` (chart coordinate).
    pub fn eval(&self, y: f64) -> [f64; 3] {
        [y * y * poly(&self.d_over_y2, y), 1.0 + y * poly(&self.w_minus_one_over_y, y), poly(&self.chi, y)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionPoint {
    /// Chart coordinate `Y`.
    pub big_y: f64,
    /// Similarity coordinate `y = -|Y|^(-1/k)` (for `Y < 0`).
    pub y: f64,
    pub d: f64,
    pub w: f64,
    pub chi: f64,
    /// `e^(2mu - 2lambda) y^-2`.
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct UpperExtension {
    pub params: EpsParams,
    pub tail: TailSeries,
    pub trajectory: IvpResult<f64, 3>,
    pub points: Vec<ExtensionPoint>,
    /// Blow-up location in the chart and in similarity variables.
    pub big_y_ms: f64,
    pub y_ms: f64,
    /// Exponent of `w ~ (Y - Y_ms)^p` over the last two decades of `w`.
    pub divergence_rate: f64,
    /// `min d/w` and `max d/w` over `Y < 0`.
    pub sandwich_c: f64,
    pub sandwich_max: f64,
    pub final_state: [f64; 3],
}

/// Right-hand side of the `(d, w, chi)` system in `Y`.
pub(crate) fn chart_field(params: EpsParams) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] + Copy {
    let e = params.eps();
    let eta = params.eta();
    move |y, s| {
        let (d, w, chi) = (s[0], s[1], s[2]);
        let we = w + e;
        let q = we * we - e * (w - 1.0) * (w - 1.0) + 4.0 * e * w * d;
        let c = d.powf(-eta) * (y * y).powf(1.0 + eta) - chi * chi * q;
        let common = 2.0 * chi * chi * we * we * (d - w) / (y * c);
        [d * common, -we * (1.0 - 3.0 * w) / ((1.0 - e) * y) - (1.0 + e) / (1.0 - e) * w * common, (1.0 - w) * chi / ((1.0 - e) * y)]
    }
}

/// `e^(2mu - 2lambda) y^-2` in chart variables.
pub(crate) fn chart_s(params: EpsParams, big_y: f64, d: f64, w: f64, chi: f64) -> f64 {
    let e = params.eps();
    let eta = params.eta();
    let num = d.powf(-eta) * (big_y * big_y).powf(1.0 + eta) / (chi * chi) + e * (w - 1.0).powi(2) - 4.0 * e * w * d;
    num / ((w + e) * (w + e))
}

pub(crate) fn similarity_of_chart(params: EpsParams, big_y: f64) -> f64 {
    -big_y.abs().powf(-1.0 / params.k())
}

pub(crate) fn chart_of_similarity(params: EpsParams, y: f64) -> f64 {
    -y.abs().powf(-params.k())
}

fn fit_tail(sol: &RlpSolution, params: EpsParams, opts: &ExtensionOptions) -> Result<TailSeries, RelativisticError> {
    let k = params.k();
    let (mut sd, mut sw, mut sc) = (Vec::new(), Vec::new(), Vec::new());
    for (&x, s) in sol.right.times.iter().zip(&sol.right.states) {
        if x < opts.fit_x_min {
            continue;
        }
        let big_y = (-k * s[2]).exp();
        let y = s[2].exp();
        sd.push((big_y, s[0] / (big_y * big_y)));
        sw.push((big_y, (s[1] - 1.0) / big_y));
        sc.push((big_y, x / y));
    }
    let fit = |v: &[(f64, f64)], deg| fit_polynomial(v, deg).map_err(|e| RelativisticError::TailFit(e.to_string()));
    let d_over_y2 = fit(&sd, opts.degree)?;
    let w_minus_one_over_y = fit(&sw, opts.degree.saturating_sub(1))?;
    let chi = fit(&sc, opts.degree)?;
    let mut misfit = 0.0f64;
    for i in 0..sd.len() {
        let y = sd[i].0;
        misfit = misfit
            .max((poly(&d_over_y2, y) / sd[i].1 - 1.0).abs())
            .max((y * (poly(&w_minus_one_over_y, y) - sw[i].1)).abs())
            .max((poly(&chi, y) / sc[i].1 - 1.0).abs());
    }
    let lo = sd.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = sd.iter().map(|s| s.0).fold(0.0, f64::max);
    Ok(TailSeries { d_over_y2, w_minus_one_over_y, chi, fit_range: (lo, hi), misfit })
}

pub fn extend_upper(sol: &RlpSolution, opts: &ExtensionOptions) -> Result<UpperExtension, RelativisticError> {
    let params = sol.shoot.params;
    let tail = fit_tail(sol, params, opts)?;
    let y0 = -opts.start_offset;
    let s0 = tail.eval(y0);
    let f = chart_field(params);
    let blowup = opts.blowup;
    let g = move |_y: f64, s: &[f64; 3]| s[1] - blowup;
    let ivp = IvpOptions { event_tol: 1e-14, ..IvpOptions::with_tol(opts.rtol, opts.atol) };
    let traj = integrate_ivp(f, y0, s0, opts.y_floor, &ivp, &[&g])?;
    let end = traj.t_final();
    let blew_up = match traj.termination {
        Termination::Event { .. } => true,
        Termination::StepUnderflow { .. } | Termination::NonFinite { .. } => traj.y_final()[1] > 1e4,
        _ => false,
    };
    if !blew_up {
        return Err(RelativisticError::NoBlowUp { y_reached: end });
    }

    let points: Vec<ExtensionPoint> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&big_y, s)| ExtensionPoint {
            big_y,
            y: similarity_of_chart(params, big_y),
            d: s[0],
            w: s[1],
            chi: s[2],
            s: chart_s(params, big_y, s[0], s[1], s[2]),
        })
        .collect();

    // Riccati-type blow-up: 1/w is close to linear in Y at the end
    let n = points.len();
    let (p, q) = (&points[n - 2], &points[n - 1]);
    let slope = (1.0 / q.w - 1.0 / p.w) / (q.big_y - p.big_y);
    let big_y_ms = q.big_y - (1.0 / q.w) / slope;
    let samples: Vec<(f64, f64)> =
        points.iter().filter(|p| p.w >= blowup * 1e-2 && p.big_y > big_y_ms).map(|p| (p.big_y - big_y_ms, p.w)).collect();
    let divergence_rate = fit_power_law(&samples).map(|f| f.exponent).unwrap_or(f64::NAN);
    let ratios = points.iter().map(|p| p.d / p.w);
    let sandwich_c = ratios.clone().fold(f64::INFINITY, f64::min);
    let sandwich_max = ratios.fold(f64::NEG_INFINITY, f64::max);
    Ok(UpperExtension {
        params,
        tail,
        final_state: traj.y_final(),
        trajectory: traj,
        points,
        big_y_ms,
        y_ms: similarity_of_chart(params, big_y_ms),
        divergence_rate,
        sandwich_c,
        sandwich_max,
    })
}
