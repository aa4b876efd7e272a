//! Full relativistic profile: Eulerian shooting result, far-field continuation
//! and the comoving coordinate and metric along both.
//!
//! Besides `D, W` the integration carries `ln y` (from `r~ = x`, so
//! `d ln y/dx = (1 + eps)/((W + eps) x)`) and `lambda` (from
//! `d_tau lambda = e^mu d_R V / d_R r`). The Hamiltonian constraint is imposed
//! only at the sonic point, where the gauge `y* = x*` is chosen; elsewhere it is
//! a residual.

use serde::{Deserialize, Serialize};

use super::shoot::{left_start, right_start, shoot_rel, RelExpansion, RelShootOptions, RelShootResult, ORIGIN_STEP};
use super::{constraint_rhs, metric, rel_field, sonic_factorization, EpsParams, EulerianStateRel, RelSystem, RelativisticError};
use crate::numerics::fit::{fit_power_law, richardson_even, PowerLawFit};
use crate::numerics::ode::{integrate_ivp, IvpResult};
use crate::numerics::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelPointSource {
    Left,
    Bridge,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelProfilePoint {
    pub x: f64,
    /// Comoving coordinate.
    pub y: f64,
    pub d: f64,
    pub w: f64,
    pub b: f64,
    pub j: f64,
    pub h: f64,
    pub f: f64,
    pub mu: f64,
    pub lambda: f64,
    pub constraint_residual: f64,
    pub factorization_residual: f64,
    pub source: RelPointSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelProfile {
    pub eps: f64,
    pub x_star: f64,
    pub sonic_index: usize,
    pub points: Vec<RelProfilePoint>,
}

impl RelProfile {
    /// `(D, W)` at `x` by linear interpolation.
    pub fn interpolate(&self, x: f64) -> Option<[f64; 2]> {
        let pts = &self.points;
        let i = pts.partition_point(|p| p.x < x);
        if i == 0 || i == pts.len() {
            return (i < pts.len() && pts[i].x == x).then(|| [pts[i].d, pts[i].w]);
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let s = (x - a.x) / (b.x - a.x);
        Some([a.d + s * (b.d - a.d), a.w + s * (b.w - a.w)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlpDiagnostics {
    pub eps: f64,
    pub x_star: f64,
    pub d_origin: f64,
    pub w_origin: f64,
    pub w_at_x_max: f64,
    pub x_max: f64,
    pub tail_exponent: f64,
    pub tail_exponent_target: f64,
    pub mu_exponent: f64,
    pub mu_exponent_target: f64,
    pub sonic_points: usize,
    pub denominator_pattern: bool,
    /// `xW < xD < J` left of the sonic point; first failing `x` if any.
    pub sandwich_left: Option<f64>,
    /// `xW > xD > J` right of the sonic point; first failing `x` if any.
    pub sandwich_right: Option<f64>,
    pub max_constraint_residual: f64,
    pub max_factorization_residual: f64,
    /// `e^(2mu - 2lambda) y^-2 - 1` at the sonic point.
    pub sonic_metric_residual: f64,
    pub series_tail: f64,
    pub growth_constant: f64,
}

#[derive(Debug, Clone)]
pub struct RlpSolution {
    pub shoot: RelShootResult,
    pub left: IvpResult<f64, 4>,
    pub right: IvpResult<f64, 4>,
    pub profile: RelProfile,
    pub diagnostics: RlpDiagnostics,
    pub tail_fit: PowerLawFit<f64>,
}

/// Rates `(d ln y/dx, d lambda/dx)` given `D, W` and their derivatives.
fn comoving_rates(params: EpsParams, x: f64, d: f64, w: f64, dd: f64, dw: f64) -> [f64; 2] {
    let e = params.eps();
    let den = (w + e) * x;
    let lam = ((w - 1.0) + x * dw + e / (1.0 - e) * dd / d * x * (w - 1.0)) / den;
    [(1.0 + e) / den, lam]
}

fn augmented(params: EpsParams, floor: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + Copy {
    let f = rel_field(RelSystem::new(params), floor);
    move |x, s| {
        let r = f(x, &[s[0], s[1]]);
        let c = comoving_rates(params, x, s[0], s[1], r[0], r[1]);
        [r[0], r[1], c[0], c[1]]
    }
}

/// `lambda` from the constraint at a point where `y` is known.
fn lambda_from_constraint(params: EpsParams, x: f64, d: f64, w: f64, y: f64) -> f64 {
    let m = metric(params, x, d, w, y);
    m.r_y.ln() - 0.5 * constraint_rhs(params, x, w, &m).ln()
}

/// `(ln y, lambda)` at `x` near the sonic point, integrating the rates of the series.
fn bridge_comoving(exp: &RelExpansion, x: f64, at_star: [f64; 2]) -> [f64; 2] {
    let (nodes, weights) = gauss_legendre::<f64>(10);
    let (a, b) = (exp.x_star, x);
    let mut acc = at_star;
    for (t, wt) in nodes.iter().zip(&weights) {
        let s = a + 0.5 * (b - a) * (1.0 + t);
        let v = exp.eval_unchecked(s);
        let dv = exp.derivative(s);
        let r = comoving_rates(exp.params, s, v[0], v[1], dv[0], dv[1]);
        acc[0] += 0.5 * (b - a) * wt * r[0];
        acc[1] += 0.5 * (b - a) * wt * r[1];
    }
    acc
}

fn point(params: EpsParams, x: f64, s: [f64; 4], source: RelPointSource) -> RelProfilePoint {
    let (d, w, y, lambda) = (s[0], s[1], s[2].exp(), s[3]);
    let fac = sonic_factorization(EulerianStateRel { x, d, w }, params);
    let m = metric(params, x, d, w, y);
    let rhs = constraint_rhs(params, x, w, &m);
    let lhs = m.r_y * m.r_y * (-2.0 * lambda).exp();
    RelProfilePoint {
        x,
        y,
        d,
        w,
        b: fac.b,
        j: fac.j,
        h: fac.h,
        f: fac.f,
        mu: m.mu,
        lambda,
        constraint_residual: (lhs - rhs).abs() / rhs.abs().max(1.0),
        factorization_residual: fac.identity_residual,
        source,
    }
}

/// Shooting, comoving reconstruction and far-field continuation.
pub fn assemble_rlp(params: EpsParams, opts: &RelShootOptions, x_max: f64) -> Result<RlpSolution, RelativisticError> {
    let shoot = shoot_rel(params, opts)?;
    let exp = &shoot.expansion;
    let xs = exp.x_star;
    let d0 = exp.d[0];
    let star = [xs.ln(), lambda_from_constraint(params, xs, d0, d0, xs)];
    let f = augmented(params, opts.floor);

    let (xl, sl) = left_start(exp, opts)?;
    let cl = bridge_comoving(exp, xl, star);
    let left = integrate_ivp(f, xl, [sl[0], sl[1], cl[0], cl[1]], opts.x_min, &opts.ivp(), &[])?;
    // the singular mode at the centre may stop the run short of x_min
    if left.t_final() > ORIGIN_STEP / 4.0 {
        return Err(RelativisticError::LeftIntegrationFailed { x: left.t_final() });
    }
    let (xr, sr) = right_start(exp, opts)?;
    let cr = bridge_comoving(exp, xr, star);
    let right = integrate_ivp(f, xr, [sr[0], sr[1], cr[0], cr[1]], x_max, &opts.ivp(), &[])?;
    if !right.termination.reached_end() {
        return Err(RelativisticError::RightIntegrationFailed { x: right.t_final() });
    }

    let mut points: Vec<RelProfilePoint> =
        left.times.iter().zip(&left.states).rev().map(|(&x, s)| point(params, x, *s, RelPointSource::Left)).collect();
    let n_bridge = 20;
    let mut sonic_index = 0;
    for i in 1..n_bridge {
        let x = if i == n_bridge / 2 { xs } else { xl + (xr - xl) * i as f64 / n_bridge as f64 };
        if i == n_bridge / 2 {
            sonic_index = points.len();
        }
        let v = exp.eval_unchecked(x);
        let c = bridge_comoving(exp, x, star);
        points.push(point(params, x, [v[0], v[1], c[0], c[1]], RelPointSource::Bridge));
    }
    points.extend(right.times.iter().zip(&right.states).map(|(&x, s)| point(params, x, *s, RelPointSource::Right)));
    if let Some(p) = points.iter().find(|p| !(p.y.is_finite() && p.lambda.is_finite())) {
        return Err(RelativisticError::ReconstructionDiverged { x: p.x });
    }
    let profile = RelProfile { eps: params.eps(), x_star: xs, sonic_index, points };

    let pts = &profile.points;
    let (li, ri) = (&pts[..sonic_index], &pts[sonic_index + 1..]);
    let sonic_points = pts.windows(2).filter(|w| (w[0].b > 0.0) != (w[1].b > 0.0)).count();
    let denominator_pattern = li.iter().all(|p| p.b > 0.0) && ri.iter().all(|p| p.b < 0.0);
    let sandwich_left = li.iter().rev().find(|p| !(p.x * p.w < p.x * p.d && p.x * p.d < p.j)).map(|p| p.x);
    let sandwich_right = ri.iter().find(|p| !(p.x * p.w > p.x * p.d && p.x * p.d > p.j)).map(|p| p.x);
    let max_of = |g: fn(&RelProfilePoint) -> f64| pts.iter().map(g).fold(0.0, f64::max);

    let (mut dsamples, mut musamples) = (Vec::new(), Vec::new());
    for i in 0..41 {
        let x = x_max / 100.0 * 100f64.powf(i as f64 / 40.0);
        if let Some(s) = right.eval(x) {
            dsamples.push((x, s[0]));
            let m = metric(params, x, s[0], s[1], s[2].exp());
            musamples.push((s[2].exp(), (2.0 * m.mu).exp()));
        }
    }
    let tail_fit = fit_power_law(&dsamples).map_err(|e| RelativisticError::TailFit(e.to_string()))?;
    // at eps = 0 e^(2mu) is constant and the fit degenerates to exponent 0
    let mu_exponent = fit_power_law(&musamples).map(|f| f.exponent).unwrap_or(0.0);
    let sonic = &pts[sonic_index];
    let sm = metric(params, sonic.x, sonic.d, sonic.w, sonic.y);
    let sonic_metric_residual = (2.0 * sm.mu - 2.0 * sonic.lambda).exp() / (sonic.y * sonic.y) - 1.0;

    let h = ORIGIN_STEP;
    let origin = match (left.eval(h), left.eval(h / 2.0), left.eval(h / 4.0)) {
        (Some(p), Some(q), Some(r)) => [richardson_even(p[0], q[0], r[0]), richardson_even(p[1], q[1], r[1])],
        _ => return Err(RelativisticError::LeftIntegrationFailed { x: left.t_final() }),
    };
    let diagnostics = RlpDiagnostics {
        eps: params.eps(),
        x_star: xs,
        d_origin: origin[0],
        w_origin: origin[1],
        w_at_x_max: right.y_final()[1],
        x_max,
        tail_exponent: tail_fit.exponent,
        tail_exponent_target: params.tail_exponent(),
        mu_exponent,
        mu_exponent_target: params.mu_exponent(),
        sonic_points,
        denominator_pattern,
        sandwich_left,
        sandwich_right,
        max_constraint_residual: max_of(|p| p.constraint_residual),
        max_factorization_residual: max_of(|p| p.factorization_residual),
        sonic_metric_residual,
        series_tail: exp.tail_estimate(xr),
        growth_constant: exp.growth_constant,
    };
    Ok(RlpSolution { shoot, left, right, profile, diagnostics, tail_fit })
}
