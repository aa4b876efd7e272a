//! Sonic-point expansion and Friedmann shooting in the Eulerian variables.

use serde::Serialize;

use super::{rel_field, EpsParams, RelSystem, RelativisticError, REL_DENOMINATOR_FLOOR};
use crate::numerics::fit::richardson_even;
use crate::numerics::ode::{integrate_ivp, IvpOptions, IvpResult, Termination};
use crate::numerics::roots::{refine_root, RootBracket};
use crate::numerics::shooting::rightmost_transition;
use crate::numerics::sonic::{expand_sonic, growth_constant, sonic_branches, SingularSystem};

/// Sonic value `D_0 = W_0` at `x_star`: the root of `B(x*; d, d) = 0`.
pub fn rel_sonic_state(x_star: f64, params: EpsParams) -> Result<f64, RelativisticError> {
    if !(x_star > 0.0) {
        return Err(RelativisticError::NoSonicState { x_star, reason: "x* must be positive".into() });
    }
    let sys = RelSystem::new(params);
    let f = |ld: f64| {
        let d = ld.exp();
        sys.den(&x_star, &d, &d)
    };
    let br = RootBracket::from_fn(f, (1e-8f64).ln(), (1e3f64).ln())
        .map_err(|e| RelativisticError::NoSonicState { x_star, reason: e.to_string() })?;
    let ld = refine_root(f, br, 1e-15).map_err(|e| RelativisticError::NoSonicState { x_star, reason: e.to_string() })?;
    Ok(ld.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelExpansion {
    pub x_star: f64,
    pub params: EpsParams,
    /// Taylor coefficients of `D` and `W` in powers of `x - x_star`.
    pub d: Vec<f64>,
    pub w: Vec<f64>,
    pub delta_trust: f64,
    pub growth_constant: f64,
}

fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * z + a)
}

fn horner_derivative(c: &[f64], z: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &a)| acc * z + k as f64 * a)
}

impl RelExpansion {
    pub fn order(&self) -> usize {
        self.d.len() - 1
    }

    pub fn tail_estimate(&self, x: f64) -> f64 {
        let n = self.order();
        let zn = (x - self.x_star).abs().powi(n as i32);
        (self.d[n].abs() * zn).max(self.w[n].abs() * zn)
    }

    /// `(D, W)` at `x`; errors outside the trust radius.
    pub fn local_eval(&self, x: f64) -> Result<[f64; 2], RelativisticError> {
        if !((x - self.x_star).abs() <= self.delta_trust * (1.0 + 1e-12)) {
            return Err(RelativisticError::OutsideTrustRadius { x, x_star: self.x_star, delta: self.delta_trust });
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: f64) -> [f64; 2] {
        let z = x - self.x_star;
        [horner(&self.d, z), horner(&self.w, z)]
    }

    pub fn derivative(&self, x: f64) -> [f64; 2] {
        let z = x - self.x_star;
        [horner_derivative(&self.d, z), horner_derivative(&self.w, z)]
    }
}

/// Larson–Penston-type expansion at `x_star`: the first-order branch along
/// which `B` falls faster, continuous with the isothermal Type-1 branch.
pub fn rel_sonic_taylor(x_star: f64, params: EpsParams, order: usize, delta_trust: f64) -> Result<RelExpansion, RelativisticError> {
    let sys = RelSystem::new(params);
    let d0 = rel_sonic_state(x_star, params)?;
    let [low, _] = sonic_branches(&sys, x_star, d0, d0)?;
    let (d, w) = expand_sonic(&sys, x_star, d0, d0, low, order)?;
    let growth = growth_constant(&[&d, &w]);
    Ok(RelExpansion { x_star, params, d, w, delta_trust, growth_constant: growth })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelShootOptions {
    /// Sonic window; [`default_window_rel`] when `None`.
    pub window: Option<(f64, f64)>,
    pub tol: f64,
    pub scan: usize,
    pub x_min: f64,
    pub order: usize,
    pub delta_frac: f64,
    pub rtol: f64,
    pub atol: f64,
    pub floor: f64,
}

impl Default for RelShootOptions {
    fn default() -> Self {
        Self {
            window: None,
            tol: 1e-12,
            scan: 24,
            x_min: 1e-3,
            order: 40,
            delta_frac: 0.05,
            rtol: 1e-12,
            atol: 1e-14,
            floor: REL_DENOMINATOR_FLOOR,
        }
    }
}

impl RelShootOptions {
    pub(crate) fn ivp(&self) -> IvpOptions<f64> {
        IvpOptions { event_tol: 1e-12, ..IvpOptions::with_tol(self.rtol, self.atol) }
    }
}

/// `[2 + 10 eps, 3 - 10 eps]`.
pub fn default_window_rel(params: EpsParams) -> (f64, f64) {
    (2.0 + 10.0 * params.eps(), 3.0 - 10.0 * params.eps())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelClassification {
    Dips { x: f64 },
    StaysAbove { x: f64, reached_end: bool },
}

impl RelClassification {
    pub fn dips(&self) -> bool {
        matches!(self, RelClassification::Dips { .. })
    }

    fn label(&self) -> String {
        match self {
            RelClassification::Dips { x } => format!("dips at x={x:.6e}"),
            RelClassification::StaysAbove { x, .. } => format!("stays above down to x={x:.6e}"),
        }
    }
}

fn expansion_for(x_star: f64, params: EpsParams, opts: &RelShootOptions) -> Result<RelExpansion, RelativisticError> {
    rel_sonic_taylor(x_star, params, opts.order, opts.delta_frac * x_star)
}

pub(crate) fn left_start(exp: &RelExpansion, opts: &RelShootOptions) -> Result<(f64, [f64; 2]), RelativisticError> {
    let x0 = exp.x_star - opts.delta_frac * exp.x_star;
    Ok((x0, exp.local_eval(x0)?))
}

pub(crate) fn right_start(exp: &RelExpansion, opts: &RelShootOptions) -> Result<(f64, [f64; 2]), RelativisticError> {
    let x0 = exp.x_star + opts.delta_frac * exp.x_star;
    Ok((x0, exp.local_eval(x0)?))
}

pub fn classify_rel(x_star: f64, params: EpsParams, opts: &RelShootOptions) -> Result<RelClassification, RelativisticError> {
    let exp = expansion_for(x_star, params, opts)?;
    let (x0, s0) = left_start(&exp, opts)?;
    let (_, w_f) = params.friedmann();
    if s0[1] <= w_f {
        return Ok(RelClassification::Dips { x: x0 });
    }
    let f = rel_field(RelSystem::new(params), opts.floor);
    let g = move |_x: f64, s: &[f64; 2]| s[1] - w_f;
    let res = integrate_ivp(f, x0, s0, opts.x_min, &opts.ivp(), &[&g])?;
    Ok(match res.termination {
        Termination::Event { t, .. } => RelClassification::Dips { x: t },
        term => RelClassification::StaysAbove { x: res.t_final(), reached_end: term.reached_end() },
    })
}

#[derive(Debug, Clone)]
pub struct RelShootResult {
    pub params: EpsParams,
    pub x_star_bar: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub expansion: RelExpansion,
    /// Left continuation `(D, W)` from `x_star_bar - delta` towards `x_min`.
    pub left: IvpResult<f64, 2>,
    pub d_origin: f64,
    pub w_origin: f64,
    pub options: RelShootOptions,
}

/// Step at which the centre values are extrapolated.
pub(crate) const ORIGIN_STEP: f64 = 0.1;

pub fn shoot_rel(params: EpsParams, opts: &RelShootOptions) -> Result<RelShootResult, RelativisticError> {
    let (a, b) = opts.window.unwrap_or_else(|| default_window_rel(params));
    let dips = |x: f64| classify_rel(x, params, opts).map(|c| c.dips()).unwrap_or(false);
    let t = rightmost_transition(a, b, opts.scan, opts.tol, dips).map_err(|_| {
        let label = |x| classify_rel(x, params, opts).map(|c| c.label()).unwrap_or_else(|e| e.to_string());
        RelativisticError::WindowNotStraddling { a, b, class_a: label(a), class_b: label(b) }
    })?;
    let expansion = expansion_for(t.hi, params, opts)?;
    let (x0, s0) = left_start(&expansion, opts)?;
    let f = rel_field(RelSystem::new(params), opts.floor);
    let left = integrate_ivp(f, x0, s0, opts.x_min, &opts.ivp(), &[])?;
    let h = ORIGIN_STEP;
    let (p, q, r) = match (left.eval(h), left.eval(h / 2.0), left.eval(h / 4.0)) {
        (Some(p), Some(q), Some(r)) => (p, q, r),
        _ => return Err(RelativisticError::LeftIntegrationFailed { x: left.t_final() }),
    };
    Ok(RelShootResult {
        params,
        x_star_bar: t.hi,
        bracket: (t.lo, t.hi),
        iterations: t.iterations,
        expansion,
        left,
        d_origin: richardson_even(p[0], q[0], r[0]),
        w_origin: richardson_even(p[1], q[1], r[1]),
        options: *opts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newtonian::{isothermal_branch, Branch};

    #[test]
    fn zero_eps_branch_is_the_isothermal_type_one() {
        let p = EpsParams::new(0.0).unwrap();
        let e = rel_sonic_taylor(2.5, p, 6, 0.1).unwrap();
        let (r1, w1) = isothermal_branch(2.5, Branch::Type1);
        assert!((e.d[0] - 0.4).abs() < 1e-14 && (e.w[0] - 0.4).abs() < 1e-14);
        assert!((e.d[1] - r1).abs() < 1e-12 && (e.w[1] - w1).abs() < 1e-12);
    }

    #[test]
    fn sonic_state_zeroes_the_denominator() {
        for &eps in &[0.0, 0.01, 0.05] {
            let p = EpsParams::new(eps).unwrap();
            let d = rel_sonic_state(2.4, p).unwrap();
            assert!(RelSystem::new(p).den(&2.4, &d, &d).abs() < 1e-13);
        }
    }
}
