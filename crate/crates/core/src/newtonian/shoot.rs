//! Shooting from the sonic point towards the Friedmann interior.
//!
//! A candidate sonic point either "dips": its left continuation crosses
//! `omega = omega_F` (after which it can never return), or it stays above. The
//! selected sonic point is the infimum of the set of candidates `y` such that
//! every candidate in `[y, b]` dips: the window is scanned from its right end
//! for the first non-dipper, then the transition is bisected.

use serde::Serialize;

use super::expansion::{sonic_taylor, Branch, SonicExpansion};
use super::{field, GammaParams, NewtonianError, NewtonianSystem, DENOMINATOR_FLOOR};
use crate::numerics::fit::richardson_even;
use crate::numerics::ode::{integrate_ivp, IvpOptions, IvpResult, Termination};
use crate::numerics::shooting::rightmost_transition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Sonic window; [`default_window`] when `None`.
    pub window: Option<(f64, f64)>,
    /// Width to which the dip/no-dip boundary is bisected.
    pub tol: f64,
    /// Number of intervals in the right-to-left scan before bisection.
    pub scan: usize,
    pub y_min: f64,
    pub order: usize,
    /// Series trust radius as a fraction of the candidate sonic point.
    pub delta_frac: f64,
    pub rtol: f64,
    pub atol: f64,
    pub floor: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            window: None,
            tol: 1e-12,
            scan: 24,
            y_min: 1e-4,
            order: 40,
            delta_frac: 0.05,
            rtol: 1e-12,
            atol: 1e-14,
            floor: DENOMINATOR_FLOOR,
        }
    }
}

impl ShootOptions {
    pub(crate) fn ivp(&self) -> IvpOptions<f64> {
        IvpOptions { event_tol: 1e-12, ..IvpOptions::with_tol(self.rtol, self.atol) }
    }
}

/// The sonic window `[2, 3]`; it also brackets the Yahil sonic points for
/// γ ∈ {1.1, 1.2, 1.3}.
pub fn default_window(_params: GammaParams) -> (f64, f64) {
    (2.0, 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    /// Left continuation crosses `omega_F` at `y`.
    Dips { y: f64 },
    /// No crossing down to `y` (the integration end or where it stopped).
    StaysAbove { y: f64, reached_end: bool },
}

impl Classification {
    pub fn dips(&self) -> bool {
        matches!(self, Classification::Dips { .. })
    }

    fn label(&self) -> String {
        match self {
            Classification::Dips { y } => format!("dips at y={y:.6e}"),
            Classification::StaysAbove { y, .. } => format!("stays above down to y={y:.6e}"),
        }
    }
}

fn left_start(exp: &SonicExpansion, opts: &ShootOptions) -> Result<(f64, [f64; 2]), NewtonianError> {
    let y0 = exp.y_star - opts.delta_frac * exp.y_star;
    let (s, _) = exp.local_eval(y0)?;
    Ok((y0, [s.rho, s.omega]))
}

fn integrate_left(exp: &SonicExpansion, opts: &ShootOptions, with_event: bool) -> Result<IvpResult<f64, 2>, NewtonianError> {
    let params = exp.params;
    let (_, omega_f) = params.friedmann();
    let f = field(NewtonianSystem::new(params), opts.floor);
    let (y0, s0) = left_start(exp, opts)?;
    let g = move |_y: f64, s: &[f64; 2]| s[1] - omega_f;
    let events: Vec<&dyn Fn(f64, &[f64; 2]) -> f64> = if with_event { vec![&g] } else { vec![] };
    Ok(integrate_ivp(f, y0, s0, opts.y_min, &opts.ivp(), &events)?)
}

fn expansion_for(y_star: f64, params: GammaParams, opts: &ShootOptions) -> Result<SonicExpansion, NewtonianError> {
    Ok(sonic_taylor(y_star, Branch::Type1, params, opts.order)?.with_trust_radius(opts.delta_frac * y_star))
}

/// Classifies the Type-1 continuation of a candidate sonic point.
pub fn classify(y_star: f64, params: GammaParams, opts: &ShootOptions) -> Result<Classification, NewtonianError> {
    let exp = expansion_for(y_star, params, opts)?;
    let (y0, s0) = left_start(&exp, opts)?;
    let (_, omega_f) = params.friedmann();
    if s0[1] <= omega_f {
        // already below inside the series region
        return Ok(Classification::Dips { y: y0 });
    }
    let res = integrate_left(&exp, opts, true)?;
    Ok(match res.termination {
        Termination::Event { t, .. } => Classification::Dips { y: t },
        term => Classification::StaysAbove { y: res.t_final(), reached_end: term.reached_end() },
    })
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    pub params: GammaParams,
    /// Infimum of the dipping candidates (the dipping end of the final bracket).
    pub y_star_bar: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub expansion: SonicExpansion,
    /// Left continuation from `y_star_bar - delta` towards `y_min`, decreasing in `y`.
    pub left: IvpResult<f64, 2>,
    /// Extrapolated values at the centre.
    pub rho_origin: f64,
    pub omega_origin: f64,
    /// Where the returned profile crosses `omega_F`, if it does before `y_min`.
    pub dip_y: Option<f64>,
    pub options: ShootOptions,
}

/// `(rho(0), omega(0))` by two-level Richardson extrapolation in `y²` from
/// `y = h, h/2, h/4` on the dense output.
pub fn omega_at_origin(left: &IvpResult<f64, 2>, h: f64) -> Option<(f64, f64)> {
    let a = left.eval(h)?;
    let b = left.eval(h / 2.0)?;
    let c = left.eval(h / 4.0)?;
    Some((richardson_even(a[0], b[0], c[0]), richardson_even(a[1], b[1], c[1])))
}

/// Step at which the centre values are extrapolated.
pub const ORIGIN_STEP: f64 = 0.1;

pub fn shoot_friedmann(params: GammaParams, opts: &ShootOptions) -> Result<ShootResult, NewtonianError> {
    let (a, b) = opts.window.unwrap_or_else(|| default_window(params));
    // errors count as "not dipping"
    let dips = |y: f64| classify(y, params, opts).map(|c| c.dips()).unwrap_or(false);
    let t = rightmost_transition(a, b, opts.scan, opts.tol, dips).map_err(|_| {
        let label = |y| classify(y, params, opts).map(|c| c.label()).unwrap_or_else(|e| e.to_string());
        NewtonianError::WindowNotStraddling { a, b, class_a: label(a), class_b: label(b) }
    })?;
    let (lo, hi) = (t.lo, t.hi);
    let y_star_bar = hi;

    let expansion = expansion_for(y_star_bar, params, opts)?;
    let left = integrate_left(&expansion, opts, false)?;
    if left.t_final() > ORIGIN_STEP / 4.0 {
        return Err(NewtonianError::LeftIntegrationFailed { y: left.t_final() });
    }
    let (rho_origin, omega_origin) =
        omega_at_origin(&left, ORIGIN_STEP).ok_or(NewtonianError::LeftIntegrationFailed { y: left.t_final() })?;
    let (_, omega_f) = params.friedmann();
    let dip_y = left.states.iter().zip(&left.times).find(|(s, _)| s[1] < omega_f).map(|(_, &y)| y);
    Ok(ShootResult {
        params,
        y_star_bar,
        bracket: (lo, hi),
        iterations: t.iterations,
        expansion,
        left,
        rho_origin,
        omega_origin,
        dip_y,
        options: *opts,
    })
}
