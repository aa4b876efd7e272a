//! Adaptive Dormand–Prince 5(4) integration with dense output and terminal events.
//!
//! Step size control follows the PI controller of Hairer, Nørsett & Wanner.
//! A trial stage that produces a non-finite derivative is treated as a rejected
//! step, so integrations approaching a singular point end in
//! [`Termination::StepUnderflow`] or [`Termination::NonFinite`] instead of an error.

use thiserror::Error;

use super::scalar::{sign, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IvpError {
    #[error("tolerance must be positive, got rtol={rtol}, atol={atol}")]
    InvalidTolerance { rtol: f64, atol: f64 },
    #[error("integration span is empty (t0 == t_end)")]
    EmptySpan,
    #[error("non-finite rhs at the initial point t0={t0}")]
    NonFiniteRhs { t0: f64 },
    #[error("non-finite initial state")]
    NonFiniteState,
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination<T> {
    ReachedEnd,
    /// A terminal event fired; `index` refers to the event slice passed in.
    Event {
        index: usize,
        t: T,
    },
    /// Required step fell below the round-off floor at `t`.
    StepUnderflow {
        t: T,
    },
    /// The vector field kept returning NaN/inf near `t`.
    NonFinite {
        t: T,
    },
    MaxSteps {
        t: T,
    },
}

impl<T> Termination<T> {
    pub fn is_event(&self) -> bool {
        matches!(self, Termination::Event { .. })
    }

    pub fn reached_end(&self) -> bool {
        matches!(self, Termination::ReachedEnd)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IvpOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h_init: Option<T>,
    /// Largest allowed step magnitude.
    pub h_max: Option<T>,
    pub max_steps: usize,
    /// Width in the independent variable to which event times are bisected.
    pub event_tol: T,
}

impl<T: Real> Default for IvpOptions<T> {
    fn default() -> Self {
        Self { rtol: T::lit(1e-10), atol: T::lit(1e-12), h_init: None, h_max: None, max_steps: 2_000_000, event_tol: T::lit(1e-12) }
    }
}

impl<T: Real> IvpOptions<T> {
    pub fn with_tol(rtol: T, atol: T) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn h_max(mut self, h: T) -> Self {
        self.h_max = Some(h);
        self
    }
}

/// Scalar event function `g(t, y)`; an event fires when `g` changes sign.
pub type EventFn<'a, T, const N: usize> = &'a dyn Fn(T, &[T; N]) -> T;

/// Continuous extension of one accepted step.
#[derive(Debug, Clone)]
struct DenseStep<T, const N: usize> {
    t0: T,
    h: T,
    coeffs: [[T; N]; 5],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    fn eval(&self, t: T) -> [T; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = T::one() - theta;
        let c = &self.coeffs;
        std::array::from_fn(|i| c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i]))))
    }

    fn t1(&self) -> T {
        self.t0 + self.h
    }
}

/// Trajectory on the accepted step grid plus a dense interpolant.
#[derive(Debug, Clone)]
pub struct IvpResult<T, const N: usize> {
    pub times: Vec<T>,
    pub states: Vec<[T; N]>,
    pub termination: Termination<T>,
    pub rhs_evals: usize,
    dense: Vec<DenseStep<T, N>>,
}

impl<T: Real, const N: usize> IvpResult<T, N> {
    pub fn t_final(&self) -> T {
        *self.times.last().expect("trajectory holds the initial point")
    }

    pub fn y_final(&self) -> [T; N] {
        *self.states.last().expect("trajectory holds the initial point")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Evaluates the dense output; `None` outside the integrated range.
    pub fn eval(&self, t: T) -> Option<[T; N]> {
        if self.dense.is_empty() {
            return (t == self.times[0]).then(|| self.states[0]);
        }
        let forward = self.dense[0].h > T::zero();
        let (lo, hi) = if forward { (self.times[0], self.t_final()) } else { (self.t_final(), self.times[0]) };
        if t < lo || t > hi {
            return None;
        }
        // steps are monotone in t, binary search for the containing step
        let idx = self.dense.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        let idx = idx.min(self.dense.len() - 1);
        Some(self.dense[idx].eval(t))
    }
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn all_finite<T: Real, const N: usize>(v: &[T; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    std::array::from_fn(|i| {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + T::lit(*c) * k[i];
        }
        y[i] + h * acc
    })
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// Events are terminal: the first sign change of any event function stops the
/// integration at the bisected crossing time, which becomes the final sample.
pub fn integrate_ivp<T, const N: usize, F>(
    mut rhs: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    opts: &IvpOptions<T>,
    events: &[EventFn<'_, T, N>],
) -> Result<IvpResult<T, N>, IvpError>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
{
    if !(opts.rtol > T::zero()) || opts.atol < T::zero() {
        return Err(IvpError::InvalidTolerance {
            rtol: opts.rtol.to_f64().unwrap_or(f64::NAN),
            atol: opts.atol.to_f64().unwrap_or(f64::NAN),
        });
    }
    if t_end == t0 {
        return Err(IvpError::EmptySpan);
    }
    if !all_finite(&y0) {
        return Err(IvpError::NonFiniteState);
    }
    let dir = if t_end > t0 { T::one() } else { -T::one() };
    let span = (t_end - t0).abs();
    let h_max = opts.h_max.unwrap_or(span).min(span);

    let mut k1 = rhs(t0, &y0);
    let mut evals = 1usize;
    if !all_finite(&k1) {
        return Err(IvpError::NonFiniteRhs { t0: t0.to_f64().unwrap_or(f64::NAN) });
    }

    let scale = |a: &[T; N], b: &[T; N], i: usize| opts.atol + opts.rtol * a[i].abs().max(b[i].abs());

    let mut h = match opts.h_init {
        Some(h) => h.abs().min(h_max),
        None => {
            // Hairer's starting step heuristic
            let mut d0 = T::zero();
            let mut d1 = T::zero();
            for i in 0..N {
                let sk = scale(&y0, &y0, i);
                d0 = d0 + (y0[i] / sk).powi(2);
                d1 = d1 + (k1[i] / sk).powi(2);
            }
            let n = T::from_usize_lossy(N);
            d0 = (d0 / n).sqrt();
            d1 = (d1 / n).sqrt();
            let h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 }.min(h_max);
            let y1: [T; N] = std::array::from_fn(|i| y0[i] + dir * h0 * k1[i]);
            let f1 = rhs(t0 + dir * h0, &y1);
            evals += 1;
            let mut d2 = T::zero();
            for i in 0..N {
                let sk = scale(&y0, &y0, i);
                d2 = d2 + ((f1[i] - k1[i]) / sk).powi(2);
            }
            let d2 = (d2 / n).sqrt() / h0;
            let h1 = if !d2.is_finite() || d1.max(d2) <= T::lit(1e-15) {
                (h0 * T::lit(1e-3)).max(T::lit(1e-6))
            } else {
                (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
            };
            (T::lit(100.0) * h0).min(h1).min(h_max)
        }
    };

    let mut times = vec![t0];
    let mut states = vec![y0];
    let mut dense: Vec<DenseStep<T, N>> = Vec::new();
    let mut t = t0;
    let mut y = y0;
    let mut g_prev: Vec<T> = events.iter().map(|g| g(t0, &y0)).collect();
    let mut err_old = T::lit(1e-4);
    let mut last_reject_nonfinite = false;
    let mut reject_prev = false;
    let beta = T::lit(0.04);
    let expo1 = T::lit(0.2) - beta * T::lit(0.75);
    let safe = T::lit(0.9);
    let fac_min = T::lit(0.2);
    let fac_max = T::lit(10.0);

    for _ in 0..opts.max_steps {
        let remaining = (t_end - t).abs();
        if remaining <= T::epsilon() * t.abs().max(T::one()) {
            return Ok(IvpResult { times, states, termination: Termination::ReachedEnd, rhs_evals: evals, dense });
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let h_floor = T::lit(16.0) * T::epsilon() * t.abs().max(T::lit(1e-300).max(T::min_positive_value()));
        if h <= h_floor {
            let termination = if last_reject_nonfinite { Termination::NonFinite { t } } else { Termination::StepUnderflow { t } };
            return Ok(IvpResult { times, states, termination, rhs_evals: evals, dense });
        }
        let hs = dir * h;

        let y2 = axpy(&y, hs, &[(A21, &k1)]);
        let k2 = rhs(t + T::lit(C2) * hs, &y2);
        let y3 = axpy(&y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + T::lit(C3) * hs, &y3);
        let y4 = axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + T::lit(C4) * hs, &y4);
        let y5 = axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + T::lit(C5) * hs, &y5);
        let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last { t_end } else { t + hs };
        let k6 = rhs(t_new, &y6);
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t_new, &y_new);
        evals += 6;

        let finite = [&k2, &k3, &k4, &k5, &k6, &k7].iter().all(|k| all_finite(k)) && all_finite(&y_new);
        if !finite {
            last_reject_nonfinite = true;
            h = h * T::lit(0.25);
            reject_prev = true;
            continue;
        }

        let mut err = T::zero();
        for i in 0..N {
            let e = hs
                * (T::lit(E1) * k1[i]
                    + T::lit(E3) * k3[i]
                    + T::lit(E4) * k4[i]
                    + T::lit(E5) * k5[i]
                    + T::lit(E6) * k6[i]
                    + T::lit(E7) * k7[i]);
            let sk = scale(&y, &y_new, i);
            err = err + (e / sk).powi(2);
        }
        err = (err / T::from_usize_lossy(N)).sqrt();

        if !err.is_finite() {
            last_reject_nonfinite = true;
            h = h * T::lit(0.25);
            reject_prev = true;
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= T::one() {
            last_reject_nonfinite = false;
            let mut fac = fac11 / err_old.powf(beta);
            fac = (fac / safe).max(T::one() / fac_max).min(T::one() / fac_min);
            let mut h_new = h / fac;
            if reject_prev {
                h_new = h_new.min(h);
            }
            err_old = err.max(T::lit(1e-4));
            reject_prev = false;

            let r2: [T; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let r3: [T; N] = std::array::from_fn(|i| hs * k1[i] - r2[i]);
            let r4: [T; N] = std::array::from_fn(|i| r2[i] - hs * k7[i] - r3[i]);
            let r5: [T; N] = std::array::from_fn(|i| {
                hs * (T::lit(D1) * k1[i]
                    + T::lit(D3) * k3[i]
                    + T::lit(D4) * k4[i]
                    + T::lit(D5) * k5[i]
                    + T::lit(D6) * k6[i]
                    + T::lit(D7) * k7[i])
            });
            let step = DenseStep { t0: t, h: t_new - t, coeffs: [y, r2, r3, r4, r5] };

            // terminal event detection on the accepted step
            let g_new: Vec<T> = events.iter().map(|g| g(t_new, &y_new)).collect();
            let mut fired: Option<(usize, T)> = None;
            for (idx, g) in events.iter().enumerate() {
                let (s0, s1) = (sign(g_prev[idx]), sign(g_new[idx]));
                if s0 != 0 && s1 != s0 {
                    // bisect on the dense output
                    let (mut a, mut b) = (t, t_new);
                    while (b - a).abs() > opts.event_tol {
                        let m = a + (b - a) / T::lit(2.0);
                        if m == a || m == b {
                            break;
                        }
                        let gm = g(m, &step.eval(m));
                        if sign(gm) == s0 {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    let te = b;
                    let earlier = match fired {
                        None => true,
                        Some((_, tf)) => (te - t).abs() < (tf - t).abs(),
                    };
                    if earlier {
                        fired = Some((idx, te));
                    }
                }
            }
            if let Some((index, te)) = fired {
                let ye = step.eval(te);
                // the interpolant of the full step stays valid on [t, te]
                times.push(te);
                states.push(ye);
                dense.push(step);
                return Ok(IvpResult { times, states, termination: Termination::Event { index, t: te }, rhs_evals: evals, dense });
            }
            g_prev = g_new;

            dense.push(step);
            t = t_new;
            y = y_new;
            k1 = k7;
            times.push(t);
            states.push(y);
            if last {
                return Ok(IvpResult { times, states, termination: Termination::ReachedEnd, rhs_evals: evals, dense });
            }
            h = h_new.min(h_max);
        } else {
            last_reject_nonfinite = false;
            h = h / (T::one() / fac_min).min(fac11 / safe);
            reject_prev = true;
        }
    }
    Ok(IvpResult { times, states, termination: Termination::MaxSteps { t }, rhs_evals: evals, dense })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn free_motion_is_exact() {
        let delta = 0.0;
        let res =
            integrate_ivp(|_t, y: &[f64; 2]| [y[1], -delta / (y[0] * y[0])], 0.0, [1.0, 1.0], 2.0, &IvpOptions::default(), &[]).unwrap();
        assert!(res.termination.reached_end());
        assert_relative_eq!(res.y_final()[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn energy_of_inverse_square_attraction_is_conserved() {
        // lambda'' = -delta / lambda^2 conserves 1/2 lambda'^2 - delta / lambda
        let delta = 1.0;
        let tol = 1e-10;
        let opts = IvpOptions::with_tol(tol, 1e-14);
        let res = integrate_ivp(|_t, y: &[f64; 2]| [y[1], -delta / (y[0] * y[0])], 0.0, [1.0, 0.0], 1.0, &opts, &[]).unwrap();
        let e0 = -delta;
        for y in &res.states {
            let e = 0.5 * y[1] * y[1] - delta / y[0];
            assert!((e - e0).abs() <= 10.0 * tol * e0.abs(), "drift {}", e - e0);
        }
    }

    #[test]
    fn backward_integration_and_dense_output() {
        let res = integrate_ivp(|_t, y: &[f64; 1]| [y[0]], 1.0, [1.0_f64.exp()], -1.0, &IvpOptions::default(), &[]).unwrap();
        assert_relative_eq!(res.y_final()[0], (-1.0_f64).exp(), max_relative = 1e-9);
        for &t in &[0.73, -0.2, 0.0, -0.999] {
            assert_relative_eq!(res.eval(t).unwrap()[0], f64::exp(t), max_relative = 1e-8);
        }
        assert!(res.eval(1.5).is_none());
    }

    #[test]
    fn event_brackets_the_crossing() {
        let g = |_t: f64, y: &[f64; 1]| y[0] - 0.5;
        let res = integrate_ivp(|_t, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 10.0, &IvpOptions::default(), &[&g]).unwrap();
        match res.termination {
            Termination::Event { index, t } => {
                assert_eq!(index, 0);
                assert!((t - 2.0_f64.ln()).abs() < 1e-10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blow_up_reports_underflow_not_error() {
        // y' = y^2 blows up at t = 1
        let res = integrate_ivp(|_t, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &IvpOptions::default(), &[]).unwrap();
        assert!(matches!(res.termination, Termination::StepUnderflow { .. } | Termination::NonFinite { .. }));
        assert!((res.t_final() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nonfinite_initial_rhs_is_an_error() {
        let err = integrate_ivp(|_t, y: &[f64; 1]| [1.0 / (y[0] - 1.0)], 0.0, [1.0], 1.0, &IvpOptions::default(), &[]).unwrap_err();
        assert!(matches!(err, IvpError::NonFiniteRhs { .. }));
    }

    #[test]
    fn works_in_single_precision() {
        let opts = IvpOptions::<f32>::with_tol(1e-5, 1e-7);
        let res = integrate_ivp(|_t, y: &[f32; 2]| [y[1], -y[0]], 0.0f32, [1.0, 0.0], 3.0, &opts, &[]).unwrap();
        assert!((res.y_final()[0] - 3.0f32.cos()).abs() < 1e-4);
    }
}
