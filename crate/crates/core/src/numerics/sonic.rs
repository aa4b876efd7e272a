//! Analytic solutions through a sonic point of `den · u' = num_u`, `den · v' = num_v`.
//!
//! At a sonic point `den` and both numerators vanish. The first-order
//! coefficients solve a quadratic (two branches, eigenvectors of the 3×3
//! Jacobian of `(den, num_u, num_v)`); every later order is a 2×2 linear
//! system. The residual at order `k` is affine in `(u_k, v_k)`, so the system
//! is assembled by probing the series residual at three points instead of
//! differentiating by hand.

use std::ops::{Add, Div, Mul, Sub};

use thiserror::Error;

use super::linalg::solve2;
use super::scalar::Real;
use super::series::SeriesF;

/// Arithmetic shared by scalars and truncated series, so that a vector field
/// written once can be evaluated pointwise or expanded.
pub trait Field<T: Real>: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    /// Constant with the same shape as `self`.
    fn cst(&self, c: T) -> Self;
    fn powf(&self, p: T) -> Self;
    fn sqrt(&self) -> Self;
}

impl<T: Real> Field<T> for T {
    fn cst(&self, c: T) -> Self {
        c
    }
    fn powf(&self, p: T) -> Self {
        num_traits::Float::powf(*self, p)
    }
    fn sqrt(&self) -> Self {
        num_traits::Float::sqrt(*self)
    }
}

impl<T: Real> Field<T> for SeriesF<T> {
    fn cst(&self, c: T) -> Self {
        SeriesF::constant(c, self.order())
    }
    // Invalid expansions poison the result with NaN rather than panicking; the
    // sonic solver checks finiteness of every solved coefficient.
    fn powf(&self, p: T) -> Self {
        SeriesF::powf(self, p).unwrap_or_else(|_| SeriesF::constant(T::nan(), self.order()))
    }
    fn sqrt(&self) -> Self {
        SeriesF::sqrt(self).unwrap_or_else(|_| SeriesF::constant(T::nan(), self.order()))
    }
}

/// A planar system `den · (u', v') = (num_u, num_v)` in the independent variable `x`.
pub trait SingularSystem<T: Real> {
    fn den<F: Field<T>>(&self, x: &F, u: &F, v: &F) -> F;
    fn num_u<F: Field<T>>(&self, x: &F, u: &F, v: &F) -> F;
    fn num_v<F: Field<T>>(&self, x: &F, u: &F, v: &F) -> F;

    fn rhs_unchecked(&self, x: T, u: T, v: T) -> [T; 2] {
        let d = self.den(&x, &u, &v);
        [self.num_u(&x, &u, &v) / d, self.num_v(&x, &u, &v) / d]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SonicError {
    #[error("degenerate recursion matrix at order {order} (sonic point {x_star})")]
    DegenerateRecursion { order: usize, x_star: f64 },
    #[error("branch inconsistency at sonic point {x_star}: {reason}")]
    BranchInconsistency { x_star: f64, reason: String },
    #[error("non-finite coefficient at order {order} (sonic point {x_star})")]
    NonFinite { order: usize, x_star: f64 },
    #[error("expansion order must be at least 2, got {0}")]
    OrderTooLow(usize),
}

/// First-order data of one branch through a sonic point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SonicBranch<T> {
    /// Derivative of the denominator along the branch.
    pub slope: T,
    pub u1: T,
    pub v1: T,
}

/// Jacobian of `(den, num_u, num_v)` with respect to `(x, u, v)` at a point.
pub fn jacobian<T: Real, S: SingularSystem<T>>(sys: &S, x: T, u: T, v: T) -> [[T; 3]; 3] {
    let mut m = [[T::zero(); 3]; 3];
    for (col, seed) in
        [[T::one(), T::zero(), T::zero()], [T::zero(), T::one(), T::zero()], [T::zero(), T::zero(), T::one()]].iter().enumerate()
    {
        let xs = SeriesF::from_slice(&[x, seed[0]], 1);
        let us = SeriesF::from_slice(&[u, seed[1]], 1);
        let vs = SeriesF::from_slice(&[v, seed[2]], 1);
        m[0][col] = sys.den(&xs, &us, &vs).coeff(1);
        m[1][col] = sys.num_u(&xs, &us, &vs).coeff(1);
        m[2][col] = sys.num_v(&xs, &us, &vs).coeff(1);
    }
    m
}

fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// The two first-order branches, ordered by increasing denominator slope.
pub fn sonic_branches<T: Real, S: SingularSystem<T>>(sys: &S, x: T, u0: T, v0: T) -> Result<[SonicBranch<T>; 2], SonicError> {
    let x_star = x.to_f64().unwrap_or(f64::NAN);
    let m = jacobian(sys, x, u0, v0);
    // One eigenvalue vanishes at a sonic point (the numerators are multiples of
    // the denominator to first order), leaving a quadratic.
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let disc = tr * tr - T::lit(4.0) * minors;
    if !(disc >= T::zero()) {
        return Err(SonicError::BranchInconsistency {
            x_star,
            reason: format!("first-order quadratic has no real root (discriminant {})", disc),
        });
    }
    let sq = disc.sqrt();
    let mut out = [SonicBranch { slope: T::zero(), u1: T::zero(), v1: T::zero() }; 2];
    for (slot, lambda) in [(tr - sq) / T::lit(2.0), (tr + sq) / T::lit(2.0)].into_iter().enumerate() {
        let rows: [[T; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] - if i == j { lambda } else { T::zero() }));
        let cands = [cross(rows[0], rows[1]), cross(rows[0], rows[2]), cross(rows[1], rows[2])];
        let norm = |c: &[T; 3]| c.iter().fold(T::zero(), |a, &v| a + v * v);
        let best = cands.iter().copied().fold(cands[0], |b, c| if norm(&c) > norm(&b) { c } else { b });
        if !(best[0].abs() > T::lit(1e-12) * norm(&best).sqrt()) {
            return Err(SonicError::BranchInconsistency {
                x_star,
                reason: format!("branch with slope {} is tangent to the sonic curve", lambda),
            });
        }
        out[slot] = SonicBranch { slope: lambda, u1: best[1] / best[0], v1: best[2] / best[0] };
    }
    Ok(out)
}

/// Residual coefficients of order `k` for trial coefficients `u`, `v` (length `k + 1`).
pub fn order_residual<T: Real, S: SingularSystem<T>>(sys: &S, x: T, u: &[T], v: &[T], k: usize) -> [T; 2] {
    // One extra order so that the derivative still reaches z^k; the padded top
    // coefficient multiplies the vanishing constant term of `den`.
    let xs = SeriesF::variable(x, k + 1);
    let us = SeriesF::from_slice(u, k + 1);
    let vs = SeriesF::from_slice(v, k + 1);
    let den = sys.den(&xs, &us, &vs);
    let ru = &den * &us.derivative() - sys.num_u(&xs, &us, &vs).truncate(k);
    let rv = &den * &vs.derivative() - sys.num_v(&xs, &us, &vs).truncate(k);
    [ru.coeff(k), rv.coeff(k)]
}

/// Taylor coefficients `(u_k, v_k)` for `k = 0..=order` on the given branch.
pub fn expand_sonic<T: Real, S: SingularSystem<T>>(
    sys: &S,
    x: T,
    u0: T,
    v0: T,
    branch: SonicBranch<T>,
    order: usize,
) -> Result<(Vec<T>, Vec<T>), SonicError> {
    let x_star = x.to_f64().unwrap_or(f64::NAN);
    if order < 2 {
        return Err(SonicError::OrderTooLow(order));
    }
    let mut u = vec![u0, branch.u1];
    let mut v = vec![v0, branch.v1];
    for k in 2..=order {
        u.push(T::zero());
        v.push(T::zero());
        let r0 = order_residual(sys, x, &u, &v, k);
        u[k] = T::one();
        let ru = order_residual(sys, x, &u, &v, k);
        u[k] = T::zero();
        v[k] = T::one();
        let rv = order_residual(sys, x, &u, &v, k);
        v[k] = T::zero();
        let a = [[ru[0] - r0[0], rv[0] - r0[0]], [ru[1] - r0[1], rv[1] - r0[1]]];
        let sol = solve2(a, [-r0[0], -r0[1]]).ok_or(SonicError::DegenerateRecursion { order: k, x_star })?;
        if !(sol[0].is_finite() && sol[1].is_finite()) {
            return Err(SonicError::NonFinite { order: k, x_star });
        }
        u[k] = sol[0];
        v[k] = sol[1];
    }
    Ok((u, v))
}

/// Smallest `C` with `|c_k| k² ≤ C^k` for `k = 2..`, over several sequences.
pub fn growth_constant<T: Real>(seqs: &[&[T]]) -> T {
    let mut c = T::zero();
    for s in seqs {
        for (k, &a) in s.iter().enumerate().skip(2) {
            let kt = T::from_usize_lossy(k);
            let v = (a.abs() * kt * kt).powf(T::one() / kt);
            if v.is_finite() {
                c = c.max(v);
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn growth_constant_of_geometric() {
        let s: Vec<f64> = (0..20).map(|k| 3f64.powi(k) / ((k * k).max(1) as f64)).collect();
        assert_relative_eq!(growth_constant(&[&s]), 3.0, epsilon = 1e-12);
    }
}
