//! Taylor expansion of Newtonian profiles through a sonic point.

use serde::{Deserialize, Serialize};

use super::{GammaParams, NewtState, NewtonianError, NewtonianSystem};
use crate::numerics::linalg::solve2;
use crate::numerics::roots::{refine_root, RootBracket};
use crate::numerics::sonic::{expand_sonic, growth_constant, order_residual, sonic_branches, SingularSystem, SonicBranch};
use crate::numerics::SonicError;

/// First-order branch through a sonic point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Larson–Penston type.
    Type1,
    /// Hunter type.
    Type2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SonicExpansion {
    pub y_star: f64,
    pub branch: Branch,
    pub params: GammaParams,
    /// Taylor coefficients in powers of `y - y_star`.
    pub rho: Vec<f64>,
    pub omega: Vec<f64>,
    pub delta_trust: f64,
    /// Smallest `C` with `|c_N| N² ≤ C^N` for `N ≥ 2`.
    pub growth_constant: f64,
}

/// Sonic state `(rho_0, omega_0)`: the denominator and the density numerator vanish.
pub fn sonic_state(y_star: f64, params: GammaParams) -> Result<(f64, f64), NewtonianError> {
    if !(y_star > 0.0) {
        return Err(NewtonianError::NoSonicState { y_star, reason: "y* must be positive".into() });
    }
    if params.is_isothermal() {
        return Ok((1.0 / y_star, 1.0 / y_star));
    }
    let g = params.gamma();
    // h(rho, omega) = 0 fixes rho as a function of omega
    let rho_of = |w: f64| (4.0 - 3.0 * g) * (2.0 * w * w + (g - 1.0) * w + (g - 1.0) * (2.0 - g)) / (4.0 * std::f64::consts::PI * w);
    let f = |lw: f64| {
        let w = lw.exp();
        g * rho_of(w).powf(g - 1.0) - y_star * y_star * w * w
    };
    let (mut lo, mut hi) = ((1e-12f64).ln(), 0.0f64);
    while f(hi) > 0.0 {
        hi += 2.0;
        if hi > 50.0 {
            return Err(NewtonianError::NoSonicState { y_star, reason: "denominator stays positive".into() });
        }
    }
    if f(lo) <= 0.0 {
        lo = hi - 60.0;
    }
    let br = RootBracket::from_fn(f, lo, hi).map_err(|e| NewtonianError::NoSonicState { y_star, reason: e.to_string() })?;
    let w = refine_root(f, br, 1e-15).map_err(|e| NewtonianError::NoSonicState { y_star, reason: e.to_string() })?.exp();
    Ok((rho_of(w), w))
}

/// Explicit first-order coefficients `(rho_1, omega_1)` for γ = 1.
///
/// On the Type-1 branch `omega_1 = (1 - 2/y*)/y*` is positive across the
/// window, so omega increases through the sonic point.
pub fn isothermal_branch(y: f64, branch: Branch) -> (f64, f64) {
    match branch {
        Branch::Type1 => (-1.0 / (y * y), (1.0 / y) * (1.0 - 2.0 / y)),
        Branch::Type2 => ((1.0 / y) * (1.0 - 3.0 / y), 0.0),
    }
}

/// Recursion matrix of the isothermal expansion at order `n`.
///
/// Rows are the density and velocity equations multiplied through by `y*`,
/// with the first-order coefficients entering as `y* ω₁`, `y* ρ₁`.
pub fn isothermal_recursion_matrix(n: usize, omega0: f64, omega1: f64, rho1: f64) -> [[f64; 2]; 2] {
    let n = n as f64;
    [
        [-2.0 * n + 2.0 - 2.0 * n * omega1 / omega0, -2.0 * rho1 / omega0 - 2.0],
        [-2.0, -2.0 * n - 4.0 + 2.0 / omega0 - (2.0 * n + 2.0) * omega1 / omega0],
    ]
}

fn generic_branch(sys: &NewtonianSystem, y: f64, rho0: f64, omega0: f64, branch: Branch) -> Result<SonicBranch<f64>, SonicError> {
    let [low, high] = sonic_branches(sys, y, rho0, omega0)?;
    // Type 1 is the branch along which the denominator falls faster; for γ = 1
    // this matches the explicit formulas for every y* > 2, where the two
    // branches separate.
    Ok(match branch {
        Branch::Type1 => low,
        Branch::Type2 => high,
    })
}

/// Taylor coefficients to order `order` at the sonic point `y_star`.
pub fn sonic_taylor(y_star: f64, branch: Branch, params: GammaParams, order: usize) -> Result<SonicExpansion, NewtonianError> {
    if order < 2 {
        return Err(SonicError::OrderTooLow(order).into());
    }
    let sys = NewtonianSystem::new(params);
    let (rho0, omega0) = sonic_state(y_star, params)?;
    let (rho, omega) = if params.is_isothermal() {
        let (rho1, omega1) = isothermal_branch(y_star, branch);
        let mut rho = vec![rho0, rho1];
        let mut omega = vec![omega0, omega1];
        for n in 2..=order {
            rho.push(0.0);
            omega.push(0.0);
            let r0 = order_residual(&sys, y_star, &rho, &omega, n);
            let a = isothermal_recursion_matrix(n, omega0, y_star * omega1, y_star * rho1);
            let x = solve2(a, [-y_star * r0[0], -y_star * r0[1]]).ok_or(SonicError::DegenerateRecursion { order: n, x_star: y_star })?;
            rho[n] = x[0];
            omega[n] = x[1];
        }
        (rho, omega)
    } else {
        let br = generic_branch(&sys, y_star, rho0, omega0, branch)?;
        expand_sonic(&sys, y_star, rho0, omega0, br, order)?
    };
    let growth = growth_constant(&[&rho, &omega]);
    Ok(SonicExpansion { y_star, branch, params, rho, omega, delta_trust: 0.05 * y_star, growth_constant: growth })
}

/// Generic-method coefficients, used to cross-check the explicit γ = 1 recursion.
pub fn sonic_taylor_generic(
    y_star: f64,
    branch: Branch,
    params: GammaParams,
    order: usize,
) -> Result<(Vec<f64>, Vec<f64>), NewtonianError> {
    let sys = NewtonianSystem::new(params);
    let (rho0, omega0) = sonic_state(y_star, params)?;
    let br = generic_branch(&sys, y_star, rho0, omega0, branch)?;
    Ok(expand_sonic(&sys, y_star, rho0, omega0, br, order)?)
}

fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * z + a)
}

fn horner_derivative(c: &[f64], z: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &a)| acc * z + k as f64 * a)
}

impl SonicExpansion {
    pub fn order(&self) -> usize {
        self.rho.len() - 1
    }

    pub fn with_trust_radius(mut self, delta: f64) -> Self {
        self.delta_trust = delta;
        self
    }

    /// Size of the last retained terms at `y`.
    pub fn tail_estimate(&self, y: f64) -> f64 {
        let z = y - self.y_star;
        let n = self.order();
        let zn = z.abs().powi(n as i32);
        (self.rho[n].abs() * zn).max(self.omega[n].abs() * zn)
    }

    /// Horner evaluation; errors outside the trust radius.
    pub fn local_eval(&self, y: f64) -> Result<(NewtState, f64), NewtonianError> {
        let z = y - self.y_star;
        if !(z.abs() <= self.delta_trust * (1.0 + 1e-12)) {
            return Err(NewtonianError::OutsideTrustRadius { y, y_star: self.y_star, delta: self.delta_trust });
        }
        Ok((self.eval_unchecked(y), self.tail_estimate(y)))
    }

    pub fn eval_unchecked(&self, y: f64) -> NewtState {
        let z = y - self.y_star;
        NewtState { y, rho: horner(&self.rho, z), omega: horner(&self.omega, z) }
    }

    /// `(rho', omega')` of the truncated series.
    pub fn derivative(&self, y: f64) -> [f64; 2] {
        let z = y - self.y_star;
        [horner_derivative(&self.rho, z), horner_derivative(&self.omega, z)]
    }

    /// Pointwise ODE defect `G·u' - num` of the truncated series at `y`.
    pub fn defect(&self, y: f64) -> [f64; 2] {
        let s = self.eval_unchecked(y);
        let d = self.derivative(y);
        let sys = NewtonianSystem::new(self.params);
        let den = sys.den(&y, &s.rho, &s.omega);
        [den * d[0] - sys.num_u(&y, &s.rho, &s.omega), den * d[1] - sys.num_v(&y, &s.rho, &s.omega)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_branches_reproduce_the_explicit_formulas() {
        let p = GammaParams::isothermal();
        let sys = NewtonianSystem::new(p);
        for &y in &[2.05, 2.41, 2.5, 2.95] {
            for b in [Branch::Type1, Branch::Type2] {
                let g = generic_branch(&sys, y, 1.0 / y, 1.0 / y, b).unwrap();
                let (r1, w1) = isothermal_branch(y, b);
                assert!((g.u1 - r1).abs() < 1e-12 && (g.v1 - w1).abs() < 1e-12, "{y} {b:?}: {g:?}");
            }
        }
    }

    #[test]
    fn explicit_matrix_equals_probed_matrix() {
        let p = GammaParams::isothermal();
        let sys = NewtonianSystem::new(p);
        let y = 2.5;
        let (r1, w1) = isothermal_branch(y, Branch::Type1);
        let mut rho = vec![0.4, r1];
        let mut omega = vec![0.4, w1];
        for n in 2..6 {
            rho.push(0.0);
            omega.push(0.0);
            let r0 = order_residual(&sys, y, &rho, &omega, n);
            rho[n] = 1.0;
            let ru = order_residual(&sys, y, &rho, &omega, n);
            rho[n] = 0.0;
            omega[n] = 1.0;
            let rw = order_residual(&sys, y, &rho, &omega, n);
            omega[n] = 0.0;
            let a = isothermal_recursion_matrix(n, 0.4, y * w1, y * r1);
            let probed = [[ru[0] - r0[0], rw[0] - r0[0]], [ru[1] - r0[1], rw[1] - r0[1]]];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - y * probed[i][j]).abs() < 1e-12, "order {n} entry {i}{j}");
                }
            }
            let x = solve2(a, [-y * r0[0], -y * r0[1]]).unwrap();
            rho[n] = x[0];
            omega[n] = x[1];
        }
    }

    #[test]
    fn polytropic_sonic_state_is_sonic() {
        for &g in &[1.1, 1.2, 1.3] {
            let p = GammaParams::new(g).unwrap();
            for &y in &[2.0, 4.0, 10.0] {
                let (rho, omega) = sonic_state(y, p).unwrap();
                let sys = NewtonianSystem::new(p);
                assert!(sys.den(&y, &rho, &omega).abs() < 1e-12);
                assert!(sys.num_u(&y, &rho, &omega).abs() < 1e-12);
                assert!(sys.num_v(&y, &rho, &omega).abs() < 1e-12);
            }
        }
    }
}
