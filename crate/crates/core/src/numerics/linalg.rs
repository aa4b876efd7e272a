//! Fixed-size dense linear algebra for 2×2 and 3×3 problems.

use std::ops::{Add, Mul, Sub};

use super::scalar::Real;

/// Solves `[[a, b], [c, d]] x = r` by Cramer's rule; `None` if singular.
pub fn solve2<T: Real>(m: [[T; 2]; 2], r: [T; 2]) -> Option<[T; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(T::zero(), |a, &v| a.max(v.abs()));
    if det == T::zero() || det.abs() <= T::lit(64.0) * T::epsilon() * scale * scale {
        return None;
    }
    Some([(r[0] * m[1][1] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - m[1][0] * r[0]) / det])
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn zero() -> Self {
        Self([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag([T::one(); 3])
    }

    pub fn diag(d: [T; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_flat(v: &[T]) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| v[3 * i + j])))
    }

    pub fn to_flat(&self) -> [T; 9] {
        std::array::from_fn(|k| self.0[k / 3][k % 3])
    }

    pub fn transpose(&self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    pub fn scale(&self, k: T) -> Self {
        Self(self.0.map(|row| row.map(|v| v * k)))
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Cofactor matrix; `cof(A) = det(A) · A^{-T}`.
    pub fn cofactor(&self) -> Self {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Self([
            [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
            [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
            [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
        ])
    }

    pub fn adjugate(&self) -> Self {
        self.cofactor().transpose()
    }

    /// `A^{-T}`, `None` for a singular matrix.
    pub fn inverse_transpose(&self) -> Option<Self> {
        let d = self.det();
        (d != T::zero() && d.is_finite()).then(|| self.cofactor().scale(T::one() / d))
    }

    pub fn frobenius_sq(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |a, &v| a + v * v)
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |a, &v| a.max(v.abs()))
    }

    /// Eigenvalues of the symmetric part, ascending (cyclic Jacobi sweeps).
    pub fn symmetric_eigenvalues(&self) -> [T; 3] {
        let half = T::lit(0.5);
        let mut a: [[T; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| half * (self.0[i][j] + self.0[j][i])));
        for _ in 0..50 {
            let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
            let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
            if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2]];
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    /// Singular values, ascending, from the eigenvalues of `AᵀA`.
    pub fn singular_values(&self) -> [T; 3] {
        (self.transpose() * *self).symmetric_eigenvalues().map(|l| l.max(T::zero()).sqrt())
    }

    pub fn mul_vec(&self, v: [T; 3]) -> [T; 3] {
        std::array::from_fn(|i| self.0[i][0] * v[0] + self.0[i][1] * v[1] + self.0[i][2] * v[2])
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| (0..3).fold(T::zero(), |a, k| a + self.0[i][k] * rhs.0[k][j]))))
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + rhs.0[i][j])))
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] - rhs.0[i][j])))
    }
}
