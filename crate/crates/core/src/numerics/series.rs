//! Truncated power series `a_0 + a_1 x + ... + a_N x^N`.
//!
//! Binary operations truncate to the smaller of the two orders. Coefficients
//! only need ring/field operations, so exact types such as `Ratio<i64>` work for
//! everything except real-exponent powers.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Num;
use thiserror::Error;

use super::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("a series needs at least one coefficient")]
    Empty,
    #[error("division by a series with zero constant term")]
    ZeroLeading,
    #[error("real power of a series needs a positive constant term, got {0}")]
    NonPositiveLeading(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesF<T> {
    coeffs: Vec<T>,
}

impl<T: Clone + Num> SeriesF<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        Ok(Self { coeffs })
    }

    /// Series with the given leading coefficients, zero-padded or cut to `order`.
    pub fn from_slice(c: &[T], order: usize) -> Self {
        let coeffs = (0..=order).map(|i| c.get(i).cloned().unwrap_or_else(T::zero)).collect();
        Self { coeffs }
    }

    pub fn constant(c: T, order: usize) -> Self {
        Self::from_slice(&[c], order)
    }

    /// The expansion variable itself, `x0 + x`.
    pub fn variable(x0: T, order: usize) -> Self {
        Self::from_slice(&[x0, T::one()], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_slice(&self.coeffs, order)
    }

    pub fn scale(&self, k: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.clone() * k.clone()).collect() }
    }

    /// Horner evaluation at offset `x` from the expansion point.
    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// Term-wise derivative; the result has order `N - 1` (order 0 stays 0).
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(T::zero(), 0);
        }
        let mut k = T::zero();
        let coeffs = self.coeffs[1..]
            .iter()
            .map(|c| {
                k = k.clone() + T::one();
                c.clone() * k.clone()
            })
            .collect();
        Self { coeffs }
    }

    /// Multiplicative inverse by the quotient recursion.
    pub fn recip(&self) -> Result<Self, SeriesError> {
        Self::constant(T::one(), self.order()).checked_div(self)
    }

    /// Quotient by the recursion `q_k = (a_k - sum_{j<k} q_j b_{k-j}) / b_0`.
    pub fn checked_div(&self, rhs: &Self) -> Result<Self, SeriesError> {
        let b0 = rhs.coeffs[0].clone();
        if b0.is_zero() {
            return Err(SeriesError::ZeroLeading);
        }
        let n = self.order().min(rhs.order());
        let mut q: Vec<T> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = self.coeffs[k].clone();
            for j in 0..k {
                acc = acc - q[j].clone() * rhs.coeffs[k - j].clone();
            }
            q.push(acc / b0.clone());
        }
        Ok(Self { coeffs: q })
    }

    /// `s^p` given the constant term `c0 = a_0^p`, via `(s^p)' s = p s^p s'`.
    ///
    /// Exact for exact coefficient types whenever `c0` is.
    pub fn pow_with_leading(&self, p: T, c0: T) -> Result<Self, SeriesError> {
        let a0 = self.coeffs[0].clone();
        if a0.is_zero() {
            return Err(SeriesError::ZeroLeading);
        }
        let n = self.order();
        let mut c: Vec<T> = Vec::with_capacity(n + 1);
        c.push(c0);
        let mut kk = T::zero();
        for k in 1..=n {
            kk = kk.clone() + T::one();
            let mut acc = T::zero();
            let mut jj = T::zero();
            for j in 1..=k {
                jj = jj.clone() + T::one();
                // (p j - (k - j)) a_j c_{k-j}
                let w = p.clone() * jj.clone() - (kk.clone() - jj.clone());
                acc = acc + w * self.coeffs[j].clone() * c[k - j].clone();
            }
            c.push(acc / (kk.clone() * a0.clone()));
        }
        Ok(Self { coeffs: c })
    }

    fn zip(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        let n = self.order().min(rhs.order());
        Self { coeffs: (0..=n).map(|k| f(self.coeffs[k].clone(), rhs.coeffs[k].clone())).collect() }
    }

    fn cauchy(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let coeffs = (0..=n).map(|k| (0..=k).fold(T::zero(), |acc, j| acc + self.coeffs[j].clone() * rhs.coeffs[k - j].clone())).collect();
        Self { coeffs }
    }
}

impl<T: Real> SeriesF<T> {
    /// Real power of a series with positive constant term.
    pub fn powf(&self, p: T) -> Result<Self, SeriesError> {
        let a0 = self.coeffs[0];
        if !(a0 > T::zero()) {
            return Err(SeriesError::NonPositiveLeading(a0.to_f64().unwrap_or(f64::NAN)));
        }
        self.pow_with_leading(p, a0.powf(p))
    }

    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        self.powf(T::lit(0.5))
    }

    /// Size of the last retained term at offset `x`, a crude truncation estimate.
    pub fn tail_estimate(&self, x: T) -> T {
        let n = self.order();
        (self.coeffs[n] * x.powi(n as i32)).abs()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<T: Clone + Num> $tr<&SeriesF<T>> for &SeriesF<T> {
            type Output = SeriesF<T>;
            fn $m(self, rhs: &SeriesF<T>) -> SeriesF<T> {
                #[allow(clippy::redundant_closure_call)]
                ($body)(self, rhs)
            }
        }
        impl<T: Clone + Num> $tr for SeriesF<T> {
            type Output = SeriesF<T>;
            fn $m(self, rhs: SeriesF<T>) -> SeriesF<T> {
                (&self).$m(&rhs)
            }
        }
    };
}

binop!(Add, add, |a: &SeriesF<T>, b: &SeriesF<T>| a.zip(b, |x, y| x + y));
binop!(Sub, sub, |a: &SeriesF<T>, b: &SeriesF<T>| a.zip(b, |x, y| x - y));
binop!(Mul, mul, |a: &SeriesF<T>, b: &SeriesF<T>| a.cauchy(b));
binop!(Div, div, |a: &SeriesF<T>, b: &SeriesF<T>| a.checked_div(b).expect("series division by zero constant term"));

impl<T: Clone + Num + Neg<Output = T>> Neg for SeriesF<T> {
    type Output = SeriesF<T>;
    fn neg(self) -> SeriesF<T> {
        SeriesF { coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_rational::Rational64;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn integer_powers_are_exact() {
        let s = SeriesF::new(vec![r(1, 1), r(1, 1), r(0, 1), r(0, 1)]).unwrap();
        let sq = s.pow_with_leading(r(2, 1), r(1, 1)).unwrap();
        assert_eq!(sq.coeffs(), &[r(1, 1), r(2, 1), r(1, 1), r(0, 1)]);
        let inv = s.pow_with_leading(r(-1, 1), r(1, 1)).unwrap();
        assert_eq!(inv.coeffs(), &[r(1, 1), r(-1, 1), r(1, 1), r(-1, 1)]);
    }

    #[test]
    fn half_power_matches_binomial() {
        let s = SeriesF::new(vec![4.0, 4.0, 0.0]).unwrap();
        let h = s.powf(0.5).unwrap();
        assert_relative_eq!(h.coeff(0), 2.0);
        assert_relative_eq!(h.coeff(1), 1.0);
        // 2 (1 + x)^(1/2) = 2 + x - x^2/4
        assert_relative_eq!(h.coeff(2), -0.25);
        // exact version of the same expansion
        let s = SeriesF::new(vec![r(4, 1), r(4, 1), r(0, 1)]).unwrap();
        let h = s.pow_with_leading(r(1, 2), r(2, 1)).unwrap();
        assert_eq!(h.coeffs(), &[r(2, 1), r(1, 1), r(-1, 4)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(SeriesF::<f64>::new(vec![]), Err(SeriesError::Empty));
        let s = SeriesF::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(s.powf(0.5), Err(SeriesError::NonPositiveLeading(_))));
        assert_eq!(s.recip(), Err(SeriesError::ZeroLeading));
        let s = SeriesF::new(vec![-1.0, 1.0]).unwrap();
        assert!(s.powf(2.0).is_err());
    }

    #[test]
    fn mixed_orders_truncate_to_the_shorter() {
        let a = SeriesF::new(vec![1.0, 2.0, 3.0]).unwrap();
        let b = SeriesF::new(vec![1.0, 1.0]).unwrap();
        assert_eq!((&a * &b).coeffs(), &[1.0, 3.0]);
        assert_eq!((&a + &b).order(), 1);
    }

    #[test]
    fn derivative_and_eval() {
        let s = SeriesF::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.derivative().coeffs(), &[2.0, 6.0]);
        assert_relative_eq!(s.eval(2.0), 17.0);
    }
}
