//! Least-squares fits used to read off asymptotic exponents.

use thiserror::Error;

use super::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} is not strictly positive (x={x}, v={v})")]
    NonPositive { index: usize, x: f64, v: f64 },
    #[error("all abscissae coincide")]
    Degenerate,
}

/// `v ≈ prefactor · x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<T> {
    pub exponent: T,
    pub prefactor: T,
    /// Largest absolute deviation in `ln v` from the fitted line.
    pub residual: T,
}

/// Ordinary least squares line `v = slope · x + intercept`.
pub fn fit_line<T: Real>(xs: &[T], vs: &[T]) -> Result<(T, T), FitError> {
    let n = xs.len().min(vs.len());
    if n < 2 {
        return Err(FitError::TooFewSamples(n));
    }
    let nt = T::from_usize_lossy(n);
    let mx = xs[..n].iter().fold(T::zero(), |a, &x| a + x) / nt;
    let mv = vs[..n].iter().fold(T::zero(), |a, &v| a + v) / nt;
    let mut sxx = T::zero();
    let mut sxv = T::zero();
    for i in 0..n {
        sxx = sxx + (xs[i] - mx) * (xs[i] - mx);
        sxv = sxv + (xs[i] - mx) * (vs[i] - mv);
    }
    if sxx == T::zero() {
        return Err(FitError::Degenerate);
    }
    let slope = sxv / sxx;
    Ok((slope, mv - slope * mx))
}

pub fn fit_power_law<T: Real>(samples: &[(T, T)]) -> Result<PowerLawFit<T>, FitError> {
    if samples.len() < 3 {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    for (index, &(x, v)) in samples.iter().enumerate() {
        if !(x > T::zero() && v > T::zero()) {
            return Err(FitError::NonPositive { index, x: x.to_f64().unwrap_or(f64::NAN), v: v.to_f64().unwrap_or(f64::NAN) });
        }
    }
    let lx: Vec<T> = samples.iter().map(|s| s.0.ln()).collect();
    let lv: Vec<T> = samples.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept) = fit_line(&lx, &lv)?;
    let residual = lx.iter().zip(&lv).map(|(&x, &v)| (v - (slope * x + intercept)).abs()).fold(T::zero(), T::max);
    Ok(PowerLawFit { exponent: slope, prefactor: intercept.exp(), residual })
}

/// Least-squares polynomial `c_0 + c_1 x + ... + c_deg x^deg`.
///
/// The abscissae are scaled to `[-1, 1]` before forming the normal equations.
pub fn fit_polynomial<T: Real>(samples: &[(T, T)], degree: usize) -> Result<Vec<T>, FitError> {
    let m = degree + 1;
    if samples.len() < m {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    let lo = samples.iter().map(|s| s.0).fold(T::infinity(), T::min);
    let hi = samples.iter().map(|s| s.0).fold(T::neg_infinity(), T::max);
    if !(hi > lo) {
        return Err(FitError::Degenerate);
    }
    let two = T::lit(2.0);
    let (mid, half) = ((lo + hi) / two, (hi - lo) / two);
    let mut a = vec![vec![T::zero(); m + 1]; m];
    for &(x, v) in samples {
        let t = (x - mid) / half;
        let pw: Vec<T> = (0..m)
            .scan(T::one(), |p, _| {
                let cur = *p;
                *p = *p * t;
                Some(cur)
            })
            .collect();
        for i in 0..m {
            for j in 0..m {
                a[i][j] = a[i][j] + pw[i] * pw[j];
            }
            a[i][m] = a[i][m] + pw[i] * v;
        }
    }
    let c = gauss_solve(a).ok_or(FitError::Degenerate)?;
    // back from t = (x - mid)/half to powers of x
    let mut out = vec![T::zero(); m];

    for (k, &ck) in c.iter().enumerate() {
        // ck (x - mid)^k / half^k
        let scale = ck / half.powi(k as i32);
        let mut coef = T::one();
        for j in 0..=k {
            if j > 0 {
                coef = coef * T::from_usize_lossy(k - j + 1) / T::from_usize_lossy(j);
            }
            out[k - j] = out[k - j] + scale * coef * (-mid).powi(j as i32);
        }
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss_solve<T: Real>(mut a: Vec<Vec<T>>) -> Option<Vec<T>> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if a[piv][col] == T::zero() || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for k in col..=m {
                let v = a[col][k];
                a[r][k] = a[r][k] - f * v;
            }
        }
    }
    let mut x = vec![T::zero(); m];
    for r in (0..m).rev() {
        let s = (r + 1..m).fold(a[r][m], |acc, k| acc - a[r][k] * x[k]);
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Value at 0 of a function even in `h` (error series in `h²`) from samples at
/// `h`, `h/2`, `h/4`: two levels of Richardson extrapolation.
pub fn richardson_even(at_h: f64, at_half: f64, at_quarter: f64) -> f64 {
    let r1 = (4.0 * at_half - at_h) / 3.0;
    let r2 = (4.0 * at_quarter - at_half) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_square() {
        let fit = fit_power_law(&[(1.0, 1.0), (10.0, 100.0), (100.0, 1e4)]).unwrap();
        assert_relative_eq!(fit.exponent, 2.0, epsilon = 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn inverse_square_with_prefactor() {
        let s: Vec<(f64, f64)> = (0..20).map(|i| 10f64.powf(i as f64 / 5.0)).map(|x| (x, 3.0 / (x * x))).collect();
        let fit = fit_power_law(&s).unwrap();
        assert_relative_eq!(fit.exponent, -2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_samples() {
        assert_eq!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]), Err(FitError::TooFewSamples(2)));
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)]), Err(FitError::NonPositive { index: 1, .. })));
    }

    #[test]
    fn richardson_removes_quadratic_and_quartic_terms() {
        let f = |h: f64| 0.25 + 3.0 * h * h - 7.0 * h.powi(4);
        assert_relative_eq!(richardson_even(f(0.1), f(0.05), f(0.025)), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn polynomial_fit_recovers_cubic() {
        let f = |x: f64| 1.5 - 2.0 * x + 0.25 * x * x + 3.0 * x.powi(3);
        let samples: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let x = 0.01 + 0.003 * i as f64;
                (x, f(x))
            })
            .collect();
        let c = fit_polynomial(&samples, 3).unwrap();
        for (a, b) in c.iter().zip([1.5, -2.0, 0.25, 3.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-8, max_relative = 1e-8);
        }
    }
}
