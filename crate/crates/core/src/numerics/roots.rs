//! Bracketing root search by bisection.
//!
//! Bisection is used on purpose: several callers hand in functions that are
//! only piecewise continuous (shooting classifiers), where secant-type updates
//! misbehave.

use thiserror::Error;

use super::scalar::{sign, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("bracket endpoints must satisfy a < b, got [{a}, {b}]")]
    Unordered { a: f64, b: f64 },
    #[error("no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("non-finite function value at {x}")]
    NonFinite { x: f64 },
    #[error("tolerance must be positive")]
    BadTolerance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket<T> {
    a: T,
    b: T,
    fa: T,
    fb: T,
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl<T: Real> RootBracket<T> {
    /// Checks the ordering and the sign change of already computed values.
    pub fn new(a: T, b: T, fa: T, fb: T) -> Result<Self, RootError> {
        if !(a < b) {
            return Err(RootError::Unordered { a: f64_of(a), b: f64_of(b) });
        }
        if !fa.is_finite() {
            return Err(RootError::NonFinite { x: f64_of(a) });
        }
        if !fb.is_finite() {
            return Err(RootError::NonFinite { x: f64_of(b) });
        }
        if sign(fa) * sign(fb) > 0 || (sign(fa) == 0 && sign(fb) == 0) {
            return Err(RootError::NoSignChange { a: f64_of(a), b: f64_of(b), fa: f64_of(fa), fb: f64_of(fb) });
        }
        Ok(Self { a, b, fa, fb })
    }

    pub fn from_fn(f: impl Fn(T) -> T, a: T, b: T) -> Result<Self, RootError> {
        Self::new(a, b, f(a), f(b))
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn fa(&self) -> T {
        self.fa
    }

    pub fn fb(&self) -> T {
        self.fb
    }

    pub fn width(&self) -> T {
        self.b - self.a
    }
}

/// Bisects until the bracket is narrower than `tol`; returns the midpoint.
pub fn refine_root<T: Real>(f: impl Fn(T) -> T, bracket: RootBracket<T>, tol: T) -> Result<T, RootError> {
    Ok(bisect(f, bracket, tol)?.midpoint())
}

/// Final bracket of a bisection, useful when the caller needs both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection<T> {
    pub bracket: RootBracket<T>,
    pub iterations: usize,
}

impl<T: Real> Bisection<T> {
    pub fn midpoint(&self) -> T {
        self.bracket.a + (self.bracket.b - self.bracket.a) / T::lit(2.0)
    }
}

pub fn bisect<T: Real>(f: impl Fn(T) -> T, bracket: RootBracket<T>, tol: T) -> Result<Bisection<T>, RootError> {
    if !(tol > T::zero()) {
        return Err(RootError::BadTolerance);
    }
    let mut br = bracket;
    let mut iterations = 0;
    if sign(br.fa) == 0 {
        return Ok(Bisection { bracket: RootBracket { b: br.a, fb: br.fa, ..br }, iterations });
    }
    if sign(br.fb) == 0 {
        return Ok(Bisection { bracket: RootBracket { a: br.b, fa: br.fb, ..br }, iterations });
    }
    while br.b - br.a > tol {
        let m = br.a + (br.b - br.a) / T::lit(2.0);
        if m <= br.a || m >= br.b {
            break;
        }
        let fm = f(m);
        iterations += 1;
        if !fm.is_finite() {
            return Err(RootError::NonFinite { x: f64_of(m) });
        }
        match sign(fm) {
            0 => {
                br = RootBracket { a: m, b: m, fa: fm, fb: fm };
                break;
            }
            s if s == sign(br.fa) => {
                br.a = m;
                br.fa = fm;
            }
            _ => {
                br.b = m;
                br.fb = fm;
            }
        }
    }
    Ok(Bisection { bracket: br, iterations })
}

/// Scans `n` equal subintervals of `[a, b]` and returns every sign-change bracket.
pub fn scan_brackets<T: Real>(f: impl Fn(T) -> T, a: T, b: T, n: usize) -> Vec<RootBracket<T>> {
    let xs: Vec<T> = (0..=n).map(|i| a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(n)).collect();
    let fs: Vec<T> = xs.iter().map(|&x| f(x)).collect();
    brackets_from_samples(&xs, &fs)
}

/// Sign-change brackets between consecutive finite samples.
pub fn brackets_from_samples<T: Real>(xs: &[T], fs: &[T]) -> Vec<RootBracket<T>> {
    xs.windows(2)
        .zip(fs.windows(2))
        .filter_map(|(x, f)| RootBracket::new(x[0], x[1], f[0], f[1]).ok())
        .filter(|br| sign(br.fa) != 0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let f = |x: f64| x * x - 2.0;
        let br = RootBracket::from_fn(f, 1.0, 2.0).unwrap();
        let x = refine_root(f, br, 1e-12).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn half_pi() {
        let br = RootBracket::from_fn(f64::cos, 1.0, 2.0).unwrap();
        let x = refine_root(f64::cos, br, 1e-12).unwrap();
        assert!((x - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_brackets() {
        assert!(matches!(RootBracket::from_fn(|x: f64| x * x + 1.0, 0.0, 1.0), Err(RootError::NoSignChange { .. })));
        assert!(matches!(RootBracket::from_fn(|x: f64| x, 1.0, -1.0), Err(RootError::Unordered { .. })));
        assert!(matches!(RootBracket::new(0.0, 1.0, f64::NAN, 1.0), Err(RootError::NonFinite { .. })));
    }

    #[test]
    fn step_function_is_localized() {
        let f = |x: f64| if x < 0.3 { -1.0 } else { 1.0 };
        let br = RootBracket::from_fn(f, 0.0, 1.0).unwrap();
        let b = bisect(f, br, 1e-10).unwrap();
        assert!(b.bracket.a() < 0.3 && b.bracket.b() >= 0.3);
        assert!(b.bracket.width() <= 1e-10);
    }

    #[test]
    fn scan_finds_all_roots() {
        let brs = scan_brackets(f64::sin, 0.5, 10.0, 50);
        assert_eq!(brs.len(), 3);
    }
}
