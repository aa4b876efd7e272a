//! Locating the boundary of a one-sided property along an interval.

use thiserror::Error;

use super::roots::{bisect, RootBracket};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransitionError {
    #[error("right end {0} does not have the property")]
    RightEndFails(f64),
    #[error("every sample in [{0}, {1}] has the property")]
    NoTransition(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Largest sample found without the property.
    pub lo: f64,
    /// `hi` and everything sampled to its right has the property.
    pub hi: f64,
    pub iterations: usize,
}

/// Infimum of `{x : pred holds on [x, b]}`, scanned from `b` towards `a` in
/// `scan` steps and then bisected to width `tol`.
pub fn rightmost_transition(a: f64, b: f64, scan: usize, tol: f64, pred: impl Fn(f64) -> bool) -> Result<Transition, TransitionError> {
    if !pred(b) {
        return Err(TransitionError::RightEndFails(b));
    }
    let n = scan.max(1);
    let mut hi = b;
    let mut lo = None;
    for i in 1..=n {
        let x = b - (b - a) * i as f64 / n as f64;
        if !pred(x) {
            lo = Some(x);
            break;
        }
        hi = x;
    }
    let lo = lo.ok_or(TransitionError::NoTransition(a, b))?;
    let f = |x: f64| if pred(x) { 1.0 } else { -1.0 };
    let br = RootBracket::new(lo, hi, -1.0, 1.0).expect("distinct ordered samples");
    let bis = bisect(f, br, tol).expect("finite classifier");
    let (l, h) = (bis.bracket.a(), bis.bracket.b());
    Ok(Transition { lo: l, hi: h, iterations: bis.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_the_rightmost_boundary() {
        // property holds on [0.1, 0.2] and [0.55, 1]
        let p = |x: f64| (0.1..=0.2).contains(&x) || x >= 0.55;
        let t = rightmost_transition(0.0, 1.0, 10, 1e-12, p).unwrap();
        assert!((t.hi - 0.55).abs() < 1e-11 && t.hi - t.lo <= 1e-12);
        assert_eq!(rightmost_transition(0.0, 1.0, 10, 1e-12, |x| x < 0.5), Err(TransitionError::RightEndFails(1.0)));
        assert_eq!(rightmost_transition(0.0, 1.0, 10, 1e-12, |_| true), Err(TransitionError::NoTransition(0.0, 1.0)));
    }
}
