//! Self-similar collapse and expansion solutions of self-gravitating Euler flows.
//!
//! The numerical kernels in [`numerics`] are generic over the scalar type; the
//! solver pipelines work in `f64`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod affine;
pub mod dust;
pub mod newtonian;
pub mod numerics;
pub mod relativistic;

pub use numerics::Real;

/// Truncated power series with `f64` coefficients.
pub type Series = numerics::SeriesF<f64>;
/// Integration result for an `N`-dimensional `f64` state.
pub type Trajectory<const N: usize> = numerics::IvpResult<f64, N>;
pub type Bracket = numerics::RootBracket<f64>;
pub type Matrix3 = numerics::Mat3<f64>;
