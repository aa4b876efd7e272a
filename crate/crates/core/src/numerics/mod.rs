//! Numerical kernels shared by all solver families.

pub mod fit;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod scalar;
pub mod series;
pub mod shooting;
pub mod sonic;

pub use fit::{fit_line, fit_polynomial, fit_power_law, richardson_even, FitError, PowerLawFit};
pub use linalg::{solve2, Mat3};
pub use ode::{integrate_ivp, EventFn, IvpError, IvpOptions, IvpResult, Termination};
pub use quad::{gauss_legendre, integrate_adaptive, Quadrature};
pub use roots::{bisect, brackets_from_samples, refine_root, scan_brackets, Bisection, RootBracket, RootError};
pub use scalar::Real;
pub use series::{SeriesError, SeriesF};
pub use shooting::{rightmost_transition, Transition, TransitionError};
pub use sonic::{expand_sonic, growth_constant, jacobian, order_residual, sonic_branches, Field, SingularSystem, SonicBranch, SonicError};
