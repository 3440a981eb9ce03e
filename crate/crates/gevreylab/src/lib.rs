//! Formal power-series solutions of inhomogeneous nonlinear moment PDEs.
//!
//! The library works with equations of the form
//!
//! ```text
//! d_t^kappa u = f + sum over terms  a(t,x) * t^v * prod_l (d_t^{i_l} d_x^{q_l} u)^{r_l}
//! ```
//!
//! where every derivative is a *moment derivative*: the t-axis and each of the
//! N spatial axes carry a moment sequence m(j) (for example m(j) = Gamma(1+s j)),
//! and the moment derivative shifts coefficients with the ratio m(j+1)/m(j).
//!
//! Pipeline:
//! * [`equation`] declares an equation spec (JSON loadable, validated),
//! * [`eqdsl`] parses and prints a small plain-text equation language,
//! * [`polygon`] builds the moment Newton polygon and the critical value
//!   `sigma_c` that classifies the Gevrey regularity of the solution,
//! * [`solver`] runs the coefficient recursion to a requested t-order and
//!   builds majorant sequences and divergent counterexamples,
//! * [`analysis`] provides modified Nagumo norms, the numeric Gevrey-order
//!   estimator, and lower-bound certificates.
//!
//! All numerics run in one of two arithmetic modes implemented by the
//! [`scalar::Scalar`] trait: `Exact` (arbitrary-precision rationals, bit-for-bit
//! reproducible) and `Fp` (arbitrary-precision floating point at a configurable
//! bit width).

pub mod analysis;
pub mod eqdsl;
pub mod equation;
pub mod moments;
pub mod polygon;
pub mod scalar;
pub mod series;
pub mod solver;

pub use scalar::{Exact, Fp, Mode, Scalar};
