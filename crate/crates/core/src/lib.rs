//! Numerical laboratory for differential Harnack (Li-Yau) inequalities and
//! Liouville-type phenomena of the semilinear heat equation
//! `u_t - Δ_g u = f(u)` on discretized Riemannian manifolds.
//!
//! The crate is organized around the quantities the theory is built from:
//!
//! - [`geometry`]: discrete manifolds (flat tori, 2-D conformal tori, the
//!   unit icosphere) with metric-aware Laplace-Beltrami operators, gradient
//!   and Hessian norms, Ricci lower bounds and the Bochner identity check.
//! - [`exponents`]: the four critical exponents that organize the theory
//!   (Sobolev, Bidaut-Véron, Fujita and the Li-Yau feasibility exponent).
//! - [`feasibility`]: the (β, γ) parameter system behind the Li-Yau
//!   inequality, with a brute-force region scan and threshold bisection.
//! - [`heatflow`]: IMEX/RK4 time integration, finite-time blow-up detection,
//!   and the Jensen / minimum-tracking comparison checks.
//! - [`harnack`]: the Harnack quantity ρ and every supporting differential
//!   identity and inequality, monitored along flows and closed forms.
//! - [`steady`]: sign-changing steady states by constrained energy
//!   minimization, with a 1-D elliptic-function oracle.
//! - [`cli`]: experiment configs, pipeline dispatch and report rendering.

pub mod cli;
pub mod error;
pub mod exponents;
pub mod feasibility;
pub mod field;
pub mod geometry;
pub mod harnack;
pub mod heatflow;
pub mod sparse;
pub mod steady;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
