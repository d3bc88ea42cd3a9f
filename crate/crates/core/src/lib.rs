//! Numerical laboratory for nonlinear potential theory on weighted graphs.
//!
//! A weighted graph with vertex measure and edge lengths plays the role of a
//! metric measure space. On top of it the crate provides the carré du champ
//! calculus (Γ, Δ, Δ_p and its ε-regularization, Γ₂ and Bakry-Émery
//! curvature), linear solvers, direct-method solvers for the p-Poisson,
//! p-eigenvalue and p-capacity problems, the frozen-coefficient fixed-point
//! pipeline with ε-continuation, and empirical regularity diagnostics.
//!
//! Modules:
//! - [`space`]: construction, I/O, balls and doubling diagnostics
//! - [`calculus`]: Γ-calculus operators and curvature
//! - [`linsolve`]: conjugate-gradient and dense spectral solvers
//! - [`variational`]: energy minimization for boundary-value problems
//! - [`fixedpoint`]: inner contraction, outer fixed point, continuation
//! - [`regularity`]: Harnack, Hölder, Poincaré, Sobolev and second-order checks

pub mod calculus;
pub mod error;
pub mod fixedpoint;
pub mod linsolve;
pub mod parallel;
pub mod regularity;
pub mod space;
pub mod variational;

mod util;

pub use calculus::ScalarField;
pub use error::{Error, Result};
pub use parallel::Execution;
pub use space::DiscreteMms;
