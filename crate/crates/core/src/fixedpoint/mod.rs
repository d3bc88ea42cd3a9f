//! Frozen-coefficient fixed-point solver for `Δ_{p,ε}u = f` with
//! ε-continuation towards `Δ_p u = f`.
//!
//! Three nested loops:
//!
//! - [`inner_solve`]: for a frozen reference field `w`, Picard iteration on
//!   `ΔU + (p-2) H_U[w] / (Γ(w,w)+ε) = g` with a zero-mean Poisson solve per
//!   step. Contraction is measured, never assumed.
//! - [`outer_solve`]: damped fixed-point iteration in `w` for fixed ε, with
//!   the true residual `‖Δ_{p,ε}w - f‖` recomputed after every step.
//! - [`epsilon_continuation`]: warm-started outer solves along
//!   `ε_k = ε₀ ρ^k`, then certification of `‖Δ_p u - f‖`.

mod continuation;
mod inner;
mod outer;
mod trace;

pub use continuation::{epsilon_continuation, w1p_norm, ContinuationTrace, StopReason};
pub use inner::{frozen_operator, inner_solve, inner_solve_rhs, InnerTrace};
pub use outer::{outer_solve, outer_solve_from, OuterStep, OuterTrace, Route};
pub use trace::{trace_table, TRACE_HEADER};

use std::fmt;

use crate::calculus::ScalarField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointConfig {
    pub epsilon0: f64,
    /// Schedule ratio in (0, 1).
    pub rho: f64,
    /// Smallest ε in the schedule.
    pub epsilon_min: f64,
    /// Certification bound on `‖Δ_p u - f‖_{L²(m)}`.
    pub final_tolerance: f64,
    /// Residual bound per ε stage; defaults to `final_tolerance / 10`.
    pub outer_tolerance: f64,
    /// Inner increment bound; defaults to `outer_tolerance / 10`.
    pub inner_tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Consecutive inner ratios above 1 that count as divergence.
    pub divergence_window: usize,
    /// Smallest damping factor before the outer loop gives up.
    pub theta_min: f64,
    /// The schedule stops early once the W^{1,p} increment drops below this.
    pub increment_tolerance: f64,
    /// After the schedule, run a final stage at `ε = 0` when `Γ(u,u) > 0`
    /// everywhere.
    pub limit_stage: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        let final_tolerance = 1e-9;
        Self {
            epsilon0: 1.0,
            rho: 0.3,
            epsilon_min: 1e-10,
            final_tolerance,
            outer_tolerance: final_tolerance / 10.0,
            inner_tolerance: final_tolerance / 100.0,
            max_outer: 500,
            max_inner: 500,
            divergence_window: 5,
            theta_min: 1e-6,
            increment_tolerance: 1e-12,
            limit_stage: true,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon0", self.epsilon0),
            ("epsilon_min", self.epsilon_min),
            ("final_tolerance", self.final_tolerance),
            ("outer_tolerance", self.outer_tolerance),
            ("inner_tolerance", self.inner_tolerance),
            ("theta_min", self.theta_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho = {} must lie in (0, 1)", self.rho)));
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.divergence_window == 0 {
            return Err(Error::InvalidParameter("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Checks `p ∈ (1, 3)`, the range of the fixed-point method.
pub(crate) fn check_range(p: f64) -> Result<()> {
    if !(p > 1.0 && p < 3.0) {
        return Err(Error::InvalidParameter(format!(
            "fixed-point method requires p in (1, 3), got {p}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Inner ratios above 1 for `window` consecutive steps.
    InnerDivergence { window: usize },
    InnerIterationCap,
    /// Damping fell below the configured floor without progress.
    Stagnation { theta: f64 },
    OuterIterationCap,
    /// Final `‖Δ_p u - f‖` above the certification bound.
    Certification { residual: f64 },
}

/// Solver failure with everything recorded up to that point.
#[derive(Debug, Clone)]
pub struct FixedPointError {
    pub failure: Failure,
    /// Best iterate reached, when there is one.
    pub best: Option<ScalarField>,
    pub inner: Option<InnerTrace>,
    pub outer: Option<OuterTrace>,
    pub continuation: Option<ContinuationTrace>,
}

impl FixedPointError {
    pub(crate) fn new(failure: Failure) -> Self {
        Self {
            failure,
            best: None,
            inner: None,
            outer: None,
            continuation: None,
        }
    }
}

impl fmt::Display for FixedPointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            Failure::InnerDivergence { window } => {
                write!(f, "inner iteration diverged: contraction ratio above 1 for {window} steps")
            }
            Failure::InnerIterationCap => write!(f, "inner iteration hit its iteration cap"),
            Failure::Stagnation { theta } => write!(f, "outer iteration stagnated (damping {theta:e})"),
            Failure::OuterIterationCap => write!(f, "outer iteration hit its iteration cap"),
            Failure::Certification { residual } => {
                write!(f, "final p-Laplacian residual {residual:e} above the certification bound")
            }
        }
    }
}

impl std::error::Error for FixedPointError {}

impl From<FixedPointError> for Error {
    fn from(e: FixedPointError) -> Self {
        Error::Fixedpoint(Box::new(e))
    }
}
