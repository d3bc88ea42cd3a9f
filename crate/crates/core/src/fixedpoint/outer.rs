//! Outer fixed-point loop for `Δ_{p,ε}w = f` at fixed ε.
//!
//! A step first tries the frozen-coefficient map: solve
//! `L_{w,ε}(U) = (f - Δ_{p,ε}w) / a(w)` and move towards `w + U`. When the
//! develop identity `Δ_{p,ε}w = a(w) D_{ε,p}(w)` holds this is the map
//! `w ↦ U` with `L_{w,ε}(U) = f / a(w)`; on graphs the identity has a
//! residual and the defect form keeps the fixed point at `Δ_{p,ε}w = f`.
//! When the frozen step does not cut the residual by 10% for any damping in
//! {1, ½, ¼}, or the inner iteration diverges, the step falls back to the
//! divergence-form frozen-coefficient solve `div(a(w) ∇v) = f` with
//! backtracking.

use super::inner::{inner_core, InnerTrace};
use super::{check_range, Failure, FixedPointConfig, FixedPointError};
use crate::calculus::{
    coefficient_field, gamma_raw, inf_laplacian_gamma_raw, laplacian_raw, p_laplacian_raw, ScalarField,
};
use crate::linsolve::{check_zero_mean, solve_weighted_zero_mean, LinearSolveOptions};
use crate::space::DiscreteMms;
use crate::{Error, Result};

const FROZEN_DAMPING: [f64; 3] = [1.0, 0.5, 0.25];
const FROZEN_DECREASE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Frozen-coefficient map through the inner iteration.
    Frozen,
    /// Divergence-form frozen-coefficient solve.
    Kacanov,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::Frozen => "frozen",
            Route::Kacanov => "kacanov",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterStep {
    pub route: Route,
    pub theta: f64,
    /// `‖Δ_{p,ε}w - f‖_{L²(m)}` after the step.
    pub residual: f64,
    pub inner_iterations: usize,
    /// Largest inner contraction ratio of the step, if any was observed.
    pub inner_max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterTrace {
    pub epsilon: f64,
    pub iterations: usize,
    pub damping_used: Vec<f64>,
    /// Residual before the first step and after every step.
    pub residual_trace: Vec<f64>,
    pub steps: Vec<OuterStep>,
    /// Inner solves in call order, including ones that diverged.
    pub inner: Vec<InnerTrace>,
    /// Some inner ratio exceeded `|p-2|`.
    pub ratio_flagged: bool,
    /// `Σ Γ(s,s) m` with `s = (Γ(u,u)+ε)^{(p-1)/2}`.
    pub second_order_surrogate: f64,
    /// `mean_m(f/a - D_{ε,p}u)`, the mean correction of the fixed-point map.
    pub lambda_u: f64,
    /// Part of `lambda_u` due to the equation residual: `mean_m((f - Δ_{p,ε}u)/a)`.
    pub lambda_equation: f64,
    /// Part of `lambda_u` due to the develop identity residual.
    pub lambda_develop: f64,
    pub final_residual: f64,
}

pub(crate) fn residual_norm(space: &DiscreteMms, u: &[f64], f: &[f64], p: f64, eps: f64) -> f64 {
    let lap = p_laplacian_raw(space, u, p, eps);
    lap.iter()
        .zip(f)
        .zip(space.measure())
        .map(|((a, b), m)| (a - b).powi(2) * m)
        .sum::<f64>()
        .sqrt()
}

/// `Σ Γ(s,s) m` with `s = (Γ(u,u)+ε)^{(p-1)/2}`.
pub(crate) fn second_order_surrogate(space: &DiscreteMms, u: &[f64], p: f64, eps: f64) -> f64 {
    let s: Vec<f64> = gamma_raw(space, u, u)
        .iter()
        .map(|q| (q + eps).powf(0.5 * (p - 1.0)))
        .collect();
    gamma_raw(space, &s, &s).iter().zip(space.measure()).map(|(g, m)| g * m).sum()
}

/// Solves `Δ_{p,ε}u = f` from `u = 0`.
pub fn outer_solve(
    space: &DiscreteMms,
    f: &ScalarField,
    p: f64,
    eps: f64,
    config: &FixedPointConfig,
) -> Result<(ScalarField, OuterTrace)> {
    outer_solve_from(space, f, p, eps, &ScalarField::zeros(space.len()), config)
}

/// Solves `Δ_{p,ε}u = f` from a zero-mean warm start.
pub fn outer_solve_from(
    space: &DiscreteMms,
    f: &ScalarField,
    p: f64,
    eps: f64,
    start: &ScalarField,
    config: &FixedPointConfig,
) -> Result<(ScalarField, OuterTrace)> {
    f.check(space)?;
    start.check(space)?;
    check_range(p)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must be > 0")));
    }
    config.validate()?;
    space.require_connected()?;
    check_zero_mean(space, f)?;
    let f = f.project_zero_mean(space);
    let start = start.project_zero_mean(space);
    outer_core(space, f.values(), p, eps, start.into_vec(), config).map(|(u, t)| (u.into(), t))
}

/// Outer loop; `eps = 0` is allowed when the caller guarantees `Γ(w,w) > 0`.
pub(crate) fn outer_core(
    space: &DiscreteMms,
    f: &[f64],
    p: f64,
    eps: f64,
    mut w: Vec<f64>,
    config: &FixedPointConfig,
) -> Result<(Vec<f64>, OuterTrace)> {
    let m = space.measure();
    let n = space.len();
    let total = space.total_measure();
    let mut trace = OuterTrace {
        epsilon: eps,
        iterations: 0,
        damping_used: Vec::new(),
        residual_trace: Vec::new(),
        steps: Vec::new(),
        inner: Vec::new(),
        ratio_flagged: false,
        second_order_surrogate: 0.0,
        lambda_u: 0.0,
        lambda_equation: 0.0,
        lambda_develop: 0.0,
        final_residual: 0.0,
    };
    let mut lap = p_laplacian_raw(space, &w, p, eps);
    let mut res = residual_norm(space, &w, f, p, eps);
    trace.residual_trace.push(res);
    let fail = |failure: Failure, w: Vec<f64>, trace: OuterTrace| -> Error {
        let mut err = FixedPointError::new(failure);
        err.best = Some(w.into());
        err.outer = Some(trace);
        err.into()
    };
    let blend = |w: &[f64], target: &[f64], theta: f64| -> Vec<f64> {
        w.iter().zip(target).map(|(a, b)| (1.0 - theta) * a + theta * b).collect()
    };
    while res >= config.outer_tolerance {
        if trace.iterations >= config.max_outer {
            return Err(fail(Failure::OuterIterationCap, w, trace));
        }
        trace.iterations += 1;
        let q = gamma_raw(space, &w, &w);
        let a = coefficient_field(&q, p, eps);
        let g: Vec<f64> = (0..n).map(|x| (f[x] - lap[x]) / a[x]).collect();

        let mut accepted: Option<(Vec<f64>, f64, OuterStep)> = None;
        let (inner_iterations, inner_max_ratio) = match inner_core(space, &g, &w, p, eps, config) {
            Ok((big_u, inner)) => {
                let summary = (inner.iterations, inner.max_ratio());
                trace.inner.push(inner);
                let target: Vec<f64> = w.iter().zip(&big_u).map(|(a, b)| a + b).collect();
                for theta in FROZEN_DAMPING {
                    let next = blend(&w, &target, theta);
                    let r = residual_norm(space, &next, f, p, eps);
                    if r < FROZEN_DECREASE * res {
                        let step = OuterStep {
                            route: Route::Frozen,
                            theta,
                            residual: r,
                            inner_iterations: summary.0,
                            inner_max_ratio: summary.1,
                        };
                        accepted = Some((next, r, step));
                        break;
                    }
                }
                summary
            }
            Err(Error::Fixedpoint(e)) => {
                let inner = e.inner.clone();
                let summary = inner.as_ref().map_or((0, None), |t| (t.iterations, t.max_ratio()));
                if let Some(t) = inner {
                    trace.inner.push(t);
                }
                summary
            }
            Err(other) => return Err(other),
        };
        if let Some(r) = inner_max_ratio {
            if r > (p - 2.0).abs() {
                trace.ratio_flagged = true;
            }
        }
        if accepted.is_none() {
            let target = solve_weighted_zero_mean(
                space,
                &ScalarField::new(a.clone()),
                &ScalarField::new(f.to_vec()),
                &LinearSolveOptions::default(),
            )?
            .into_vec();
            let mut theta = 1.0;
            while theta >= config.theta_min {
                let next = blend(&w, &target, theta);
                let r = residual_norm(space, &next, f, p, eps);
                if r < res {
                    let step = OuterStep {
                        route: Route::Kacanov,
                        theta,
                        residual: r,
                        inner_iterations,
                        inner_max_ratio,
                    };
                    accepted = Some((next, r, step));
                    break;
                }
                theta *= 0.5;
            }
            if accepted.is_none() {
                return Err(fail(Failure::Stagnation { theta }, w, trace));
            }
        }
        let (next, r, step) = accepted.expect("step accepted");
        trace.damping_used.push(step.theta);
        trace.residual_trace.push(r);
        trace.steps.push(step);
        // keep the iterate exactly zero-mean
        let c = next.iter().zip(m).map(|(v, w)| v * w).sum::<f64>() / total;
        w = next.into_iter().map(|v| v - c).collect();
        lap = p_laplacian_raw(space, &w, p, eps);
        res = residual_norm(space, &w, f, p, eps);
    }
    trace.final_residual = res;
    trace.second_order_surrogate = second_order_surrogate(space, &w, p, eps);
    let (lu, le, ld) = mean_correction(space, &w, f, p, eps);
    trace.lambda_u = lu;
    trace.lambda_equation = le;
    trace.lambda_develop = ld;
    Ok((w, trace))
}

/// `(λ_u, equation part, develop part)` at `u`.
fn mean_correction(space: &DiscreteMms, u: &[f64], f: &[f64], p: f64, eps: f64) -> (f64, f64, f64) {
    let m = space.measure();
    let total = space.total_measure();
    let q = gamma_raw(space, u, u);
    let a = coefficient_field(&q, p, eps);
    let lap = laplacian_raw(space, u);
    let inf = inf_laplacian_gamma_raw(space, u);
    let plap = p_laplacian_raw(space, u, p, eps);
    let (mut lu, mut le, mut ld) = (0.0, 0.0, 0.0);
    for x in 0..space.len() {
        if a[x] == 0.0 {
            continue;
        }
        let d = if p == 2.0 { lap[x] } else { lap[x] + (p - 2.0) * inf[x] / (q[x] + eps) };
        lu += (f[x] / a[x] - d) * m[x];
        le += (f[x] - plap[x]) / a[x] * m[x];
        ld += (plap[x] - a[x] * d) / a[x] * m[x];
    }
    (lu / total, le / total, ld / total)
}
