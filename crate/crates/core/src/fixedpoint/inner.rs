use super::{check_range, Failure, FixedPointConfig, FixedPointError};
use crate::calculus::{coefficient, gamma_raw, hessian_proxy_raw, laplacian_raw, ScalarField};
use crate::linsolve::{check_zero_mean, solve_zero_mean_poisson, LinearSolveOptions};
use crate::space::DiscreteMms;
use crate::{util, Error, Result};

/// Record of one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerTrace {
    pub iterations: usize,
    /// `‖Δ(U_{k+1}-U_k)‖ / ‖Δ(U_k-U_{k-1})‖` in `L²(m)`.
    pub contraction_ratios: Vec<f64>,
    /// `‖Δ(U_{k+1}-U_k)‖` per step.
    pub increments: Vec<f64>,
    /// `‖L_{w,ε}(U) - g + mean(g - L_{w,ε}(U))‖`.
    pub final_equation_residual: f64,
    pub rhs_norm: f64,
    pub solution_laplacian_norm: f64,
    /// Every observed ratio was at most `|p-2|`.
    pub ratio_premise: bool,
    /// `‖ΔU‖ ≤ ‖g‖ / (1 - |p-2|)`.
    pub bound_check: bool,
}

impl InnerTrace {
    pub fn max_ratio(&self) -> Option<f64> {
        self.contraction_ratios.iter().copied().reduce(f64::max)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must be > 0")));
    }
    Ok(())
}

fn norm(v: &[f64], m: &[f64]) -> f64 {
    v.iter().zip(m).map(|(x, w)| x * x * w).sum::<f64>().sqrt()
}

fn mean(v: &[f64], m: &[f64], total: f64) -> f64 {
    v.iter().zip(m).map(|(x, w)| x * w).sum::<f64>() / total
}

pub(crate) fn frozen_raw(space: &DiscreteMms, big_u: &[f64], w: &[f64], p: f64, eps: f64) -> Vec<f64> {
    let lap = laplacian_raw(space, big_u);
    if p == 2.0 {
        return lap;
    }
    let h = hessian_proxy_raw(space, big_u, w);
    let q = gamma_raw(space, w, w);
    (0..space.len())
        .map(|x| lap[x] + (p - 2.0) * h[x] / (q[x] + eps))
        .collect()
}

/// Frozen operator `L_{w,ε}(U) = ΔU + (p-2) H_U[w] / (Γ(w,w)+ε)`.
pub fn frozen_operator(
    space: &DiscreteMms,
    big_u: &ScalarField,
    w: &ScalarField,
    p: f64,
    eps: f64,
) -> Result<ScalarField> {
    big_u.check(space)?;
    w.check(space)?;
    util::check_exponent(p)?;
    check_eps(eps)?;
    Ok(frozen_raw(space, big_u.values(), w.values(), p, eps).into())
}

/// Inner solve with `g = f (Γ(w,w)+ε)^{-(p-2)/2}`; `f` must have zero mean.
pub fn inner_solve(
    space: &DiscreteMms,
    f: &ScalarField,
    w: &ScalarField,
    p: f64,
    eps: f64,
    config: &FixedPointConfig,
) -> Result<(ScalarField, InnerTrace)> {
    f.check(space)?;
    check_zero_mean(space, f)?;
    w.check(space)?;
    check_eps(eps)?;
    let q = gamma_raw(space, w.values(), w.values());
    let g: Vec<f64> = (0..space.len()).map(|x| f[x] / coefficient(q[x], p, eps)).collect();
    inner_solve_rhs(space, &g.into(), w, p, eps, config)
}

/// Picard iteration for `L_{w,ε}(U) = g - mean(g - L_{w,ε}(U))` from `U₀ = 0`.
pub fn inner_solve_rhs(
    space: &DiscreteMms,
    g: &ScalarField,
    w: &ScalarField,
    p: f64,
    eps: f64,
    config: &FixedPointConfig,
) -> Result<(ScalarField, InnerTrace)> {
    g.check(space)?;
    w.check(space)?;
    check_range(p)?;
    check_eps(eps)?;
    config.validate()?;
    space.require_connected()?;
    inner_core(space, g.values(), w.values(), p, eps, config).map(|(u, t)| (u.into(), t))
}

/// Also accepts `ε = 0` when `Γ(w,w) > 0` everywhere.
///
/// The stopping threshold is `max(inner_tolerance, 1e-11 ‖g‖)`: increments
/// below the relative floor are at the precision of the Poisson solves.
pub(crate) fn inner_core(
    space: &DiscreteMms,
    g: &[f64],
    w: &[f64],
    p: f64,
    eps: f64,
    config: &FixedPointConfig,
) -> Result<(Vec<f64>, InnerTrace)> {
    let m = space.measure();
    let total = space.total_measure();
    let n = space.len();
    let qw: Vec<f64> = gamma_raw(space, w, w).iter().map(|q| q + eps).collect();
    let g_norm = norm(g, m);
    let threshold = config.inner_tolerance.max(1e-11 * g_norm);
    let opts = LinearSolveOptions::default();
    let contraction = (p - 2.0).abs();

    let mut u = vec![0.0; n];
    let mut lap_u = vec![0.0; n];
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    let mut above_one = 0;
    let mut iterations = 0;
    let mut failure = None;
    loop {
        if iterations >= config.max_inner {
            failure = Some(Failure::InnerIterationCap);
            break;
        }
        iterations += 1;
        let mut rhs = g.to_vec();
        if p != 2.0 {
            let h = hessian_proxy_raw(space, &u, w);
            for x in 0..n {
                rhs[x] -= (p - 2.0) * h[x] / qw[x];
            }
        }
        let c = mean(&rhs, m, total);
        rhs.iter_mut().for_each(|v| *v -= c);
        let next = solve_zero_mean_poisson(space, &ScalarField::new(rhs), &opts)?.into_vec();
        let lap_next = laplacian_raw(space, &next);
        let diff: Vec<f64> = lap_next.iter().zip(&lap_u).map(|(a, b)| a - b).collect();
        let inc = norm(&diff, m);
        if let Some(&prev) = increments.last() {
            let ratio = if prev > 0.0 { inc / prev } else { 0.0 };
            ratios.push(ratio);
            above_one = if ratio > 1.0 { above_one + 1 } else { 0 };
        }
        increments.push(inc);
        u = next;
        lap_u = lap_next;
        if p == 2.0 || inc < threshold {
            break;
        }
        if above_one >= config.divergence_window {
            failure = Some(Failure::InnerDivergence {
                window: config.divergence_window,
            });
            break;
        }
    }
    let lu = frozen_raw(space, &u, w, p, eps);
    let defect: Vec<f64> = lu.iter().zip(g).map(|(a, b)| b - a).collect();
    let c = mean(&defect, m, total);
    let residual: Vec<f64> = defect.iter().map(|d| d - c).collect();
    let lap_norm = norm(&lap_u, m);
    let trace = InnerTrace {
        iterations,
        ratio_premise: ratios.iter().all(|&r| r <= contraction),
        bound_check: lap_norm <= g_norm / (1.0 - contraction) + 1e-9,
        contraction_ratios: ratios,
        increments,
        final_equation_residual: norm(&residual, m),
        rhs_norm: g_norm,
        solution_laplacian_norm: lap_norm,
    };
    if let Some(failure) = failure {
        let mut err = FixedPointError::new(failure);
        err.best = Some(u.into());
        err.inner = Some(trace);
        return Err(err.into());
    }
    Ok((u, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::developed_operator;
    use crate::linsolve::solve_zero_mean_poisson;
    use crate::space::{generate_space, SpaceKind};

    #[test]
    fn p2_reduces_to_laplacian() {
        let s = generate_space(SpaceKind::Random(10, 1)).unwrap();
        let u = ScalarField::random(10, 1);
        let w = ScalarField::random(10, 2);
        let l = frozen_operator(&s, &u, &w, 2.0, 0.3).unwrap();
        assert_eq!(l, crate::calculus::laplacian(&s, &u).unwrap());
        let f = ScalarField::random_zero_mean(&s, 3);
        let (big_u, trace) = inner_solve(&s, &f, &w, 2.0, 0.3, &Default::default()).unwrap();
        assert_eq!(trace.iterations, 1);
        let lin = solve_zero_mean_poisson(&s, &f, &Default::default()).unwrap();
        assert!(big_u.sup_distance(&lin) < 1e-14);
    }

    #[test]
    fn compatibility_and_linearity() {
        let s = generate_space(SpaceKind::Grid(3, 3)).unwrap();
        let w = ScalarField::random(9, 4);
        let (p, eps) = (2.5, 0.2);
        let lw = frozen_operator(&s, &w, &w, p, eps).unwrap();
        let d = developed_operator(&s, &w, p, eps).unwrap().value;
        assert!(lw.sup_distance(&d) < 1e-12);
        let a = ScalarField::random(9, 5);
        let b = ScalarField::random(9, 6);
        let sum = frozen_operator(&s, &a.scale(2.0).add(&b), &w, p, eps).unwrap();
        let parts = frozen_operator(&s, &a, &w, p, eps)
            .unwrap()
            .scale(2.0)
            .add(&frozen_operator(&s, &b, &w, p, eps).unwrap());
        assert!(sum.sup_distance(&parts) < 1e-12);
    }

    #[test]
    fn path_contraction_regression() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let w = ScalarField::new(vec![0.0, 1.0, 2.0]);
        let f = ScalarField::random_zero_mean(&s, 7);
        let (_, trace) = inner_solve(&s, &f, &w, 2.5, 1.0, &Default::default()).unwrap();
        for r in trace.contraction_ratios.iter().skip(1) {
            assert!(*r <= 0.6, "{:?}", trace.contraction_ratios);
        }
        assert!(trace.final_equation_residual < 1e-10);
        if trace.ratio_premise {
            assert!(trace.bound_check);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let z = ScalarField::zeros(3);
        let cfg = FixedPointConfig::default();
        assert!(frozen_operator(&s, &z, &z, 2.5, 0.0).is_err());
        assert!(inner_solve(&s, &z, &z, 3.5, 1.0, &cfg).is_err());
        assert!(inner_solve(&s, &ScalarField::constant(3, 1.0), &z, 2.5, 1.0, &cfg).is_err());
    }
}
