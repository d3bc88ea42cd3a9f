//! Nonlinear inverse power iteration for the first p-eigenvalue.
//!
//! Each step solves `Δ_p v = -|u|^{p-2} u`, retracts onto the constraint
//! set and normalizes `‖u‖_{L^p(m)} = 1`. A fixed point is an eigenpair with
//! `λ = ‖v‖_p^{1-p}`; the eigenvalue reported is the Rayleigh quotient.

use super::{dirichlet_core, neumann_core, SolverConfig, VariationalResult};
use crate::calculus::{gamma_raw, p_laplacian_raw, ScalarField};
use crate::linsolve::interior_mask;
use crate::space::DiscreteMms;
use crate::variational::EigenMode;
use crate::{Error, Result};

fn odd_power(v: f64, p: f64) -> f64 {
    v.signum() * v.abs().powf(p - 1.0)
}

fn lp_norm(u: &[f64], m: &[f64], p: f64) -> f64 {
    u.iter().zip(m).map(|(v, m)| v.abs().powf(p) * m).sum::<f64>().powf(1.0 / p)
}

/// `Σ Γ(u,u)^{p/2} m / Σ |u|^p m`.
pub(crate) fn rayleigh_quotient(space: &DiscreteMms, u: &[f64], p: f64) -> f64 {
    let m = space.measure();
    let num: f64 = gamma_raw(space, u, u).iter().zip(m).map(|(q, m)| q.powf(0.5 * p) * m).sum();
    num / lp_norm(u, m, p).powf(p)
}

/// Constant `c` with `Σ |v-c|^{p-2}(v-c) m = 0`, by bisection.
pub(crate) fn retraction_constant(v: &[f64], m: &[f64], p: f64) -> f64 {
    let g = |c: f64| -> f64 { v.iter().zip(m).map(|(x, w)| odd_power(x - c, p) * w).sum() };
    let (mut lo, mut hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Flips `u` so the lowest-index vertex of maximal `|u|` is non-negative.
fn fix_sign(u: &mut [f64]) {
    let pivot = u.iter().fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc });
    if pivot < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
}

pub(crate) fn inverse_power(
    space: &DiscreteMms,
    p: f64,
    mode: &EigenMode,
    config: &SolverConfig,
) -> Result<VariationalResult> {
    let n = space.len();
    let m = space.measure();
    let inner = SolverConfig {
        tolerance: config.tolerance.min(1e-2 * config.eigen_tolerance),
        initial_seed: None,
        ..config.clone()
    };
    let (free, mut u): (Vec<bool>, Vec<f64>) = match mode {
        EigenMode::Dirichlet { boundary } => {
            let zeros = vec![0.0; boundary.len()];
            let mask = interior_mask(space, boundary, &zeros)?;
            if !mask.iter().any(|&b| b) {
                return Err(Error::Degenerate("eigen problem has no interior vertices".into()));
            }
            let u = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            (mask, u)
        }
        EigenMode::Neumann => {
            space.require_connected()?;
            if n < 2 {
                return Err(Error::Degenerate("Neumann eigen problem needs two vertices".into()));
            }
            let d = space.distances_from(0);
            let c = retraction_constant(&d, m, p);
            (vec![true; n], d.iter().map(|v| v - c).collect())
        }
    };
    let norm = lp_norm(&u, m, p);
    u.iter_mut().for_each(|v| *v /= norm);

    let residual = |u: &[f64], lambda: f64| -> f64 {
        let lap = p_laplacian_raw(space, u, p, 0.0);
        (0..n)
            .filter(|&x| free[x])
            .map(|x| (lap[x] + lambda * odd_power(u[x], p)).powi(2) * m[x])
            .sum::<f64>()
            .sqrt()
    };

    let mut v_prev: Option<Vec<f64>> = None;
    let mut lambda = rayleigh_quotient(space, &u, p);
    let mut res = residual(&u, lambda);
    let mut iterations = 0;
    let mut best = res;
    while res > config.eigen_tolerance {
        if iterations >= config.eigen_max_iterations {
            return Err(Error::NonConvergence {
                solver: "p-eigen inverse iteration",
                iterations,
                residual: best,
            });
        }
        iterations += 1;
        let rhs: Vec<f64> = (0..n).map(|x| if free[x] { -odd_power(u[x], p) } else { 0.0 }).collect();
        let mut v = match mode {
            EigenMode::Dirichlet { boundary } => {
                let zeros = vec![0.0; boundary.len()];
                dirichlet_core(space, p, boundary, &zeros, &rhs.into(), v_prev.as_deref(), &inner)?
                    .solution
                    .into_vec()
            }
            EigenMode::Neumann => {
                let rhs = ScalarField::new(rhs).project_zero_mean(space);
                neumann_core(space, p, 0.0, &rhs, v_prev.as_deref(), &inner)?
                    .solution
                    .into_vec()
            }
        };
        v_prev = Some(v.clone());
        if matches!(mode, EigenMode::Neumann) {
            let c = retraction_constant(&v, m, p);
            v.iter_mut().for_each(|x| *x -= c);
        }
        let s = lp_norm(&v, m, p);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Degenerate("inverse iteration collapsed to zero".into()));
        }
        u = v.iter().map(|x| x / s).collect();
        lambda = rayleigh_quotient(space, &u, p);
        res = residual(&u, lambda);
        best = best.min(res);
    }
    fix_sign(&mut u);
    Ok(VariationalResult {
        objective_value: lambda,
        kkt_residual: res,
        iterations,
        objective_trace: Vec::new(),
        eigenvalue: Some(lambda),
        capacity: None,
        solution: u.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_space, SpaceKind};
    use crate::variational::solve_eigen;

    #[test]
    fn path_three_p2() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let n = solve_eigen(&s, 2.0, &EigenMode::Neumann, &Default::default()).unwrap();
        assert!((n.eigenvalue.unwrap() - 1.0).abs() < 1e-9);
        let d = solve_eigen(&s, 2.0, &EigenMode::Dirichlet { boundary: vec![0, 2] }, &Default::default()).unwrap();
        assert!((d.eigenvalue.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(d.solution.values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn cycle_neumann_constraint_and_residual() {
        let s = generate_space(SpaceKind::Cycle(6)).unwrap();
        for p in [1.5, 2.5] {
            let r = solve_eigen(&s, p, &EigenMode::Neumann, &Default::default()).unwrap();
            let u = r.solution.values();
            let constraint: f64 = u.iter().map(|&v| odd_power(v, p)).sum();
            assert!(constraint.abs() < 1e-12, "{constraint}");
            assert!(r.kkt_residual <= 1e-9);
            assert!((lp_norm(u, s.measure(), p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conductance_scaling() {
        // Γ scales with the conductances, so the quotient scales by c^{p/2}
        let s = generate_space(SpaceKind::Random(8, 3)).unwrap();
        let t = s.scale_conductances(3.0).unwrap();
        let mode = EigenMode::Dirichlet { boundary: vec![0] };
        for p in [2.0, 2.5] {
            let a = solve_eigen(&s, p, &mode, &Default::default()).unwrap().eigenvalue.unwrap();
            let b = solve_eigen(&t, p, &mode, &Default::default()).unwrap().eigenvalue.unwrap();
            assert!((b / a / 3f64.powf(0.5 * p) - 1.0).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn no_interior_is_degenerate() {
        let s = generate_space(SpaceKind::Path(2)).unwrap();
        let mode = EigenMode::Dirichlet { boundary: vec![0, 1] };
        assert!(matches!(solve_eigen(&s, 2.0, &mode, &Default::default()), Err(Error::Degenerate(_))));
    }
}
