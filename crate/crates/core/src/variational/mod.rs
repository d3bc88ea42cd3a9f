//! Direct-method solvers: p-Poisson (Dirichlet and Neumann), the first
//! p-eigenvalue and the p-capacity potential.
//!
//! Every solver minimizes a strictly convex energy with damped Newton and
//! then certifies the Euler–Lagrange equation with the exact coefficient
//! convention at `ε = 0`. Sign convention: the solution of a Poisson
//! problem satisfies `Δ_p u = f`, so the minimized energy is
//! `(1/p) Σ Γ(u,u)^{p/2} m + Σ f u m`.

mod eigen;
mod newton;
mod problem;

pub use problem::{parse_problem, EigenMode, ProblemKind, ProblemSpec};

use newton::EnergyProblem;

use crate::calculus::{gamma_raw, ScalarField};
use crate::linsolve::{check_zero_mean, interior_mask};
use crate::space::DiscreteMms;
use crate::{util, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Bound on `‖Δ_p u - f‖_{L²(m)}` over the free vertices.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Bound on the Euler–Lagrange residual of eigen problems.
    pub eigen_tolerance: f64,
    pub eigen_max_iterations: usize,
    /// Start Poisson solves from a seeded random field instead of zero.
    pub initial_seed: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
            eigen_tolerance: 1e-9,
            eigen_max_iterations: 5000,
            initial_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalResult {
    pub solution: ScalarField,
    pub objective_value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Objective after each accepted step (Poisson and capacity solves).
    pub objective_trace: Vec<f64>,
    pub eigenvalue: Option<f64>,
    pub capacity: Option<f64>,
}

/// Solves any [`ProblemSpec`].
pub fn solve(space: &DiscreteMms, spec: &ProblemSpec, config: &SolverConfig) -> Result<VariationalResult> {
    match &spec.kind {
        ProblemKind::PoissonDirichlet {
            boundary,
            boundary_values,
            f,
        } => solve_poisson_dirichlet(space, spec.p, boundary, boundary_values, f, config),
        ProblemKind::PoissonNeumann { f } => solve_poisson_neumann(space, spec.p, f, config),
        ProblemKind::Eigen(mode) => solve_eigen(space, spec.p, mode, config),
        ProblemKind::Capacity { k, omega } => solve_capacity(space, spec.p, k, omega, config),
    }
}

fn validate(space: &DiscreteMms, p: f64, f: &ScalarField, config: &SolverConfig) -> Result<()> {
    util::check_exponent(p)?;
    f.check(space)?;
    if !(config.tolerance > 0.0 && config.eigen_tolerance > 0.0) {
        return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
    }
    Ok(())
}

/// Dirichlet solve of `Δ_p u = f` on the free vertices; shared by the
/// Poisson, capacity and Dirichlet eigen solvers.
fn dirichlet_core(
    space: &DiscreteMms,
    p: f64,
    boundary: &[usize],
    boundary_values: &[f64],
    f: &ScalarField,
    start: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<VariationalResult> {
    let mask = interior_mask(space, boundary, boundary_values)?;
    let free: Vec<usize> = (0..space.len()).filter(|&x| mask[x]).collect();
    let mut u = match (start, config.initial_seed) {
        (Some(s), _) => s.to_vec(),
        (None, Some(seed)) => ScalarField::random(space.len(), seed).into_vec(),
        (None, None) => vec![0.0; space.len()],
    };
    for (&b, &v) in boundary.iter().zip(boundary_values) {
        u[b] = v;
    }
    let problem = EnergyProblem {
        space,
        f: f.values(),
        p,
        eps: 0.0,
        free,
        zero_mean: false,
    };
    let out = problem.minimize(u, config.tolerance, config.max_iterations)?;
    Ok(VariationalResult {
        solution: out.u.into(),
        objective_value: out.objective,
        kkt_residual: out.kkt,
        iterations: out.iterations,
        objective_trace: out.trace,
        eigenvalue: None,
        capacity: None,
    })
}

/// Minimizes the p-energy with `u` fixed on `boundary`; the minimizer
/// satisfies `Δ_p u = f` on the remaining vertices.
pub fn solve_poisson_dirichlet(
    space: &DiscreteMms,
    p: f64,
    boundary: &[usize],
    boundary_values: &[f64],
    f: &ScalarField,
    config: &SolverConfig,
) -> Result<VariationalResult> {
    validate(space, p, f, config)?;
    dirichlet_core(space, p, boundary, boundary_values, f, None, config)
}

/// Zero-mean solution of `Δ_p u = f` on a connected space.
pub fn solve_poisson_neumann(
    space: &DiscreteMms,
    p: f64,
    f: &ScalarField,
    config: &SolverConfig,
) -> Result<VariationalResult> {
    neumann_core(space, p, 0.0, f, None, config)
}

/// Zero-mean solution of `Δ_{p,ε}u = f`, the minimizer of
/// `(1/p) Σ (Γ(u,u)+ε)^{p/2} m + Σ f u m`.
pub fn solve_poisson_neumann_regularized(
    space: &DiscreteMms,
    p: f64,
    eps: f64,
    f: &ScalarField,
    config: &SolverConfig,
) -> Result<VariationalResult> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must be >= 0")));
    }
    neumann_core(space, p, eps, f, None, config)
}

fn neumann_core(
    space: &DiscreteMms,
    p: f64,
    eps: f64,
    f: &ScalarField,
    start: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<VariationalResult> {
    validate(space, p, f, config)?;
    space.require_connected()?;
    check_zero_mean(space, f)?;
    let f = f.project_zero_mean(space);
    let u = match (start, config.initial_seed) {
        (Some(s), _) => ScalarField::new(s.to_vec()),
        (None, Some(seed)) => ScalarField::random_zero_mean(space, seed),
        (None, None) => ScalarField::zeros(space.len()),
    }
    .project_zero_mean(space);
    let problem = EnergyProblem {
        space,
        f: f.values(),
        p,
        eps,
        free: (0..space.len()).collect(),
        zero_mean: true,
    };
    let out = problem.minimize(u.into_vec(), config.tolerance, config.max_iterations)?;
    Ok(VariationalResult {
        solution: out.u.into(),
        objective_value: out.objective,
        kkt_residual: out.kkt,
        iterations: out.iterations,
        objective_trace: out.trace,
        eigenvalue: None,
        capacity: None,
    })
}

/// First p-eigenvalue and its eigenfunction, normalized in `L^p(m)`.
pub fn solve_eigen(space: &DiscreteMms, p: f64, mode: &EigenMode, config: &SolverConfig) -> Result<VariationalResult> {
    validate(space, p, &ScalarField::zeros(space.len()), config)?;
    eigen::inverse_power(space, p, mode, config)
}

/// p-capacity potential of `k` relative to `omega`: `u = 1` on `k`,
/// `u = 0` off `omega`, p-harmonic in between. `Cap_p = Σ Γ(u,u)^{p/2} m`.
pub fn solve_capacity(
    space: &DiscreteMms,
    p: f64,
    k: &[usize],
    omega: &[usize],
    config: &SolverConfig,
) -> Result<VariationalResult> {
    validate(space, p, &ScalarField::zeros(space.len()), config)?;
    if k.is_empty() {
        return Err(Error::InvalidParameter("capacity plate K is empty".into()));
    }
    let mut in_omega = vec![false; space.len()];
    for &x in omega {
        space.check_vertex(x)?;
        in_omega[x] = true;
    }
    let mut in_k = vec![false; space.len()];
    for &x in k {
        space.check_vertex(x)?;
        if !in_omega[x] {
            return Err(Error::InvalidParameter(format!("K is not contained in omega (vertex {x})")));
        }
        in_k[x] = true;
    }
    if in_omega.iter().all(|&b| b) {
        return Err(Error::InvalidParameter(
            "omega must be a proper subset of the vertices".into(),
        ));
    }
    let mut boundary = Vec::new();
    let mut values = Vec::new();
    for x in 0..space.len() {
        if in_k[x] {
            boundary.push(x);
            values.push(1.0);
        } else if !in_omega[x] {
            boundary.push(x);
            values.push(0.0);
        }
    }
    let mut result = dirichlet_core(space, p, &boundary, &values, &ScalarField::zeros(space.len()), None, config)?;
    let u = &result.solution;
    if u.min() < -1e-10 || u.max() > 1.0 + 1e-10 {
        return Err(Error::Hypothesis(format!(
            "capacity potential leaves [0, 1]: range [{}, {}]",
            u.min(),
            u.max()
        )));
    }
    let cap: f64 = gamma_raw(space, u.values(), u.values())
        .iter()
        .zip(space.measure())
        .map(|(q, m)| q.powf(0.5 * p) * m)
        .sum();
    result.capacity = Some(cap);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::p_laplacian;
    use crate::linsolve::{solve_dirichlet_linear, solve_zero_mean_poisson};
    use crate::space::{generate_space, EdgeSpec, SpaceKind};

    #[test]
    fn path_midpoint_any_p() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let r = solve_poisson_dirichlet(&s, p, &[0, 2], &[0.0, 1.0], &ScalarField::zeros(3), &Default::default())
                .unwrap();
            assert!((r.solution[1] - 0.5).abs() < 1e-10, "p = {p}: {:?}", r.solution);
        }
    }

    #[test]
    fn free_leaf_copies_its_neighbor() {
        // vertex 3 hangs off vertex 1 and carries no data: Γ vanishes there
        let edges = [EdgeSpec::unit(0, 1), EdgeSpec::unit(1, 2), EdgeSpec::unit(1, 3)];
        let s = DiscreteMms::new(vec![1.0; 4], &edges).unwrap();
        for p in [1.2, 1.5, 2.5, 3.0] {
            for (a, b) in [(0.0, 1.0), (-0.62, -0.68), (0.31, 0.337)] {
                let r = solve_poisson_dirichlet(&s, p, &[0, 2], &[a, b], &ScalarField::zeros(4), &Default::default())
                    .unwrap();
                assert_eq!(r.solution[3], r.solution[1], "p = {p}");
                assert!(r.kkt_residual <= 1e-10);
            }
        }
    }

    #[test]
    fn p2_dirichlet_matches_linear() {
        let s = generate_space(SpaceKind::Grid(3, 3)).unwrap();
        let f = ScalarField::random(9, 3);
        let bv = [0.3, -1.0, 2.0];
        let r = solve_poisson_dirichlet(&s, 2.0, &[0, 4, 8], &bv, &f, &Default::default()).unwrap();
        let lin = solve_dirichlet_linear(&s, &[0, 4, 8], &bv, &f, &Default::default()).unwrap();
        assert!(r.solution.sup_distance(&lin) < 1e-9);
    }

    #[test]
    fn neumann_basics() {
        let s = generate_space(SpaceKind::Cycle(5)).unwrap();
        let zero = solve_poisson_neumann(&s, 1.5, &ScalarField::zeros(5), &Default::default()).unwrap();
        assert_eq!(zero.solution, ScalarField::zeros(5));
        let f = ScalarField::random_zero_mean(&s, 11);
        let r = solve_poisson_neumann(&s, 2.0, &f, &Default::default()).unwrap();
        let lin = solve_zero_mean_poisson(&s, &f, &Default::default()).unwrap();
        assert!(r.solution.sup_distance(&lin) < 1e-9);
        for p in [1.5, 2.5] {
            let r = solve_poisson_neumann(&s, p, &f, &Default::default()).unwrap();
            assert!(r.kkt_residual < 1e-10);
            assert!(r.solution.mean(&s).abs() < 1e-14);
            let lap = p_laplacian(&s, &r.solution, p, 0.0).unwrap();
            assert!(lap.sub(&f).norm_l2(&s) < 1e-10);
        }
        assert!(matches!(
            solve_poisson_neumann(&s, 2.0, &ScalarField::constant(5, 1.0), &Default::default()),
            Err(Error::NonzeroMean { .. })
        ));
    }

    #[test]
    fn objective_trace_non_increasing() {
        let s = generate_space(SpaceKind::Random(12, 2)).unwrap();
        let f = ScalarField::random_zero_mean(&s, 5);
        let cfg = SolverConfig {
            initial_seed: Some(9),
            ..Default::default()
        };
        for p in [1.5, 2.5] {
            let r = solve_poisson_neumann(&s, p, &f, &cfg).unwrap();
            for w in r.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{w:?}");
            }
        }
    }

    #[test]
    fn capacity_star_and_errors() {
        let s = generate_space(SpaceKind::Star(3)).unwrap();
        let r = solve_capacity(&s, 2.0, &[0], &[0], &Default::default()).unwrap();
        assert_eq!(r.capacity, Some(3.0));
        assert_eq!(r.solution.values(), &[1.0, 0.0, 0.0, 0.0]);
        assert!(solve_capacity(&s, 2.0, &[], &[0], &Default::default()).is_err());
        assert!(solve_capacity(&s, 2.0, &[1], &[0], &Default::default()).is_err());
        assert!(solve_capacity(&s, 2.0, &[0], &[0, 1, 2, 3], &Default::default()).is_err());
    }

    #[test]
    fn exponent_checked() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let err = solve_poisson_neumann(&s, 1.0, &ScalarField::zeros(3), &Default::default()).unwrap_err();
        assert!(err.to_string().contains("(1, inf)"));
    }
}
