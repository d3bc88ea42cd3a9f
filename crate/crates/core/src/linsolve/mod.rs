//! Linear solvers for the graph Laplacian.
//!
//! `-Δ` is symmetric and positive semidefinite in the measure inner product
//! `Σ f g m`, so conjugate gradients run in that inner product. The true
//! residual is recomputed at every restart, and on zero-mean problems the
//! iterate is projected back to zero mean there as well.

mod dense;

pub use dense::{dense_dirichlet_spectrum, dense_spectrum, Spectrum, DEFAULT_DENSE_CAP};

use crate::calculus::{laplacian_raw, weighted_laplacian_raw, ScalarField};
use crate::space::DiscreteMms;
use crate::{Error, Result};

/// Relative tolerance on a right-hand side's mean before it is rejected.
pub const MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveOptions {
    /// Relative residual `‖Au - h‖ / ‖h‖` in `L²(m)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LinearSolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 20_000,
        }
    }
}

impl LinearSolveOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "linear tolerance {} must lie in (0, 1)",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64], m: &[f64]) -> f64 {
    a.iter().zip(b).zip(m).map(|((x, y), w)| x * y * w).sum()
}

fn project(v: &mut [f64], m: &[f64], total: f64) {
    let mean = v.iter().zip(m).map(|(x, w)| x * w).sum::<f64>() / total;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Checks that `Σ h m` is zero relative to `Σ |h| m`.
pub(crate) fn check_zero_mean(space: &DiscreteMms, h: &ScalarField) -> Result<()> {
    let scale: f64 = h.values().iter().zip(space.measure()).map(|(v, m)| v.abs() * m).sum();
    let integral = h.integral(space);
    if integral.abs() > MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonzeroMean {
            mean: integral / space.total_measure(),
        });
    }
    Ok(())
}

/// Restarted CG for `A u = h` where `A = -op` is SPD in the `m` inner
/// product on the subspace selected by `mask` (and zero-mean when `mean_free`).
struct Cg<'a, F: Fn(&[f64]) -> Vec<f64>> {
    apply: F,
    weights: &'a [f64],
    mask: Option<&'a [bool]>,
    mean_free: bool,
    total: f64,
}

impl<F: Fn(&[f64]) -> Vec<f64>> Cg<'_, F> {
    fn restrict(&self, v: &mut [f64]) {
        if let Some(mask) = self.mask {
            v.iter_mut().zip(mask).for_each(|(x, &free)| {
                if !free {
                    *x = 0.0
                }
            });
        }
        if self.mean_free {
            project(v, self.weights, self.total);
        }
    }

    /// Residual `h - A u` restricted to the admissible subspace.
    fn residual(&self, u: &[f64], h: &[f64]) -> Vec<f64> {
        let au = (self.apply)(u);
        let mut r: Vec<f64> = h.iter().zip(&au).map(|(h, a)| h - a).collect();
        self.restrict(&mut r);
        r
    }

    fn solve(&self, h: &[f64], opts: &LinearSolveOptions, solver: &'static str) -> Result<Vec<f64>> {
        let n = h.len();
        let m = self.weights;
        let mut u = vec![0.0; n];
        let h_norm = dot(h, h, m).sqrt();
        if h_norm == 0.0 {
            return Ok(u);
        }
        let target = opts.tolerance * h_norm;
        let restart = n.max(10) + 10;
        let mut iterations = 0;
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        loop {
            let mut r = self.residual(&u, h);
            let r_norm = dot(&r, &r, m).sqrt();
            if r_norm <= target {
                if self.mean_free {
                    project(&mut u, m, self.total);
                }
                return Ok(u);
            }
            if r_norm < 0.5 * best {
                stalled = 0;
            } else {
                stalled += 1;
            }
            best = best.min(r_norm);
            if iterations >= opts.max_iterations || stalled >= 3 {
                return Err(Error::NonConvergence {
                    solver,
                    iterations,
                    residual: best / h_norm,
                });
            }
            let mut d = r.clone();
            let mut rr = dot(&r, &r, m);
            for _ in 0..restart {
                if iterations >= opts.max_iterations {
                    break;
                }
                iterations += 1;
                let mut ad = (self.apply)(&d);
                self.restrict(&mut ad);
                let dad = dot(&d, &ad, m);
                if !(dad > 0.0) {
                    break;
                }
                let alpha = rr / dad;
                u.iter_mut().zip(&d).for_each(|(x, di)| *x += alpha * di);
                r.iter_mut().zip(&ad).for_each(|(x, a)| *x -= alpha * a);
                let rr_new = dot(&r, &r, m);
                if rr_new.sqrt() <= 0.1 * target {
                    break;
                }
                let beta = rr_new / rr;
                rr = rr_new;
                d.iter_mut().zip(&r).for_each(|(x, ri)| *x = ri + beta * *x);
            }
        }
    }
}

/// Solves `ΔU = h` with `Σ U m = 0` on a connected space.
pub fn solve_zero_mean_poisson(
    space: &DiscreteMms,
    h: &ScalarField,
    opts: &LinearSolveOptions,
) -> Result<ScalarField> {
    opts.validate()?;
    h.check(space)?;
    space.require_connected()?;
    check_zero_mean(space, h)?;
    let rhs: Vec<f64> = h.project_zero_mean(space).values().iter().map(|v| -v).collect();
    let cg = Cg {
        apply: |u: &[f64]| laplacian_raw(space, u).into_iter().map(|v| -v).collect(),
        weights: space.measure(),
        mask: None,
        mean_free: true,
        total: space.total_measure(),
    };
    Ok(ScalarField::new(cg.solve(&rhs, opts, "zero-mean Poisson CG")?))
}

/// Solves `(1/m(x)) Σ w_xy (c(x)+c(y))/2 (U(y)-U(x)) = h(x)` with
/// `Σ U m = 0`. The vertex coefficient `c` must be positive.
pub fn solve_weighted_zero_mean(
    space: &DiscreteMms,
    coefficient: &ScalarField,
    h: &ScalarField,
    opts: &LinearSolveOptions,
) -> Result<ScalarField> {
    opts.validate()?;
    h.check(space)?;
    coefficient.check(space)?;
    if let Some(x) = coefficient.values().iter().position(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "coefficient at vertex {x} is {}, expected positive",
            coefficient[x]
        )));
    }
    space.require_connected()?;
    check_zero_mean(space, h)?;
    let rhs: Vec<f64> = h.project_zero_mean(space).values().iter().map(|v| -v).collect();
    let c = coefficient.values();
    let cg = Cg {
        apply: |u: &[f64]| weighted_laplacian_raw(space, c, u).into_iter().map(|v| -v).collect(),
        weights: space.measure(),
        mask: None,
        mean_free: true,
        total: space.total_measure(),
    };
    Ok(ScalarField::new(cg.solve(&rhs, opts, "weighted Poisson CG")?))
}

/// Solves `ΔU = h` on interior vertices with `U = boundary_values` on
/// `boundary`. `boundary_values[i]` belongs to `boundary[i]`.
pub fn solve_dirichlet_linear(
    space: &DiscreteMms,
    boundary: &[usize],
    boundary_values: &[f64],
    h: &ScalarField,
    opts: &LinearSolveOptions,
) -> Result<ScalarField> {
    opts.validate()?;
    h.check(space)?;
    let mask = interior_mask(space, boundary, boundary_values)?;
    let mut u = vec![0.0; space.len()];
    for (&b, &v) in boundary.iter().zip(boundary_values) {
        u[b] = v;
    }
    if mask.iter().all(|free| !free) {
        return Ok(ScalarField::new(u));
    }
    // -Δ(U₀ + V) = -h on the interior, with V = 0 on the boundary
    let lap0 = laplacian_raw(space, &u);
    let rhs: Vec<f64> = (0..space.len())
        .map(|x| if mask[x] { lap0[x] - h[x] } else { 0.0 })
        .collect();
    let cg = Cg {
        apply: |v: &[f64]| laplacian_raw(space, v).into_iter().map(|x| -x).collect(),
        weights: space.measure(),
        mask: Some(&mask),
        mean_free: false,
        total: space.total_measure(),
    };
    let v = cg.solve(&rhs, opts, "Dirichlet CG")?;
    u.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
    Ok(ScalarField::new(u))
}

/// Validates a Dirichlet boundary and returns the interior mask.
///
/// Every connected component of the interior must touch the boundary.
pub(crate) fn interior_mask(space: &DiscreteMms, boundary: &[usize], values: &[f64]) -> Result<Vec<bool>> {
    if boundary.is_empty() {
        return Err(Error::InvalidParameter("Dirichlet boundary is empty".into()));
    }
    if boundary.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: boundary.len(),
            got: values.len(),
        });
    }
    let mut mask = vec![true; space.len()];
    for &b in boundary {
        space.check_vertex(b)?;
        mask[b] = false;
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("boundary value {v} is not finite")));
    }
    // every interior vertex must reach the boundary
    let mut reached = vec![false; space.len()];
    let mut stack: Vec<usize> = boundary.to_vec();
    for &b in boundary {
        reached[b] = true;
    }
    while let Some(x) = stack.pop() {
        for nb in space.neighbors(x) {
            if !reached[nb.vertex] {
                reached[nb.vertex] = true;
                stack.push(nb.vertex);
            }
        }
    }
    if let Some(x) = (0..space.len()).find(|&x| !reached[x]) {
        return Err(Error::InvalidParameter(format!(
            "interior vertex {x} lies in a component without boundary vertices"
        )));
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::laplacian;
    use crate::space::{generate_space, EdgeSpec, SpaceKind};

    #[test]
    fn zero_rhs_gives_zero() {
        let s = generate_space(SpaceKind::Grid(3, 3)).unwrap();
        let u = solve_zero_mean_poisson(&s, &ScalarField::zeros(9), &Default::default()).unwrap();
        assert_eq!(u, ScalarField::zeros(9));
    }

    #[test]
    fn path_inverse() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let h = ScalarField::new(vec![1.0, -2.0, 1.0]);
        let u = solve_zero_mean_poisson(&s, &h, &Default::default()).unwrap();
        let expect = [-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0];
        for (a, b) in u.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let err = solve_zero_mean_poisson(&s, &ScalarField::constant(3, 1.0), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::NonzeroMean { .. }));
        let d = DiscreteMms::new(vec![1.0; 4], &[EdgeSpec::unit(0, 1), EdgeSpec::unit(2, 3)]).unwrap();
        let err = solve_zero_mean_poisson(&d, &ScalarField::zeros(4), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::Disconnected { .. }));
        let opts = LinearSolveOptions {
            tolerance: 1e-12,
            max_iterations: 1,
        };
        let g = generate_space(SpaceKind::Grid(4, 4)).unwrap();
        let h = ScalarField::random_zero_mean(&g, 1);
        assert!(matches!(
            solve_zero_mean_poisson(&g, &h, &opts),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn dirichlet_examples() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let u = solve_dirichlet_linear(&s, &[0, 2], &[0.0, 1.0], &ScalarField::zeros(3), &Default::default()).unwrap();
        assert!((u[1] - 0.5).abs() < 1e-14);
        let all = solve_dirichlet_linear(&s, &[0, 1, 2], &[3.0, 4.0, 5.0], &ScalarField::zeros(3), &Default::default())
            .unwrap();
        assert_eq!(all.values(), &[3.0, 4.0, 5.0]);
        assert!(solve_dirichlet_linear(&s, &[], &[], &ScalarField::zeros(3), &Default::default()).is_err());
        let d = DiscreteMms::new(vec![1.0; 4], &[EdgeSpec::unit(0, 1), EdgeSpec::unit(2, 3)]).unwrap();
        assert!(solve_dirichlet_linear(&d, &[0], &[1.0], &ScalarField::zeros(4), &Default::default()).is_err());
    }

    #[test]
    fn weighted_with_unit_coefficient_matches_laplacian() {
        let s = generate_space(SpaceKind::Random(10, 4)).unwrap();
        let h = ScalarField::random_zero_mean(&s, 9);
        let a = solve_zero_mean_poisson(&s, &h, &Default::default()).unwrap();
        let b = solve_weighted_zero_mean(&s, &ScalarField::constant(10, 1.0), &h, &Default::default()).unwrap();
        assert!(a.sup_distance(&b) < 1e-11);
        let r = laplacian(&s, &a).unwrap().sub(&h).norm_l2(&s) / h.norm_l2(&s);
        assert!(r <= 1e-12);
    }
}
