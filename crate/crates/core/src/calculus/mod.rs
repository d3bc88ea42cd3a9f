//! Discrete Γ-calculus on a weighted graph.
//!
//! With conductances `w_xy` and measure `m`:
//!
//! - `Γ(f,g)(x) = (1 / 2m(x)) Σ_{y~x} w_xy (f(y)-f(x)) (g(y)-g(x))`
//! - `Δf(x) = (1 / m(x)) Σ_{y~x} w_xy (f(y)-f(x))`
//! - `Δ_{p,ε}u(x) = (1 / m(x)) Σ_{y~x} (w_xy / 2)(a(x)+a(y)) (u(y)-u(x))`
//!   with `a = (Γ(u,u)+ε)^{(p-2)/2}`
//!
//! so that `Σ Δf φ m = -Σ Γ(f,φ) m` and `Σ Δ_{p,ε}u φ m = -Σ a Γ(u,φ) m`
//! hold exactly. The gradient modulus is vertex based: `|Du|² = Γ(u,u)`.

mod curvature;
mod field;

pub use curvature::{curvature_at, curvature_lower_bound, CurvatureReport, VertexCurvature};
pub use field::ScalarField;

use crate::space::DiscreteMms;
use crate::{util, Error, Result};

pub(crate) fn gamma_raw(space: &DiscreteMms, f: &[f64], g: &[f64]) -> Vec<f64> {
    (0..space.len())
        .map(|x| {
            let s: f64 = space
                .neighbors(x)
                .iter()
                .map(|nb| nb.conductance * ((f[nb.vertex] - f[x]) * (g[nb.vertex] - g[x])))
                .sum();
            s / (2.0 * space.measure()[x])
        })
        .collect()
}

pub(crate) fn laplacian_raw(space: &DiscreteMms, f: &[f64]) -> Vec<f64> {
    (0..space.len())
        .map(|x| {
            let s: f64 = space
                .neighbors(x)
                .iter()
                .map(|nb| nb.conductance * (f[nb.vertex] - f[x]))
                .sum();
            s / space.measure()[x]
        })
        .collect()
}

/// Divergence-form operator `(1/m(x)) Σ w_xy c_xy (u(y)-u(x))` with
/// `c_xy = (a(x)+a(y))/2`.
pub(crate) fn weighted_laplacian_raw(space: &DiscreteMms, coeff: &[f64], u: &[f64]) -> Vec<f64> {
    (0..space.len())
        .map(|x| {
            let s: f64 = space
                .neighbors(x)
                .iter()
                .map(|nb| {
                    let c = 0.5 * (coeff[x] + coeff[nb.vertex]);
                    nb.conductance * c * (u[nb.vertex] - u[x])
                })
                .sum();
            s / space.measure()[x]
        })
        .collect()
}

/// Coefficient `(q+ε)^{(p-2)/2}`, set to 0 where `q+ε = 0` and `p < 2`.
pub(crate) fn coefficient(q: f64, p: f64, eps: f64) -> f64 {
    let base = q + eps;
    if p == 2.0 {
        1.0
    } else if base <= 0.0 {
        // p < 2: convention; p > 2: 0^{positive} = 0
        0.0
    } else {
        base.powf(0.5 * (p - 2.0))
    }
}

pub(crate) fn coefficient_field(gamma_uu: &[f64], p: f64, eps: f64) -> Vec<f64> {
    gamma_uu.iter().map(|&q| coefficient(q, p, eps)).collect()
}

pub(crate) fn p_laplacian_raw(space: &DiscreteMms, u: &[f64], p: f64, eps: f64) -> Vec<f64> {
    let q = gamma_raw(space, u, u);
    let a = coefficient_field(&q, p, eps);
    weighted_laplacian_raw(space, &a, u)
}

fn check2(space: &DiscreteMms, f: &ScalarField, g: &ScalarField) -> Result<()> {
    f.check(space)?;
    g.check(space)
}

fn check_eps(eps: f64, strict: bool) -> Result<()> {
    let ok = if strict { eps > 0.0 } else { eps >= 0.0 };
    if !(ok && eps.is_finite()) {
        let bound = if strict { "> 0" } else { ">= 0" };
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must be {bound}")));
    }
    Ok(())
}

/// Carré du champ `Γ(f,g)`.
pub fn gamma(space: &DiscreteMms, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    check2(space, f, g)?;
    Ok(gamma_raw(space, f.values(), g.values()).into())
}

/// `Γ(u,u) = |Du|²`.
pub fn gamma_sq(space: &DiscreteMms, u: &ScalarField) -> Result<ScalarField> {
    gamma(space, u, u)
}

pub fn laplacian(space: &DiscreteMms, f: &ScalarField) -> Result<ScalarField> {
    f.check(space)?;
    Ok(laplacian_raw(space, f.values()).into())
}

/// ε-regularized p-Laplacian; `ε = 0` gives `Δ_p` with the zero-coefficient
/// convention at points where `Γ(u,u) = 0` and `p < 2`.
pub fn p_laplacian(space: &DiscreteMms, u: &ScalarField, p: f64, eps: f64) -> Result<ScalarField> {
    u.check(space)?;
    util::check_exponent(p)?;
    check_eps(eps, false)?;
    Ok(p_laplacian_raw(space, u.values(), p, eps).into())
}

/// Discrete p-energy `(1/p) Σ (Γ(u,u)+ε)^{p/2} m`.
pub fn p_energy(space: &DiscreteMms, u: &ScalarField, p: f64, eps: f64) -> Result<f64> {
    u.check(space)?;
    util::check_exponent(p)?;
    check_eps(eps, false)?;
    Ok(p_energy_raw(space, u.values(), p, eps))
}

pub(crate) fn p_energy_raw(space: &DiscreteMms, u: &[f64], p: f64, eps: f64) -> f64 {
    gamma_raw(space, u, u)
        .iter()
        .zip(space.measure())
        .map(|(q, m)| (q + eps).powf(0.5 * p) * m)
        .sum::<f64>()
        / p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfLaplacianForm {
    /// `½ Γ(u, Γ(u,u))`
    Gamma,
    /// `√Γ(u,u) · Γ(√Γ(u,u), u)`
    Paper,
}

pub(crate) fn inf_laplacian_gamma_raw(space: &DiscreteMms, u: &[f64]) -> Vec<f64> {
    let q = gamma_raw(space, u, u);
    gamma_raw(space, u, &q).into_iter().map(|v| 0.5 * v).collect()
}

pub fn inf_laplacian(space: &DiscreteMms, u: &ScalarField, form: InfLaplacianForm) -> Result<ScalarField> {
    u.check(space)?;
    let out = match form {
        InfLaplacianForm::Gamma => inf_laplacian_gamma_raw(space, u.values()),
        InfLaplacianForm::Paper => {
            let modulus: Vec<f64> = gamma_raw(space, u.values(), u.values())
                .into_iter()
                .map(f64::sqrt)
                .collect();
            let inner = gamma_raw(space, &modulus, u.values());
            modulus.iter().zip(inner).map(|(a, b)| a * b).collect()
        }
    };
    Ok(out.into())
}

pub(crate) fn hessian_proxy_raw(space: &DiscreteMms, big_u: &[f64], w: &[f64]) -> Vec<f64> {
    let guw = gamma_raw(space, big_u, w);
    let gww = gamma_raw(space, w, w);
    let first = gamma_raw(space, w, &guw);
    let second = gamma_raw(space, big_u, &gww);
    first.iter().zip(second).map(|(a, b)| a - 0.5 * b).collect()
}

/// Frozen Hessian `H_U[w] = Γ(w, Γ(U,w)) - ½ Γ(U, Γ(w,w))`, linear in `U`.
pub fn hessian_proxy(space: &DiscreteMms, big_u: &ScalarField, w: &ScalarField) -> Result<ScalarField> {
    check2(space, big_u, w)?;
    Ok(hessian_proxy_raw(space, big_u.values(), w.values()).into())
}

/// Developed operator and the residual of the develop identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Developed {
    /// `D = Δu + (p-2) Δ_∞u / (Γ(u,u)+ε)` with the Γ-form of `Δ_∞`.
    pub value: ScalarField,
    /// `Δ_{p,ε}u - (Γ(u,u)+ε)^{(p-2)/2} D`; vanishes only in the smooth limit.
    pub residual: ScalarField,
}

pub fn developed_operator(space: &DiscreteMms, u: &ScalarField, p: f64, eps: f64) -> Result<Developed> {
    u.check(space)?;
    util::check_exponent(p)?;
    check_eps(eps, true)?;
    let uv = u.values();
    let q = gamma_raw(space, uv, uv);
    let lap = laplacian_raw(space, uv);
    let inf = inf_laplacian_gamma_raw(space, uv);
    let value: Vec<f64> = (0..space.len())
        .map(|x| lap[x] + (p - 2.0) * inf[x] / (q[x] + eps))
        .collect();
    let plap = p_laplacian_raw(space, uv, p, eps);
    let residual = (0..space.len())
        .map(|x| plap[x] - coefficient(q[x], p, eps) * value[x])
        .collect::<Vec<_>>();
    Ok(Developed {
        value: value.into(),
        residual: residual.into(),
    })
}

pub(crate) fn gamma2_raw(space: &DiscreteMms, u: &[f64]) -> Vec<f64> {
    let q = gamma_raw(space, u, u);
    let lap_q = laplacian_raw(space, &q);
    let lap_u = laplacian_raw(space, u);
    let g = gamma_raw(space, u, &lap_u);
    lap_q.iter().zip(g).map(|(a, b)| 0.5 * a - b).collect()
}

/// `Γ₂(u) = ½ Δ Γ(u,u) - Γ(u, Δu)`.
pub fn gamma2(space: &DiscreteMms, u: &ScalarField) -> Result<ScalarField> {
    u.check(space)?;
    Ok(gamma2_raw(space, u.values()).into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BochnerCheck {
    pub pass: bool,
    /// `min_x Γ₂(u)(x) - K Γ(u,u)(x)`.
    pub margin: f64,
    pub worst_vertex: usize,
}

/// Pointwise check of `Γ₂(u) >= K Γ(u,u)`. Negative margins down to
/// `-tolerance · (1 + max|Γ₂| + |K| max Γ)` count as rounding.
pub fn weak_bochner_check(space: &DiscreteMms, u: &ScalarField, k: f64, tolerance: f64) -> Result<BochnerCheck> {
    u.check(space)?;
    let g2 = gamma2_raw(space, u.values());
    let q = gamma_raw(space, u.values(), u.values());
    let (mut margin, mut worst_vertex) = (f64::INFINITY, 0);
    let mut scale: f64 = 1.0;
    for x in 0..space.len() {
        let d = g2[x] - k * q[x];
        if d < margin {
            margin = d;
            worst_vertex = x;
        }
        scale = scale.max(1.0 + g2[x].abs() + k.abs() * q[x]);
    }
    Ok(BochnerCheck {
        pass: margin >= -tolerance * scale,
        margin,
        worst_vertex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_space, DiscreteMms, EdgeSpec, SpaceKind};
    use proptest::prelude::*;

    fn p3() -> DiscreteMms {
        generate_space(SpaceKind::Path(3)).unwrap()
    }

    fn two_point() -> DiscreteMms {
        generate_space(SpaceKind::Path(2)).unwrap()
    }

    fn f(v: &[f64]) -> ScalarField {
        ScalarField::new(v.to_vec())
    }

    #[test]
    fn gamma_worked_example() {
        let g = gamma(&p3(), &f(&[0.0, 1.0, 0.0]), &f(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(g.values(), &[0.5, 1.0, 0.5]);
        let c = gamma(&p3(), &f(&[2.0; 3]), &f(&[0.3, -1.0, 7.0])).unwrap();
        assert_eq!(c.values(), &[0.0; 3]);
    }

    #[test]
    fn mismatched_fields_rejected() {
        assert!(gamma(&p3(), &f(&[0.0, 1.0]), &f(&[0.0, 1.0, 0.0])).is_err());
        assert!(laplacian(&p3(), &f(&[0.0])).is_err());
    }

    #[test]
    fn laplacian_worked_example() {
        let l = laplacian(&p3(), &f(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(l.values(), &[1.0, -2.0, 1.0]);
        assert_eq!(laplacian(&p3(), &f(&[4.0; 3])).unwrap().values(), &[0.0; 3]);
    }

    #[test]
    fn p_laplacian_examples() {
        for p in [1.5, 2.0, 3.0] {
            for eps in [0.0, 0.1] {
                let c = p_laplacian(&p3(), &f(&[1.0; 3]), p, eps).unwrap();
                assert_eq!(c.values(), &[0.0; 3]);
                let lin = p_laplacian(&p3(), &f(&[0.0, 1.0, 2.0]), p, eps).unwrap();
                assert_eq!(lin[1], 0.0);
            }
        }
        assert!(p_laplacian(&p3(), &f(&[0.0; 3]), 1.0, 0.0).is_err());
        assert!(p_laplacian(&p3(), &f(&[0.0; 3]), 2.0, -1.0).is_err());
    }

    /// Central finite-difference gradient of the p-energy.
    fn fd_energy_gradient(space: &DiscreteMms, u: &[f64], p: f64, eps: f64) -> Vec<f64> {
        let h = 1e-6;
        (0..u.len())
            .map(|i| {
                let mut up = u.to_vec();
                let mut dn = u.to_vec();
                up[i] += h;
                dn[i] -= h;
                (p_energy_raw(space, &up, p, eps) - p_energy_raw(space, &dn, p, eps)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn p_laplacian_is_energy_gradient_p3() {
        let s = p3();
        let u = [0.0, 1.0, 0.0];
        let fd = fd_energy_gradient(&s, &u, 3.0, 0.0);
        let l = p_laplacian_raw(&s, &u, 3.0, 0.0);
        for x in 0..3 {
            let expect = -fd[x] / s.measure()[x];
            assert!((l[x] - expect).abs() < 1e-10, "{x}: {} vs {expect}", l[x]);
        }
    }

    #[test]
    fn p_laplacian_p2_is_laplacian_exactly() {
        let s = generate_space(SpaceKind::Random(9, 4)).unwrap();
        let u = ScalarField::random(9, 1);
        for eps in [0.0, 1e-3, 10.0] {
            assert_eq!(p_laplacian(&s, &u, 2.0, eps).unwrap(), laplacian(&s, &u).unwrap());
        }
    }

    #[test]
    fn degenerate_coefficient_convention() {
        // Γ(u,u) vanishes at vertex 0 of this path.
        let s = generate_space(SpaceKind::Path(4)).unwrap();
        let u = f(&[1.0, 1.0, 0.0, 2.0]);
        let l = p_laplacian(&s, &u, 1.5, 0.0).unwrap();
        assert!(l.values().iter().all(|v| v.is_finite()));
        assert_eq!(coefficient(0.0, 1.5, 0.0), 0.0);
        assert_eq!(coefficient(0.0, 3.0, 0.0), 0.0);
        assert_eq!(coefficient(0.0, 2.0, 0.0), 1.0);
    }

    #[test]
    fn inf_laplacian_examples() {
        let u = f(&[0.0, 1.0, 2.0]);
        let g = inf_laplacian(&p3(), &u, InfLaplacianForm::Gamma).unwrap();
        assert_eq!(g[0], 0.125);
        for form in [InfLaplacianForm::Gamma, InfLaplacianForm::Paper] {
            let c = inf_laplacian(&p3(), &f(&[3.0; 3]), form).unwrap();
            assert_eq!(c.values(), &[0.0; 3]);
        }
    }

    #[test]
    fn inf_laplacian_forms_agree_on_two_points() {
        // On two points Γ(u,u) = ½(u1-u0)² at both vertices, so Γ(u, Γ(u,u))
        // and Γ(√Γ, u) vanish and both forms are zero: brute force over
        // random fields.
        let s = two_point();
        for seed in 0..50 {
            let u = ScalarField::random(2, seed);
            let a = inf_laplacian(&s, &u, InfLaplacianForm::Gamma).unwrap();
            let b = inf_laplacian(&s, &u, InfLaplacianForm::Paper).unwrap();
            assert!(a.sup_distance(&b) < 1e-15);
        }
    }

    #[test]
    fn hessian_proxy_identities() {
        let s = generate_space(SpaceKind::Random(10, 2)).unwrap();
        let u = ScalarField::random(10, 5);
        let w = ScalarField::random(10, 6);
        let v = ScalarField::random(10, 7);
        let hu = hessian_proxy(&s, &u, &u).unwrap();
        assert_eq!(hu, inf_laplacian(&s, &u, InfLaplacianForm::Gamma).unwrap());
        let zero = hessian_proxy(&s, &ScalarField::constant(10, 2.0), &w).unwrap();
        assert!(zero.max_abs() < 1e-15);
        let sum = hessian_proxy(&s, &u.add(&v), &w).unwrap();
        let parts = hessian_proxy(&s, &u, &w).unwrap().add(&hessian_proxy(&s, &v, &w).unwrap());
        assert!(sum.sup_distance(&parts) < 1e-12);
    }

    #[test]
    fn developed_operator_examples() {
        let s = p3();
        let u = f(&[0.0, 1.0, 2.0]);
        let d = developed_operator(&s, &u, 2.0, 0.5).unwrap();
        assert_eq!(d.value, laplacian(&s, &u).unwrap());
        assert_eq!(d.residual.values(), &[0.0; 3]);
        let c = developed_operator(&s, &f(&[1.0; 3]), 2.5, 0.1).unwrap();
        assert_eq!(c.value.values(), &[0.0; 3]);
        assert_eq!(c.residual.values(), &[0.0; 3]);
        assert!(developed_operator(&s, &u, 2.5, 0.0).is_err());
    }

    #[test]
    fn developed_residual_regression_p3() {
        // Hand evaluation with Γ(u,u) = (½, 1, ½), Δu = (1, 0, -1),
        // Δ_∞u = (1/8, 0, -1/8), a = (Γ+0.1)^{1/4}:
        //   D(0) = 1 + 0.5·(1/8)/0.6,  ρ(0) = ½(a0+a1) - a0·D(0)
        let a0 = 0.6f64.powf(0.25);
        let a1 = 1.1f64.powf(0.25);
        let d0 = 1.0 + 0.5 * 0.125 / 0.6;
        let rho0 = 0.5 * (a0 + a1) - a0 * d0;
        let d = developed_operator(&p3(), &f(&[0.0, 1.0, 2.0]), 2.5, 0.1).unwrap();
        assert!((d.value[0] - d0).abs() < 1e-15);
        assert!((d.residual[0] - rho0).abs() < 1e-15);
        assert!((d.residual[2] + rho0).abs() < 1e-15);
        assert_eq!(d.residual[1], 0.0);
        assert!((rho0 + 0.019_677_329_770_452_667).abs() < 1e-15, "{rho0}");
    }

    #[test]
    fn gamma2_two_point() {
        let s = two_point();
        let u = f(&[0.0, 1.0]);
        assert_eq!(gamma2(&s, &u).unwrap().values(), &[1.0, 1.0]);
        assert_eq!(gamma_sq(&s, &u).unwrap().values(), &[0.5, 0.5]);
        assert_eq!(gamma2(&s, &f(&[3.0, 3.0])).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn bochner_check_examples() {
        let s = two_point();
        let u = f(&[0.0, 1.0]);
        assert!(weak_bochner_check(&s, &u, 2.0, 1e-12).unwrap().pass);
        let fail = weak_bochner_check(&s, &u, 3.0, 1e-12).unwrap();
        assert!(!fail.pass && fail.margin < 0.0);
        let c = weak_bochner_check(&s, &f(&[1.0, 1.0]), 100.0, 0.0).unwrap();
        assert!(c.pass);
        assert_eq!(c.margin, 0.0);
    }

    fn weighted_space(n: usize, seed: u64) -> DiscreteMms {
        let base = generate_space(SpaceKind::Random(n, seed)).unwrap();
        let m = ScalarField::random(n, seed + 100).map(|v| 1.5 + v);
        let edges: Vec<EdgeSpec> = base.edges().to_vec();
        DiscreteMms::new(m.into_vec(), &edges).unwrap()
    }

    proptest! {
        #[test]
        fn gamma_symmetric_bilinear(seed in 0u64..500, t in -3.0f64..3.0) {
            let s = weighted_space(8, seed);
            let a = ScalarField::random(8, seed + 1);
            let b = ScalarField::random(8, seed + 2);
            let c = ScalarField::random(8, seed + 3);
            let gab = gamma(&s, &a, &b).unwrap();
            prop_assert_eq!(&gab, &gamma(&s, &b, &a).unwrap());
            let lhs = gamma(&s, &a.scale(t).add(&c), &b).unwrap();
            let rhs = gab.scale(t).add(&gamma(&s, &c, &b).unwrap());
            prop_assert!(lhs.sup_distance(&rhs) < 1e-12);
            let pol = gamma_sq(&s, &a.add(&b)).unwrap().sub(&gamma_sq(&s, &a.sub(&b)).unwrap()).scale(0.25);
            prop_assert!(pol.sup_distance(&gab) < 1e-12);
            prop_assert!(gamma_sq(&s, &a).unwrap().values().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn integration_by_parts(seed in 0u64..500) {
            let s = weighted_space(9, seed);
            let fld = ScalarField::random(9, seed + 10);
            let phi = ScalarField::random(9, seed + 11);
            let a = laplacian(&s, &fld).unwrap().inner(&phi, &s);
            let b = gamma(&s, &fld, &phi).unwrap().integral(&s);
            prop_assert!((a + b).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300));
        }

        #[test]
        fn weak_form_of_p_laplacian(seed in 0u64..300, p in 1.1f64..4.0, eps in 0.0f64..2.0) {
            let s = weighted_space(9, seed);
            let u = ScalarField::random(9, seed + 20);
            let phi = ScalarField::random(9, seed + 21);
            let l = p_laplacian(&s, &u, p, eps).unwrap();
            let q = gamma_sq(&s, &u).unwrap();
            let g = gamma(&s, &u, &phi).unwrap();
            let lhs = l.inner(&phi, &s);
            let rhs: f64 = (0..9).map(|x| coefficient(q[x], p, eps) * g[x] * s.measure()[x]).sum();
            prop_assert!((lhs + rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs()).max(1e-300));
        }

        #[test]
        fn gamma2_is_quadratic(seed in 0u64..300, t in -4.0f64..4.0) {
            let s = weighted_space(7, seed);
            let u = ScalarField::random(7, seed + 30);
            let a = gamma2(&s, &u.scale(t)).unwrap();
            let b = gamma2(&s, &u).unwrap().scale(t * t);
            prop_assert!(a.sup_distance(&b) < 1e-11 * (1.0 + b.max_abs()));
        }
    }
}
