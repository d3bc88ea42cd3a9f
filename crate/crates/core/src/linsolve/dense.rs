use nalgebra::{DMatrix, SymmetricEigen};

use crate::calculus::ScalarField;
use crate::space::DiscreteMms;
use crate::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Eigenpairs of `-Δ`, ascending, with `m`-orthonormal fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub fields: Vec<ScalarField>,
}

/// Full spectrum of `-Δ` via the symmetrized matrix `M^{1/2} (-Δ) M^{-1/2}`.
pub fn dense_spectrum(space: &DiscreteMms, cap: usize) -> Result<Spectrum> {
    let free: Vec<usize> = (0..space.len()).collect();
    restricted_spectrum(space, &free, cap)
}

/// Spectrum of `-Δ` on the vertices outside `boundary` with zero values on
/// `boundary`. Fields vanish on the boundary.
pub fn dense_dirichlet_spectrum(space: &DiscreteMms, boundary: &[usize], cap: usize) -> Result<Spectrum> {
    let mut is_boundary = vec![false; space.len()];
    for &b in boundary {
        space.check_vertex(b)?;
        is_boundary[b] = true;
    }
    let free: Vec<usize> = (0..space.len()).filter(|&x| !is_boundary[x]).collect();
    if free.is_empty() {
        return Err(Error::Degenerate("no interior vertices".into()));
    }
    restricted_spectrum(space, &free, cap)
}

fn restricted_spectrum(space: &DiscreteMms, free: &[usize], cap: usize) -> Result<Spectrum> {
    let k = free.len();
    if k > cap {
        return Err(Error::DenseCapExceeded { n: k, cap });
    }
    let mut pos = vec![usize::MAX; space.len()];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = i;
    }
    let m = space.measure();
    let mut s = DMatrix::<f64>::zeros(k, k);
    for (i, &x) in free.iter().enumerate() {
        for nb in space.neighbors(x) {
            s[(i, i)] += nb.conductance / m[x];
            let j = pos[nb.vertex];
            if j != usize::MAX {
                s[(i, j)] -= nb.conductance / (m[x] * m[nb.vertex]).sqrt();
            }
        }
    }
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues = Vec::with_capacity(k);
    let mut fields = Vec::with_capacity(k);
    for &c in &order {
        eigenvalues.push(eig.eigenvalues[c]);
        let z = eig.eigenvectors.column(c);
        let mut phi = ScalarField::zeros(space.len());
        for (i, &x) in free.iter().enumerate() {
            phi[x] = z[i] / m[x].sqrt();
        }
        // sign: first vertex of largest magnitude is positive
        let pivot = phi
            .values()
            .iter()
            .fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            phi = phi.scale(-1.0);
        }
        fields.push(phi);
    }
    Ok(Spectrum { eigenvalues, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::laplacian;
    use crate::space::{generate_space, EdgeSpec, SpaceKind};

    #[test]
    fn path_three() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let sp = dense_spectrum(&s, DEFAULT_DENSE_CAP).unwrap();
        // characteristic polynomial of [[1,-1,0],[-1,2,-1],[0,-1,1]]: -λ(λ-1)(λ-3)
        for (a, b) in sp.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle_four_second_eigenvalue() {
        let s = generate_space(SpaceKind::Cycle(4)).unwrap();
        let sp = dense_spectrum(&s, DEFAULT_DENSE_CAP).unwrap();
        assert!((sp.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_components_double_zero() {
        let s = DiscreteMms::new(vec![1.0, 2.0, 1.0, 3.0], &[EdgeSpec::unit(0, 1), EdgeSpec::unit(2, 3)]).unwrap();
        let sp = dense_spectrum(&s, DEFAULT_DENSE_CAP).unwrap();
        assert!(sp.eigenvalues[0].abs() < 1e-12 && sp.eigenvalues[1].abs() < 1e-12);
        assert!(sp.eigenvalues[2] > 0.5);
    }

    #[test]
    fn fields_are_orthonormal_eigenfunctions() {
        let s = generate_space(SpaceKind::Random(9, 5)).unwrap();
        let s = s.with_measure((0..9).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap();
        let sp = dense_spectrum(&s, DEFAULT_DENSE_CAP).unwrap();
        for (i, (lam, phi)) in sp.eigenvalues.iter().zip(&sp.fields).enumerate() {
            let r = laplacian(&s, phi).unwrap().add(&phi.scale(*lam));
            assert!(r.max_abs() < 1e-9);
            for (j, psi) in sp.fields.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((phi.inner(psi, &s) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dirichlet_path_interior() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let sp = dense_dirichlet_spectrum(&s, &[0, 2], DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(sp.eigenvalues.len(), 1);
        assert!((sp.eigenvalues[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cap_enforced() {
        let s = generate_space(SpaceKind::Path(5)).unwrap();
        assert!(matches!(dense_spectrum(&s, 4), Err(Error::DenseCapExceeded { n: 5, cap: 4 })));
    }
}
