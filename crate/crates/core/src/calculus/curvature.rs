//! Bakry-Émery curvature lower bounds.
//!
//! At a vertex `x` both `Γ(u,u)(x)` and `Γ₂(u)(x)` are quadratic forms in
//! the values of `u` on the 2-hop ball of `x`, and both vanish on constants.
//! Pinning `u(x) = 0`, the Γ-form is diagonal and positive on the neighbors
//! `S₁` and zero on the second shell `S₂`, while the Γ₂-form is positive
//! definite on `S₂`. Minimizing over `S₂` first leaves the Schur complement
//! `B₁₁ - B₁₂ B₂₂⁻¹ B₂₁`, and `K(x)` is the smallest eigenvalue of that
//! complement in the metric of the Γ-form.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::ScalarField;
use crate::parallel::{map_range, Execution};
use crate::space::DiscreteMms;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct VertexCurvature {
    pub vertex: usize,
    /// `inf Γ₂(u)(x) / Γ(u,u)(x)`; `+∞` for an isolated vertex.
    pub k: f64,
    pub isolated: bool,
    /// Sparse minimizer `(vertex, value)` normalized to `Γ(u,u)(x) = 1`.
    pub minimizer: Vec<(usize, f64)>,
}

impl VertexCurvature {
    pub fn minimizer_field(&self, n: usize) -> ScalarField {
        let mut f = ScalarField::zeros(n);
        for &(i, v) in &self.minimizer {
            f[i] = v;
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub pointwise_k: Vec<f64>,
    pub global_k: f64,
    pub vertices: Vec<VertexCurvature>,
}

impl CurvatureReport {
    pub fn isolated_vertices(&self) -> Vec<usize> {
        self.vertices.iter().filter(|v| v.isolated).map(|v| v.vertex).collect()
    }
}

/// Curvature bound at every vertex.
pub fn curvature_lower_bound(space: &DiscreteMms, exec: Execution) -> CurvatureReport {
    let vertices = map_range(exec, space.len(), |x| vertex_curvature(space, x));
    let pointwise_k: Vec<f64> = vertices.iter().map(|v| v.k).collect();
    let global_k = pointwise_k.iter().copied().fold(f64::INFINITY, f64::min);
    CurvatureReport {
        pointwise_k,
        global_k,
        vertices,
    }
}

/// Curvature bound at a single vertex.
pub fn curvature_at(space: &DiscreteMms, x: usize) -> Result<VertexCurvature> {
    space.check_vertex(x)?;
    Ok(vertex_curvature(space, x))
}

/// Local quadratic forms `(A, B)` of `Γ(·,·)(x)` and `Γ₂(·)(x)` over the
/// sorted 2-hop ball `local`.
pub(crate) fn local_forms(space: &DiscreteMms, x: usize, local: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = local.len();
    let idx = |v: usize| local.binary_search(&v).expect("vertex in local ball");
    let m = space.measure();

    let gamma_form = |z: usize| -> DMatrix<f64> {
        let mut g = DMatrix::zeros(k, k);
        let iz = idx(z);
        let c = 1.0 / (2.0 * m[z]);
        for nb in space.neighbors(z) {
            let it = idx(nb.vertex);
            let w = nb.conductance * c;
            g[(it, it)] += w;
            g[(iz, iz)] += w;
            g[(it, iz)] -= w;
            g[(iz, it)] -= w;
        }
        g
    };
    let lap_row = |z: usize| -> DVector<f64> {
        let mut l = DVector::zeros(k);
        let iz = idx(z);
        for nb in space.neighbors(z) {
            let w = nb.conductance / m[z];
            l[idx(nb.vertex)] += w;
            l[iz] -= w;
        }
        l
    };

    let a = gamma_form(x);
    let ix = idx(x);
    let lx = lap_row(x);
    let mut lap_of_gamma = DMatrix::<f64>::zeros(k, k);
    let mut cross = DMatrix::<f64>::zeros(k, k);
    for nb in space.neighbors(x) {
        let y = nb.vertex;
        let w = nb.conductance / m[x];
        lap_of_gamma += (gamma_form(y) - &a) * w;
        let mut dy = DVector::<f64>::zeros(k);
        dy[idx(y)] += 1.0;
        dy[ix] -= 1.0;
        let dl = lap_row(y) - &lx;
        cross += (dy * dl.transpose()) * (0.5 * w);
    }
    let b = lap_of_gamma * 0.5 - (&cross + cross.transpose()) * 0.5;
    (a, b)
}

fn vertex_curvature(space: &DiscreteMms, x: usize) -> VertexCurvature {
    if space.degree(x) == 0 {
        return VertexCurvature {
            vertex: x,
            k: f64::INFINITY,
            isolated: true,
            minimizer: Vec::new(),
        };
    }
    let local = space.hop_ball(x, 2);
    let (a, b) = local_forms(space, x, &local);
    let pos = |v: usize| local.binary_search(&v).unwrap();
    let s1: Vec<usize> = space.neighbors(x).iter().map(|nb| pos(nb.vertex)).collect();
    let ix = pos(x);
    let s2: Vec<usize> = (0..local.len()).filter(|&i| i != ix && !s1.contains(&i)).collect();

    let sub = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    };
    let b11 = sub(&b, &s1, &s1);
    let (b_eff, elim) = if s2.is_empty() {
        (b11, None)
    } else {
        let b12 = sub(&b, &s1, &s2);
        let b22 = sub(&b, &s2, &s2);
        let b22_inv = symmetric_pinv(&b22);
        // v₂ = -B₂₂⁻¹ B₂₁ v₁
        let elim = -(&b22_inv * b12.transpose());
        (b11 + &b12 * &elim, Some(elim))
    };
    let d: Vec<f64> = s1.iter().map(|&i| 1.0 / a[(i, i)].sqrt()).collect();
    let scaled = DMatrix::from_fn(s1.len(), s1.len(), |i, j| {
        0.5 * d[i] * d[j] * (b_eff[(i, j)] + b_eff[(j, i)])
    });
    let eig = SymmetricEigen::new(scaled);
    let (min_i, k) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let z = eig.eigenvectors.column(min_i);
    let v1 = DVector::from_fn(s1.len(), |i, _| d[i] * z[i]);
    let v2 = elim.map(|e| e * &v1);

    let mut minimizer: Vec<(usize, f64)> = Vec::with_capacity(local.len());
    minimizer.push((x, 0.0));
    for (j, &i) in s1.iter().enumerate() {
        minimizer.push((local[i], v1[j]));
    }
    if let Some(v2) = v2 {
        for (j, &i) in s2.iter().enumerate() {
            minimizer.push((local[i], v2[j]));
        }
    }
    minimizer.sort_by_key(|&(v, _)| v);
    // sign convention: largest |value| (first such vertex) is positive
    let (_, pivot) = minimizer
        .iter()
        .fold((0.0, 1.0), |acc, &(_, v)| if v.abs() > acc.0 { (v.abs(), v) } else { acc });
    if pivot < 0.0 {
        for e in &mut minimizer {
            e.1 = -e.1;
        }
    }
    VertexCurvature {
        vertex: x,
        k,
        isolated: false,
        minimizer,
    }
}

fn symmetric_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cutoff = scale * 1e-13 * m.nrows() as f64;
    let inv = eig.eigenvalues.map(|v| if v.abs() > cutoff { 1.0 / v } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}
