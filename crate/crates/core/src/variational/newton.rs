//! Damped Newton minimization of `(1/p) Σ (Γ(u,u)+ε)^{p/2} m + Σ f u m`
//! over the free vertices, with Armijo backtracking.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::calculus::{coefficient, gamma_raw, p_energy_raw, p_laplacian_raw};
use crate::space::DiscreteMms;
use crate::{Error, Result};

/// Smoothing used in step computations when the requested ε is smaller.
pub(crate) const SMOOTHING: f64 = 1e-14;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;
/// Relative size of `Γ` below which a vertex is a snapping candidate.
const SNAP_RATIO: f64 = 1e-4;
/// Vertices tried one at a time after a stalled step.
const SNAP_SINGLES: usize = 8;
/// A step that keeps more than this share of the residual has stalled.
const STALL: f64 = 0.5;

pub(crate) struct EnergyProblem<'a> {
    pub space: &'a DiscreteMms,
    pub f: &'a [f64],
    pub p: f64,
    pub eps: f64,
    /// Vertices whose values are optimized; the rest stay fixed.
    pub free: Vec<usize>,
    /// Optimize over zero-mean fields (requires every vertex free).
    pub zero_mean: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimized {
    pub u: Vec<f64>,
    pub objective: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub kkt: f64,
}

impl EnergyProblem<'_> {
    pub fn objective(&self, u: &[f64], eps: f64) -> f64 {
        let linear: f64 = u.iter().zip(self.f).zip(self.space.measure()).map(|((u, f), m)| u * f * m).sum();
        p_energy_raw(self.space, u, self.p, eps) + linear
    }

    /// `‖Δ_{p,ε}u - f‖_{L²(m)}` over the free vertices.
    pub fn kkt(&self, u: &[f64], eps: f64) -> f64 {
        let lap = p_laplacian_raw(self.space, u, self.p, eps);
        let m = self.space.measure();
        self.free
            .iter()
            .map(|&x| (lap[x] - self.f[x]).powi(2) * m[x])
            .sum::<f64>()
            .sqrt()
    }

    fn gradient(&self, u: &[f64], eps: f64) -> DVector<f64> {
        let lap = p_laplacian_raw(self.space, u, self.p, eps);
        let m = self.space.measure();
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&x| m[x] * (self.f[x] - lap[x])))
    }

    fn hessian(&self, u: &[f64], eps: f64, pos: &[usize]) -> DMatrix<f64> {
        let space = self.space;
        let k = self.free.len();
        let mut h = DMatrix::<f64>::zeros(k, k);
        let q = gamma_raw(space, u, u);
        let m = space.measure();
        let mut add = |i: usize, j: usize, v: f64| {
            if pos[i] != usize::MAX && pos[j] != usize::MAX {
                h[(pos[i], pos[j])] += v;
            }
        };
        for x in 0..space.len() {
            // where the gradient vanishes the curvature is taken at SMOOTHING
            let base = if q[x] + eps > 0.0 { q[x] + eps } else { SMOOTHING };
            let a = coefficient(base, self.p, 0.0);
            let b = if self.p == 2.0 {
                0.0
            } else {
                (self.p - 2.0) * base.powf(0.5 * (self.p - 4.0))
            };
            let c = 1.0 / (2.0 * m[x]);
            let mut grad_q: Vec<(usize, f64)> = Vec::with_capacity(space.degree(x) + 1);
            let mut centre = 0.0;
            for nb in space.neighbors(x) {
                let y = nb.vertex;
                let s = 0.5 * a * nb.conductance;
                add(y, y, s);
                add(x, x, s);
                add(x, y, -s);
                add(y, x, -s);
                let d = c * nb.conductance * (u[y] - u[x]);
                grad_q.push((y, d));
                centre -= d;
            }
            if b != 0.0 {
                grad_q.push((x, centre));
                for &(i, vi) in &grad_q {
                    for &(j, vj) in &grad_q {
                        add(i, j, m[x] * b * vi * vj);
                    }
                }
            }
        }
        if self.zero_mean {
            let diag_max = (0..k).map(|i| h[(i, i)]).fold(0.0f64, f64::max).max(1.0);
            let mm: f64 = m.iter().map(|v| v * v).sum();
            let gamma = diag_max / mm;
            for i in 0..k {
                for j in 0..k {
                    h[(i, j)] += gamma * m[self.free[i]] * m[self.free[j]];
                }
            }
        }
        h
    }

    /// Newton direction, with Levenberg shifts and a gradient fallback.
    fn direction(&self, h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
        let k = g.len();
        let m = self.space.measure();
        let scale = (0..k).map(|i| h[(i, i)].abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        for attempt in 0..14 {
            let mut shifted = h.clone();
            if shift > 0.0 {
                for i in 0..k {
                    shifted[(i, i)] += shift * m[self.free[i]];
                }
            }
            if let Some(chol) = Cholesky::new(shifted) {
                let d = chol.solve(&(-g));
                if d.iter().all(|v| v.is_finite()) {
                    return d;
                }
            }
            shift = scale * 1e-12 * 10f64.powi(attempt);
        }
        DVector::from_iterator(k, (0..k).map(|i| -g[i] / m[self.free[i]]))
    }

    /// Near a vertex with `Γ(u,u) → 0` the residual behaves like
    /// `Γ^{(p-1)/2}`: for `p < 2` Newton overshoots there by `1/(p-1)` and
    /// the last gap does not close, for `p > 2` the residual is met while
    /// `u` is still visibly off. Snapping moves a vertex to its weighted
    /// neighbor average, which zeroes its `Γ` exactly. Every vertex with
    /// negligible `Γ` is snapped at once; when `stalled`, the vertices with
    /// the smallest `Γ` are also tried one at a time. A move is kept when it
    /// lowers the residual without raising the energy.
    fn snap(&self, u: &[f64], value: f64, noise: f64, stalled: bool) -> Option<(Vec<f64>, f64)> {
        let q = gamma_raw(self.space, u, u);
        let top = q.iter().copied().fold(0.0f64, f64::max);
        let mut candidates: Vec<usize> = self.free.iter().copied().filter(|&x| q[x] > 0.0).collect();
        candidates.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)));
        let small: Vec<usize> = candidates.iter().copied().filter(|&x| q[x] <= SNAP_RATIO * top).collect();
        let mut groups = vec![small];
        if stalled {
            groups.extend(candidates.iter().take(SNAP_SINGLES).map(|&x| vec![x]));
        }
        let current = self.kkt(u, self.eps);
        let mut best: Option<(Vec<f64>, f64, f64)> = None;
        for group in groups.into_iter().filter(|g| !g.is_empty()) {
            let trial = self.snapped(u, &group);
            let v = self.objective(&trial, self.eps);
            let r = self.kkt(&trial, self.eps);
            if v <= value + noise && r < current && best.as_ref().is_none_or(|b| r < b.2) {
                best = Some((trial, v, r));
            }
        }
        best.map(|(t, v, _)| (t, v))
    }

    fn snapped(&self, u: &[f64], vertices: &[usize]) -> Vec<f64> {
        let mut trial = u.to_vec();
        for &x in vertices {
            trial[x] = match self.space.neighbors(x) {
                // exact copy: the weighted average can round away from it
                [only] => u[only.vertex],
                nb => {
                    let w: f64 = nb.iter().map(|e| e.conductance).sum();
                    nb.iter().map(|e| e.conductance * u[e.vertex]).sum::<f64>() / w
                }
            };
        }
        if self.zero_mean {
            let m = self.space.measure();
            let mean = trial.iter().zip(m).map(|(v, m)| v * m).sum::<f64>() / self.space.total_measure();
            trial.iter_mut().for_each(|v| *v -= mean);
        }
        trial
    }

    pub fn minimize(&self, mut u: Vec<f64>, tolerance: f64, max_iterations: usize) -> Result<Minimized> {
        let k = self.free.len();
        let m = self.space.measure();
        let total = self.space.total_measure();
        let mut pos = vec![usize::MAX; self.space.len()];
        for (i, &x) in self.free.iter().enumerate() {
            pos[x] = i;
        }
        let mut value = self.objective(&u, self.eps);
        let mut trace = vec![self.objective(&u, self.eps)];
        let mut kkt = self.kkt(&u, self.eps);
        let mut iterations = 0;
        while kkt > tolerance && k > 0 {
            if iterations >= max_iterations {
                return Err(Error::NonConvergence {
                    solver: "Newton energy minimization",
                    iterations,
                    residual: kkt,
                });
            }
            iterations += 1;
            let g = self.gradient(&u, self.eps);
            let mut d = self.direction(self.hessian(&u, self.eps, &pos), &g);
            if self.zero_mean {
                let mean = (0..k).map(|i| d[i] * m[self.free[i]]).sum::<f64>() / total;
                d.iter_mut().for_each(|v| *v -= mean);
            }
            let mut slope = g.dot(&d);
            if slope >= 0.0 {
                // not a descent direction: use the scaled gradient
                d = DVector::from_iterator(k, (0..k).map(|i| -g[i] / m[self.free[i]]));
                slope = g.dot(&d);
            }
            let linear_abs: f64 = u.iter().zip(self.f).zip(m).map(|((u, f), m)| (u * f * m).abs()).sum();
            let noise = 1e-13 * (1.0 + value.abs() + linear_abs);
            let kkt_step = kkt;
            let step = |t: f64| {
                let mut trial = u.clone();
                for (i, &x) in self.free.iter().enumerate() {
                    trial[x] += t * d[i];
                }
                let v = self.objective(&trial, self.eps);
                (trial, v)
            };
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let (trial, v) = step(t);
                if v <= value + ARMIJO * t * slope {
                    let mut best = (trial, v);
                    if self.p < 2.0 {
                        // the Newton step overshoots where the energy is
                        // flatter than quadratic; keep halving while it pays
                        for _ in 0..MAX_BACKTRACKS {
                            t *= 0.5;
                            let shorter = step(t);
                            if shorter.1 >= best.1 {
                                break;
                            }
                            best = shorter;
                        }
                    }
                    accepted = Some(best);
                    break;
                }
                // below rounding level the residual decides
                if v <= value + noise && self.kkt(&trial, self.eps) < kkt_step {
                    accepted = Some((trial, v));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, v)) = accepted else {
                return Err(Error::NonConvergence {
                    solver: "Newton line search",
                    iterations,
                    residual: kkt,
                });
            };
            u = next;
            value = v;
            let previous = kkt;
            kkt = self.kkt(&u, self.eps);
            if self.p != 2.0 {
                if let Some((snapped, v)) = self.snap(&u, value, noise, kkt > STALL * previous) {
                    u = snapped;
                    value = v;
                    kkt = self.kkt(&u, self.eps);
                }
            }
            trace.push(self.objective(&u, self.eps));
        }
        Ok(Minimized {
            objective: self.objective(&u, self.eps),
            u,
            trace,
            iterations,
            kkt,
        })
    }
}
