use super::EstimateReport;
use crate::calculus::{curvature_lower_bound, gamma_raw, p_laplacian_raw, weak_bochner_check, ScalarField};
use crate::linsolve::{dense_dirichlet_spectrum, dense_spectrum, interior_mask, DEFAULT_DENSE_CAP};
use crate::parallel::Execution;
use crate::space::DiscreteMms;
use crate::variational::{solve_eigen, EigenMode, SolverConfig};
use crate::{util, Error, Result};

/// One refinement level for [`holder_exponent_fit`].
#[derive(Debug, Clone, Copy)]
pub struct HolderLevel<'a> {
    pub space: &'a DiscreteMms,
    pub u: &'a ScalarField,
    /// Vertices away from the boundary.
    pub region: &'a [usize],
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    /// Least-squares slope of `log|u(x)-u(y)|` on `log d(x,y)` at the finest level.
    pub alpha: f64,
    /// Smallest `C` with `|u(x)-u(y)| ≤ C d(x,y)^α` over the fitted pairs.
    pub constant: f64,
    /// `exp` of the least-squares intercept.
    pub fit_constant: f64,
    /// Root-mean-square residual of the fit.
    pub fit_residual: f64,
    pub pairs: usize,
    /// Slope per level, `None` where a level has too few usable pairs.
    pub level_alphas: Vec<Option<f64>>,
}

const MIN_HOLDER_PAIRS: usize = 10;

fn holder_pairs(level: &HolderLevel<'_>) -> Result<Vec<(f64, f64)>> {
    level.u.check(level.space)?;
    for &x in level.region {
        level.space.check_vertex(x)?;
    }
    let u = level.u.values();
    let floor = 1e-14 * u.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    for (i, &x) in level.region.iter().enumerate() {
        let dist = level.space.distances_from(x);
        for &y in &level.region[i + 1..] {
            let du = (u[x] - u[y]).abs();
            if du > floor && dist[y].is_finite() && dist[y] > 0.0 {
                out.push((dist[y].ln(), du.ln()));
            }
        }
    }
    Ok(out)
}

fn fit_line(pairs: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pairs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some((slope, intercept, rms))
}

/// Fits `|u(x)-u(y)| ≤ C d(x,y)^α` over vertex pairs of the region at the
/// finest (last) level. Pairs with equal values are unusable.
pub fn holder_exponent_fit(levels: &[HolderLevel<'_>]) -> Result<HolderFit> {
    let finest = levels
        .last()
        .ok_or_else(|| Error::InvalidParameter("no refinement levels".into()))?;
    let mut level_alphas = Vec::with_capacity(levels.len());
    for level in levels {
        let pairs = holder_pairs(level)?;
        level_alphas.push(if pairs.len() >= MIN_HOLDER_PAIRS { fit_line(&pairs).map(|f| f.0) } else { None });
    }
    let pairs = holder_pairs(finest)?;
    if pairs.len() < MIN_HOLDER_PAIRS {
        return Err(Error::Degenerate(format!(
            "only {} usable pairs with distinct values, need {MIN_HOLDER_PAIRS}",
            pairs.len()
        )));
    }
    let (alpha, intercept, fit_residual) =
        fit_line(&pairs).ok_or_else(|| Error::Degenerate("all pairs at the same distance".into()))?;
    let log_c = pairs.iter().map(|p| p.1 - alpha * p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(HolderFit {
        alpha,
        constant: log_c.exp(),
        fit_constant: intercept.exp(),
        fit_residual,
        pairs: pairs.len(),
        level_alphas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    /// `max |u(y)-u(x)| / ℓ_xy` over edges.
    pub edge_constant: f64,
    /// `max sqrt(Γ(u,u))` over vertices.
    pub gradient_max: f64,
}

pub fn lipschitz_constant(space: &DiscreteMms, u: &ScalarField) -> Result<LipschitzReport> {
    u.check(space)?;
    let v = u.values();
    let edge_constant = space
        .edges()
        .iter()
        .map(|e| (v[e.b] - v[e.a]).abs() / e.length)
        .fold(0.0, f64::max);
    let gradient_max = gamma_raw(space, v, v).into_iter().fold(0.0, f64::max).sqrt();
    Ok(LipschitzReport {
        edge_constant,
        gradient_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareReport {
    /// `1/λ₁`, the sharp constant in `‖u‖_p^p ≤ C ‖Du‖_p^p` on admissible `u`.
    pub constant: f64,
    pub eigenvalue: f64,
    /// For `p = 2`, the matching eigenvalue of the dense spectrum.
    pub dense_eigenvalue: Option<f64>,
    pub eigenfield: ScalarField,
}

/// Relative gap tolerated between the iterative and the dense eigenvalue.
const DENSE_AGREEMENT: f64 = 1e-8;

pub fn poincare_constant(space: &DiscreteMms, p: f64, mode: &EigenMode, config: &SolverConfig) -> Result<PoincareReport> {
    let r = solve_eigen(space, p, mode, config)?;
    let eigenvalue = r.eigenvalue.expect("eigen solve reports an eigenvalue");
    if !(eigenvalue > 0.0) {
        return Err(Error::Degenerate(format!("first eigenvalue {eigenvalue} is not positive")));
    }
    let dense_eigenvalue = if p == 2.0 && space.len() <= DEFAULT_DENSE_CAP {
        let lambda = match mode {
            EigenMode::Neumann => dense_spectrum(space, DEFAULT_DENSE_CAP)?.eigenvalues[1],
            EigenMode::Dirichlet { boundary } => dense_dirichlet_spectrum(space, boundary, DEFAULT_DENSE_CAP)?.eigenvalues[0],
        };
        if (lambda - eigenvalue).abs() > DENSE_AGREEMENT * lambda.abs().max(1.0) {
            return Err(Error::NonConvergence {
                solver: "p-eigen inverse iteration (dense cross-check)",
                iterations: r.iterations,
                residual: (lambda - eigenvalue).abs(),
            });
        }
        Some(lambda)
    } else {
        None
    };
    Ok(PoincareReport {
        constant: 1.0 / eigenvalue,
        eigenvalue,
        dense_eigenvalue,
        eigenfield: r.solution,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevOptions {
    pub dilation: f64,
    /// Number of seeded random probe fields.
    pub random_fields: usize,
    pub seed: u64,
    pub ceiling: f64,
}

impl Default for SobolevOptions {
    fn default() -> Self {
        Self {
            dilation: 1.0,
            random_fields: 16,
            seed: 42,
            ceiling: f64::INFINITY,
        }
    }
}

/// Largest ratio `(⨍_{B_r}|u|^{p*})^{p/p*} / ⨍_{B_{2λr}}(r^p Γ(u,u)^{p/2} + |u|^p)`
/// over a probe set of constants, dense eigenfields and seeded random fields,
/// with `p* = ps/(s-p)`.
pub fn sobolev_probe(
    space: &DiscreteMms,
    p: f64,
    s: f64,
    center: usize,
    radius: f64,
    opts: &SobolevOptions,
) -> Result<EstimateReport> {
    util::check_exponent(p)?;
    space.check_vertex(center)?;
    if !(s.is_finite() && p < s) {
        return Err(Error::InvalidParameter(format!("Sobolev probe needs p < s, got p = {p}, s = {s}")));
    }
    if !(radius > 0.0 && opts.dilation > 0.0) {
        return Err(Error::InvalidParameter("radius and dilation must be positive".into()));
    }
    let outer_radius = 2.0 * opts.dilation * radius;
    let ecc = space.eccentricity(center);
    if outer_radius > ecc {
        return Err(Error::InvalidParameter(format!(
            "enlarged ball of radius {outer_radius} around vertex {center} exceeds eccentricity {ecc}"
        )));
    }
    let inner = space.ball(center, radius)?;
    let outer = space.ball(center, outer_radius)?;
    let m = space.measure();
    let (mi, mo) = (inner.measure(space), outer.measure(space));
    let p_star = p * s / (s - p);

    let n = space.len();
    let mut probes = vec![ScalarField::constant(n, 1.0)];
    if n <= DEFAULT_DENSE_CAP {
        probes.extend(dense_spectrum(space, DEFAULT_DENSE_CAP)?.fields);
    }
    probes.extend((0..opts.random_fields as u64).map(|k| ScalarField::random(n, opts.seed.wrapping_add(k))));

    let mut best: Option<(f64, f64, f64)> = None;
    for u in &probes {
        let v = u.values();
        let q = gamma_raw(space, v, v);
        let num = (inner.members.iter().map(|&y| v[y].abs().powf(p_star) * m[y]).sum::<f64>() / mi).powf(p / p_star);
        let den = outer
            .members
            .iter()
            .map(|&y| (radius.powf(p) * q[y].powf(0.5 * p) + v[y].abs().powf(p)) * m[y])
            .sum::<f64>()
            / mo;
        if den > 0.0 && best.is_none_or(|b| num / den > b.0) {
            best = Some((num / den, num, den));
        }
    }
    let (_, lhs, rhs) = best.ok_or_else(|| Error::Degenerate("every probe vanishes on the ball".into()))?;
    let ctx = format!(
        "sobolev n={n} edges={} center={center} radius={radius} dilation={} p={p} s={s} probes={}",
        space.edges().len(),
        opts.dilation,
        probes.len()
    );
    Ok(EstimateReport::new("sobolev", lhs, rhs, opts.ceiling, ctx))
}

/// `Σ Γ(s,s) m` with `s = Γ(u,u)^{(p-1)/2}` against
/// `‖f‖²_{L²(m)} + ‖Γ(u,u)^{(p-1)/2}‖_{L¹(m)}` for a certified solution of
/// `Δ_p u = f`.
pub fn second_order_check(
    space: &DiscreteMms,
    u: &ScalarField,
    p: f64,
    f: &ScalarField,
    certification_tolerance: f64,
    ceiling: f64,
) -> Result<EstimateReport> {
    u.check(space)?;
    f.check(space)?;
    util::check_exponent(p)?;
    let (uv, fv) = (u.values(), f.values());
    let m = space.measure();
    let lap = p_laplacian_raw(space, uv, p, 0.0);
    let residual = lap
        .iter()
        .zip(fv)
        .zip(m)
        .map(|((a, b), w)| (a - b).powi(2) * w)
        .sum::<f64>()
        .sqrt();
    if !(residual <= certification_tolerance) {
        return Err(Error::Hypothesis(format!(
            "u is not certified: ‖Δ_p u - f‖ = {residual:e} exceeds {certification_tolerance:e}"
        )));
    }
    let q = gamma_raw(space, uv, uv);
    let s: Vec<f64> = q.iter().map(|v| v.powf(0.5 * (p - 1.0))).collect();
    let lhs: f64 = gamma_raw(space, &s, &s).iter().zip(m).map(|(g, w)| g * w).sum();
    let rhs = fv.iter().zip(m).map(|(v, w)| v * v * w).sum::<f64>() + s.iter().zip(m).map(|(v, w)| v * w).sum::<f64>();
    let ctx = format!(
        "second-order n={} edges={} p={p} surrogate=Gamma(u,u)^((p-1)/2)",
        space.len(),
        space.edges().len()
    );
    Ok(EstimateReport::new("second-order", lhs, rhs, ceiling, ctx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPrincipleReport {
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub interior_min: f64,
    pub interior_max: f64,
    /// Every value lies in `[boundary_min, boundary_max]` within the tolerance.
    pub within_bounds: bool,
    /// An interior vertex strictly above or below all of its neighbors.
    pub strict_extremum: Option<usize>,
}

/// Comparison with the boundary data of a Dirichlet solution with `f = 0`.
pub fn maximum_principle_check(
    space: &DiscreteMms,
    boundary: &[usize],
    boundary_values: &[f64],
    u: &ScalarField,
    tolerance: f64,
) -> Result<MaxPrincipleReport> {
    u.check(space)?;
    let mask = interior_mask(space, boundary, boundary_values)?;
    let v = u.values();
    let boundary_min = boundary_values.iter().copied().fold(f64::INFINITY, f64::min);
    let boundary_max = boundary_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let interior: Vec<usize> = (0..space.len()).filter(|&x| mask[x]).collect();
    let interior_min = interior.iter().map(|&x| v[x]).fold(f64::INFINITY, f64::min);
    let interior_max = interior.iter().map(|&x| v[x]).fold(f64::NEG_INFINITY, f64::max);
    let within_bounds = v.iter().all(|&t| t >= boundary_min - tolerance && t <= boundary_max + tolerance);
    let strict_extremum = interior.iter().copied().find(|&x| {
        let nb = space.neighbors(x);
        !nb.is_empty()
            && (nb.iter().all(|e| v[x] > v[e.vertex] + tolerance) || nb.iter().all(|e| v[x] < v[e.vertex] - tolerance))
    });
    Ok(MaxPrincipleReport {
        boundary_min,
        boundary_max,
        interior_min,
        interior_max,
        within_bounds,
        strict_extremum,
    })
}

/// Bochner check with constant `k`, or the pencil lower bound when `k` is
/// `None`. `lhs` is the smallest `Σ Γ₂(u) m / Σ Γ(u,u) m` over the probe
/// fields, `rhs` is `k`; `pass` means `Γ₂ ≥ kΓ` held pointwise on every probe.
pub fn bochner_report(
    space: &DiscreteMms,
    k: Option<f64>,
    random_fields: usize,
    seed: u64,
    exec: Execution,
) -> Result<EstimateReport> {
    let n = space.len();
    let curvature = curvature_lower_bound(space, exec);
    let k = match k {
        Some(k) => k,
        None if curvature.global_k.is_finite() => curvature.global_k,
        None => return Err(Error::Degenerate("no vertex has a neighbor; curvature is unbounded".into())),
    };
    let mut probes: Vec<ScalarField> = curvature
        .vertices
        .iter()
        .filter(|v| !v.isolated)
        .map(|v| v.minimizer_field(n))
        .collect();
    probes.extend((0..random_fields as u64).map(|j| ScalarField::random(n, seed.wrapping_add(j))));
    let m = space.measure();
    let mut pass = true;
    let mut lhs = f64::INFINITY;
    for u in &probes {
        pass &= weak_bochner_check(space, u, k, 1e-9)?.pass;
        let v = u.values();
        let g2: f64 = crate::calculus::gamma2_raw(space, v).iter().zip(m).map(|(a, b)| a * b).sum();
        let g: f64 = gamma_raw(space, v, v).iter().zip(m).map(|(a, b)| a * b).sum();
        if g > 0.0 {
            lhs = lhs.min(g2 / g);
        }
    }
    let ctx = format!(
        "bochner n={n} edges={} K={k} pointwise_global_K={} probes={}",
        space.edges().len(),
        curvature.global_k,
        probes.len()
    );
    let mut report = EstimateReport::new("bochner", lhs, k, f64::INFINITY, ctx);
    report.pass = pass;
    Ok(report)
}
