//! Harnack-type sup and inf estimates for certified sub- and supersolutions.
//!
//! The hypothesis `Δ_p u ≥ f + g|u|^{p-1}` (or `≤`) is certified in weak form
//! against the indicator of every vertex of the certification ball. These
//! indicators span the cone of non-negative test fields supported in the
//! ball, so the check is complete.

use super::EstimateReport;
use crate::calculus::{coefficient_field, gamma_raw, ScalarField};
use crate::space::{Ball, DiscreteMms};
use crate::{util, Error, Result};

const RIGIDITY_TOLERANCE: f64 = 1e-10;
/// Enlargement factor of the supersolution certification ball, times the dilation.
const SUPER_ENLARGEMENT: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusPolicy {
    /// Fail when the balls do not fit inside the space.
    Strict,
    /// Shrink all radii by a common factor until they fit; the factor is reported.
    Fit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackOptions {
    /// Radius of the unit ball `B₁(x)`.
    pub radius: f64,
    /// Dilation constant λ.
    pub dilation: f64,
    /// Exponent of the `L^m̂` norm in the supersolution estimate.
    pub m_hat: f64,
    /// Integrability exponent of `f`.
    pub q: f64,
    /// Reports pass when the measured constant is at most this.
    pub ceiling: f64,
    /// Slack in the weak-form certification, relative to the size of the terms.
    pub tolerance: f64,
    pub policy: RadiusPolicy,
    /// Vertices where the equation is assumed; balls must stay inside.
    /// `None` means the whole space.
    pub domain: Option<Vec<usize>>,
}

impl Default for HarnackOptions {
    fn default() -> Self {
        Self {
            radius: 1.0,
            dilation: 1.0,
            m_hat: 1.0,
            q: 2.0,
            ceiling: f64::INFINITY,
            tolerance: 1e-9,
            policy: RadiusPolicy::Fit,
            domain: None,
        }
    }
}

impl HarnackOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("radius", self.radius), ("dilation", self.dilation), ("tolerance", self.tolerance)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.m_hat >= 1.0 && self.m_hat.is_finite()) {
            return Err(Error::InvalidParameter(format!("m_hat = {} must be >= 1", self.m_hat)));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q = {} must be >= 1", self.q)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackReport {
    pub report: EstimateReport,
    /// Common factor applied to the configured radii (1 when they fit).
    pub radius_scale: f64,
    /// Radii of the half ball, the unit ball and the certification ball.
    pub radii: [f64; 3],
    /// Supersolutions touching zero with `f = 0`: whether `u` vanishes on the
    /// certification ball. `None` when the rigidity case does not apply.
    pub rigidity: Option<bool>,
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Sub,
    Super,
}

struct Setup {
    half: Ball,
    unit: Ball,
    cert: Ball,
    scale: f64,
}

fn setup(space: &DiscreteMms, x: usize, opts: &HarnackOptions, enlargement: f64) -> Result<Setup> {
    space.check_vertex(x)?;
    opts.validate()?;
    let dist = space.distances_from(x);
    let inside = match &opts.domain {
        None => vec![true; space.len()],
        Some(d) => {
            let mut mask = vec![false; space.len()];
            for &y in d {
                space.check_vertex(y)?;
                mask[y] = true;
            }
            mask
        }
    };
    if !inside[x] {
        return Err(Error::InvalidParameter(format!("center {x} lies outside the domain")));
    }
    // largest radius whose closed ball stays inside the domain and the space
    let exit = (0..space.len()).filter(|&y| !inside[y]).map(|y| dist[y]).fold(f64::INFINITY, f64::min);
    let ecc = dist.iter().copied().filter(|&d| d < exit && d.is_finite()).fold(0.0, f64::max);
    let needed = enlargement * opts.radius;
    let scale = if needed <= ecc {
        1.0
    } else {
        match opts.policy {
            RadiusPolicy::Strict => {
                return Err(Error::InvalidParameter(format!(
                    "domain too small: ball of radius {needed} around vertex {x} exceeds the largest fitting radius {ecc}"
                )))
            }
            RadiusPolicy::Fit if ecc > 0.0 => ecc / needed,
            RadiusPolicy::Fit => {
                return Err(Error::InvalidParameter(format!("no ball around vertex {x} fits inside the domain")))
            }
        }
    };
    let r = opts.radius * scale;
    Ok(Setup {
        half: space.ball(x, 0.5 * r)?,
        unit: space.ball(x, r)?,
        cert: space.ball(x, enlargement * r)?,
        scale,
    })
}

/// Checks `Δ_p u - f - g|u|^{p-1}` has the required sign at every vertex of
/// `ball`, using `⟨Δ_p u, 1_y⟩ = -Σ a Γ(u, 1_y) m`.
fn certify(
    space: &DiscreteMms,
    u: &[f64],
    p: f64,
    f: &[f64],
    g: &[f64],
    ball: &Ball,
    side: Side,
    tolerance: f64,
) -> Result<()> {
    let n = space.len();
    let m = space.measure();
    let q = gamma_raw(space, u, u);
    let a = coefficient_field(&q, p, 0.0);
    let mut indicator = vec![0.0; n];
    for &y in &ball.members {
        indicator[y] = 1.0;
        let gq = gamma_raw(space, u, &indicator);
        let pairing: f64 = -(0..n).map(|z| a[z] * gq[z] * m[z]).sum::<f64>();
        indicator[y] = 0.0;
        let source = (f[y] + g[y] * u[y].abs().powf(p - 1.0)) * m[y];
        let slack = tolerance * (1.0 + pairing.abs() + source.abs());
        let defect = match side {
            Side::Sub => source - pairing,
            Side::Super => pairing - source,
        };
        if defect > slack {
            let relation = if side == Side::Sub { ">=" } else { "<=" };
            return Err(Error::Hypothesis(format!(
                "Δ_p u {relation} f + g|u|^(p-1) fails against the indicator of vertex {y} (defect {defect:e})"
            )));
        }
    }
    Ok(())
}

fn averaged_norm(values: impl Iterator<Item = (f64, f64)>, exponent: f64, mass: f64) -> f64 {
    (values.map(|(v, m)| v.abs().powf(exponent) * m).sum::<f64>() / mass).powf(1.0 / exponent)
}

struct Inputs<'a> {
    u: &'a [f64],
    f: &'a [f64],
    g: &'a [f64],
}

fn check_inputs<'a>(
    space: &DiscreteMms,
    u: &'a ScalarField,
    p: f64,
    f: &'a ScalarField,
    g: &'a ScalarField,
) -> Result<Inputs<'a>> {
    u.check(space)?;
    f.check(space)?;
    g.check(space)?;
    util::check_exponent(p)?;
    Ok(Inputs {
        u: u.values(),
        f: f.values(),
        g: g.values(),
    })
}

fn context(kind: &str, space: &DiscreteMms, x: usize, p: f64, opts: &HarnackOptions, s: &Setup) -> String {
    format!(
        "{kind} n={} edges={} x={x} p={p} q={} m_hat={} dilation={} radii={},{},{} radius_scale={}",
        space.len(),
        space.edges().len(),
        opts.q,
        opts.m_hat,
        opts.dilation,
        s.half.radius,
        s.unit.radius,
        s.cert.radius,
        s.scale
    )
}

/// Sup estimate for a certified subsolution:
/// `max_{B_{1/2}} u` against `‖u⁺‖_{L¹(B₁)} + ‖f‖_{L^q(B₁)}^{1/(p-1)}`, with the
/// measure normalized to `m(B₁) = 1`.
pub fn harnack_subsolution(
    space: &DiscreteMms,
    u: &ScalarField,
    x: usize,
    p: f64,
    f: &ScalarField,
    g: &ScalarField,
    opts: &HarnackOptions,
) -> Result<HarnackReport> {
    let inp = check_inputs(space, u, p, f, g)?;
    let s = setup(space, x, opts, 1.0)?;
    certify(space, inp.u, p, inp.f, inp.g, &s.unit, Side::Sub, opts.tolerance)?;
    let m = space.measure();
    let mass = s.unit.measure(space);
    let lhs = s.half.members.iter().map(|&y| inp.u[y]).fold(f64::NEG_INFINITY, f64::max);
    let positive: f64 = s.unit.members.iter().map(|&y| inp.u[y].max(0.0) * m[y]).sum::<f64>() / mass;
    let f_norm = averaged_norm(s.unit.members.iter().map(|&y| (inp.f[y], m[y])), opts.q, mass);
    let rhs = positive + f_norm.powf(1.0 / (p - 1.0));
    let ctx = context("harnack-sub", space, x, p, opts, &s);
    Ok(HarnackReport {
        report: EstimateReport::new("harnack-sub", lhs, rhs, opts.ceiling, ctx),
        radius_scale: s.scale,
        radii: [s.half.radius, s.unit.radius, s.cert.radius],
        rigidity: None,
    })
}

/// Inf estimate for a certified non-negative supersolution:
/// `‖u‖_{L^m̂(B₁)}` against `min_{B_{1/2}} u + ‖f‖_{L^q(B₁)}^{1/(p-1)}`, with the
/// hypothesis certified on the enlarged ball `B_{35λ}`.
pub fn harnack_supersolution(
    space: &DiscreteMms,
    u: &ScalarField,
    x: usize,
    p: f64,
    f: &ScalarField,
    g: &ScalarField,
    opts: &HarnackOptions,
) -> Result<HarnackReport> {
    let inp = check_inputs(space, u, p, f, g)?;
    let s = setup(space, x, opts, SUPER_ENLARGEMENT * opts.dilation)?;
    if let Some(&y) = s.cert.members.iter().find(|&&y| inp.u[y] < 0.0) {
        return Err(Error::Hypothesis(format!("supersolution must be non-negative, u({y}) = {}", inp.u[y])));
    }
    certify(space, inp.u, p, inp.f, inp.g, &s.cert, Side::Super, opts.tolerance)?;
    let m = space.measure();
    let mass = s.unit.measure(space);
    let lhs = averaged_norm(s.unit.members.iter().map(|&y| (inp.u[y], m[y])), opts.m_hat, mass);
    let min_half = s.half.members.iter().map(|&y| inp.u[y]).fold(f64::INFINITY, f64::min);
    let f_norm = averaged_norm(s.unit.members.iter().map(|&y| (inp.f[y], m[y])), opts.q, mass);
    let rhs = min_half + f_norm.powf(1.0 / (p - 1.0));

    let touches = s.cert.members.iter().any(|&y| inp.u[y] <= RIGIDITY_TOLERANCE);
    let source_free = s.cert.members.iter().all(|&y| inp.f[y] == 0.0);
    let rigidity = (touches && source_free)
        .then(|| s.cert.members.iter().all(|&y| inp.u[y].abs() <= RIGIDITY_TOLERANCE));
    let ctx = context("harnack-super", space, x, p, opts, &s);
    let mut report = EstimateReport::new("harnack-super", lhs, rhs, opts.ceiling, ctx);
    if rigidity == Some(false) {
        report.pass = false;
    }
    Ok(HarnackReport {
        report,
        radius_scale: s.scale,
        radii: [s.half.radius, s.unit.radius, s.cert.radius],
        rigidity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_space, SpaceKind};
    use crate::variational::{solve_poisson_dirichlet, SolverConfig};

    fn zeros(n: usize) -> ScalarField {
        ScalarField::zeros(n)
    }

    #[test]
    fn constants_give_one() {
        let s = generate_space(SpaceKind::Grid(4, 4)).unwrap();
        let u = ScalarField::constant(16, 3.5);
        let opts = HarnackOptions::default();
        let sub = harnack_subsolution(&s, &u, 5, 2.5, &zeros(16), &zeros(16), &opts).unwrap();
        assert!((sub.report.empirical_constant - 1.0).abs() < 1e-15);
        let sup = harnack_supersolution(&s, &u, 5, 2.5, &zeros(16), &zeros(16), &opts).unwrap();
        assert!((sup.report.empirical_constant - 1.0).abs() < 1e-15);
        assert!(sup.radius_scale < 1.0);
        assert_eq!(sup.rigidity, None);
    }

    #[test]
    fn wrong_sign_is_rejected() {
        let s = generate_space(SpaceKind::Path(5)).unwrap();
        // Δ_p u(2) < 0 at a strict local maximum
        let u = ScalarField::new(vec![0.0, 1.0, 3.0, 1.0, 0.0]);
        let err = harnack_subsolution(&s, &u, 2, 2.0, &zeros(5), &zeros(5), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(ref m) if m.contains("vertex 2")), "{err}");
    }

    #[test]
    fn p_harmonic_on_path_ball() {
        let s = generate_space(SpaceKind::Path(9)).unwrap();
        let sol = solve_poisson_dirichlet(&s, 2.5, &[0, 8], &[1.0, 3.0], &zeros(9), &SolverConfig::default()).unwrap();
        let opts = HarnackOptions {
            radius: 2.0,
            domain: Some((1..8).collect()),
            ..Default::default()
        };
        let sub = harnack_subsolution(&s, &sol.solution, 4, 2.5, &zeros(9), &zeros(9), &opts).unwrap();
        assert!(sub.report.empirical_constant.is_finite() && sub.report.pass);
        let sup = harnack_supersolution(&s, &sol.solution, 4, 2.5, &zeros(9), &zeros(9), &opts).unwrap();
        assert!(sup.report.empirical_constant.is_finite());
    }

    #[test]
    fn scale_invariance() {
        let s = generate_space(SpaceKind::Cycle(8)).unwrap();
        let f = ScalarField::new(vec![0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0]);
        let v = crate::variational::solve_poisson_neumann(&s, 2.0, &f, &SolverConfig::default()).unwrap();
        let u = v.solution.map(|t| t + 5.0);
        // harmonic on B₁(1) = {0, 1, 2}
        let opts = HarnackOptions::default();
        let a = harnack_subsolution(&s, &u, 1, 2.0, &zeros(8), &zeros(8), &opts).unwrap();
        let b = harnack_subsolution(&s, &u.scale(7.0), 1, 2.0, &zeros(8), &zeros(8), &opts).unwrap();
        assert!((a.report.empirical_constant - b.report.empirical_constant).abs() < 1e-12);
    }

    #[test]
    fn rigidity_and_strict_radius() {
        let s = generate_space(SpaceKind::Path(5)).unwrap();
        let u = zeros(5);
        let sup = harnack_supersolution(&s, &u, 2, 1.5, &zeros(5), &zeros(5), &Default::default()).unwrap();
        assert_eq!(sup.rigidity, Some(true));
        let strict = HarnackOptions {
            policy: RadiusPolicy::Strict,
            ..Default::default()
        };
        assert!(harnack_supersolution(&s, &u, 2, 1.5, &zeros(5), &zeros(5), &strict).is_err());
        // a touching field that is not constant is not a supersolution
        let bump = ScalarField::new(vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(harnack_supersolution(&s, &bump, 2, 2.0, &zeros(5), &zeros(5), &Default::default()).is_err());
    }
}
