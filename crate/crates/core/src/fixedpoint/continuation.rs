use super::outer::{outer_core, residual_norm, second_order_surrogate, OuterTrace};
use super::{check_range, Failure, FixedPointConfig, FixedPointError};
use crate::calculus::{gamma_raw, ScalarField};
use crate::linsolve::check_zero_mean;
use crate::space::DiscreteMms;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every ε of the schedule above `epsilon_min` was solved.
    ScheduleExhausted,
    /// The W^{1,p} increment fell below `increment_tolerance`.
    IncrementStalled,
    /// `p = 2`: a single linear solve.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationTrace {
    /// The ε values actually solved, strictly decreasing.
    pub epsilon_schedule: Vec<f64>,
    pub stages: Vec<OuterTrace>,
    /// `‖u_{ε_k} - u_{ε_{k+1}}‖_{W^{1,p}}` between consecutive stages.
    pub w1p_increments: Vec<f64>,
    /// `Σ Γ(s_ε,s_ε) m` per stage.
    pub surrogates: Vec<f64>,
    /// `Σ Γ(s_ε,s_ε) m / (‖f‖² + ‖Γ(u_ε,u_ε)^{(p-1)/2}‖_{L¹})` per stage.
    pub c_hat: Vec<f64>,
    /// Outer solve at `ε = 0` warm-started from the last stage.
    pub limit_stage: Option<OuterTrace>,
    /// `‖Δ_p u - f‖_{L²(m)}` on the returned field.
    pub final_plap_residual: f64,
    pub stop_reason: StopReason,
}

/// `(Σ |u|^p m + Σ Γ(u,u)^{p/2} m)^{1/p}`.
pub fn w1p_norm(space: &DiscreteMms, u: &ScalarField, p: f64) -> Result<f64> {
    u.check(space)?;
    crate::util::check_exponent(p)?;
    Ok(w1p_raw(space, u.values(), p))
}

fn w1p_raw(space: &DiscreteMms, u: &[f64], p: f64) -> f64 {
    let q = gamma_raw(space, u, u);
    space
        .measure()
        .iter()
        .enumerate()
        .map(|(x, m)| (u[x].abs().powf(p) + q[x].powf(0.5 * p)) * m)
        .sum::<f64>()
        .powf(1.0 / p)
}

fn c_hat(space: &DiscreteMms, u: &[f64], f: &[f64], p: f64, surrogate: f64) -> f64 {
    let m = space.measure();
    let f2: f64 = f.iter().zip(m).map(|(v, m)| v * v * m).sum();
    let l1: f64 = gamma_raw(space, u, u)
        .iter()
        .zip(m)
        .map(|(q, m)| q.powf(0.5 * (p - 1.0)) * m)
        .sum();
    let rhs = f2 + l1;
    if rhs > 0.0 {
        surrogate / rhs
    } else {
        f64::NAN
    }
}

/// Warm-started outer solves along `ε_k = ε₀ ρ^k ≥ ε_min`, an optional
/// limit stage at `ε = 0`, then certification of `‖Δ_p u - f‖`.
pub fn epsilon_continuation(
    space: &DiscreteMms,
    f: &ScalarField,
    p: f64,
    config: &FixedPointConfig,
) -> Result<(ScalarField, ContinuationTrace)> {
    f.check(space)?;
    check_range(p)?;
    config.validate()?;
    space.require_connected()?;
    check_zero_mean(space, f)?;
    let f = f.project_zero_mean(space);
    let fv = f.values();

    let mut trace = ContinuationTrace {
        epsilon_schedule: Vec::new(),
        stages: Vec::new(),
        w1p_increments: Vec::new(),
        surrogates: Vec::new(),
        c_hat: Vec::new(),
        limit_stage: None,
        final_plap_residual: 0.0,
        stop_reason: StopReason::ScheduleExhausted,
    };

    if p == 2.0 {
        let (u, mut stage) = outer_core(space, fv, p, config.epsilon0, vec![0.0; space.len()], config)?;
        let s = second_order_surrogate(space, &u, p, 0.0);
        stage.second_order_surrogate = s;
        trace.epsilon_schedule.push(config.epsilon0);
        trace.stages.push(stage);
        trace.surrogates.push(s);
        trace.c_hat.push(c_hat(space, &u, fv, p, s));
        trace.final_plap_residual = residual_norm(space, &u, fv, p, 0.0);
        trace.stop_reason = StopReason::Linear;
        return certify(u, trace, config);
    }

    let mut u = vec![0.0; space.len()];
    let mut eps = config.epsilon0;
    let mut k = 0;
    while eps >= config.epsilon_min {
        let (next, stage) = match outer_core(space, fv, p, eps, u.clone(), config) {
            Ok(r) => r,
            Err(e) => return Err(attach(e, &trace)),
        };
        trace.epsilon_schedule.push(eps);
        trace.surrogates.push(stage.second_order_surrogate);
        trace.c_hat.push(c_hat(space, &next, fv, p, stage.second_order_surrogate));
        trace.stages.push(stage);
        let stalled = if k > 0 {
            let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
            let inc = w1p_raw(space, &diff, p);
            trace.w1p_increments.push(inc);
            inc < config.increment_tolerance
        } else {
            false
        };
        u = next;
        if stalled {
            trace.stop_reason = StopReason::IncrementStalled;
            break;
        }
        k += 1;
        eps = config.epsilon0 * config.rho.powi(k);
    }

    let gradient_floor = gamma_raw(space, &u, &u).into_iter().fold(f64::INFINITY, f64::min);
    if config.limit_stage && gradient_floor > 0.0 {
        match outer_core(space, fv, p, 0.0, u.clone(), config) {
            Ok((limit, stage)) => {
                u = limit;
                trace.limit_stage = Some(stage);
            }
            Err(e) => return Err(attach(e, &trace)),
        }
    }
    trace.final_plap_residual = residual_norm(space, &u, fv, p, 0.0);
    certify(u, trace, config)
}

fn certify(u: Vec<f64>, trace: ContinuationTrace, config: &FixedPointConfig) -> Result<(ScalarField, ContinuationTrace)> {
    let residual = trace.final_plap_residual;
    if !(residual < config.final_tolerance) {
        let mut err = FixedPointError::new(Failure::Certification { residual });
        err.best = Some(u.into());
        err.continuation = Some(trace);
        return Err(err.into());
    }
    Ok((u.into(), trace))
}

fn attach(e: Error, trace: &ContinuationTrace) -> Error {
    match e {
        Error::Fixedpoint(mut inner) => {
            inner.continuation = Some(trace.clone());
            Error::Fixedpoint(inner)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::solve_zero_mean_poisson;
    use crate::space::{generate_space, SpaceKind};

    #[test]
    fn p2_is_one_linear_solve() {
        let s = generate_space(SpaceKind::Cycle(6)).unwrap();
        let f = ScalarField::random_zero_mean(&s, 1);
        let (u, trace) = epsilon_continuation(&s, &f, 2.0, &Default::default()).unwrap();
        let lin = solve_zero_mean_poisson(&s, &f, &Default::default()).unwrap();
        assert!(u.sup_distance(&lin) < 1e-12);
        assert_eq!(trace.stop_reason, StopReason::Linear);
        assert_eq!(trace.stages.len(), 1);
        let q = crate::calculus::gamma_sq(&s, &u).unwrap();
        let s0 = q.map(f64::sqrt);
        let direct: f64 = crate::calculus::gamma(&s, &s0, &s0).unwrap().integral(&s);
        assert!((trace.surrogates[0] - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn schedule_is_decreasing_and_certified() {
        let s = generate_space(SpaceKind::Path(5)).unwrap();
        let f = ScalarField::random_zero_mean(&s, 4);
        for p in [1.5, 2.5] {
            let (u, trace) = epsilon_continuation(&s, &f, p, &Default::default()).unwrap();
            assert!(trace.epsilon_schedule.windows(2).all(|w| w[1] < w[0]));
            assert!(trace.final_plap_residual < 1e-9);
            let r = crate::calculus::p_laplacian(&s, &u, p, 0.0).unwrap().sub(&f);
            assert_eq!(r.norm_l2(&s), trace.final_plap_residual);
        }
    }

    #[test]
    fn w1p_of_constant() {
        let s = generate_space(SpaceKind::Path(3)).unwrap();
        let n = w1p_norm(&s, &ScalarField::constant(3, 2.0), 2.0).unwrap();
        assert!((n - (4.0 * s.total_measure()).sqrt()).abs() < 1e-12);
    }
}
