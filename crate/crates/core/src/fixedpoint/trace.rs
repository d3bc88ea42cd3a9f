//! Tab-separated export of a continuation run, one row per outer step.
//!
//! Columns:
//!
//! - `stage`: schedule index; the limit stage follows the last schedule entry
//! - `epsilon`: regularization of the stage (0 for the limit stage)
//! - `iteration`: outer step within the stage, from 1
//! - `route`: `frozen` or `kacanov`
//! - `residual`: `‖Δ_{p,ε}w - f‖_{L²(m)}` after the step
//! - `inner_max_ratio`: largest inner contraction ratio, `-` when none
//! - `theta`: damping of the step
//! - `surrogate`: second-order surrogate of the converged stage

use super::{ContinuationTrace, OuterTrace};
use crate::util::fmt17;

pub const TRACE_HEADER: &str = "stage\tepsilon\titeration\troute\tresidual\tinner_max_ratio\ttheta\tsurrogate";

fn push_stage(out: &mut String, index: usize, stage: &OuterTrace) {
    for (j, step) in stage.steps.iter().enumerate() {
        let ratio = step.inner_max_ratio.map_or_else(|| "-".to_string(), fmt17);
        out.push_str(&format!(
            "{index}\t{}\t{}\t{}\t{}\t{ratio}\t{}\t{}\n",
            fmt17(stage.epsilon),
            j + 1,
            step.route.label(),
            fmt17(step.residual),
            fmt17(step.theta),
            fmt17(stage.second_order_surrogate),
        ));
    }
}

/// The full table including the header line.
pub fn trace_table(trace: &ContinuationTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (k, stage) in trace.stages.iter().enumerate() {
        push_stage(&mut out, k, stage);
    }
    if let Some(stage) = &trace.limit_stage {
        push_stage(&mut out, trace.stages.len(), stage);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::ScalarField;
    use crate::fixedpoint::epsilon_continuation;
    use crate::space::{generate_space, SpaceKind};

    #[test]
    fn table_shape() {
        let s = generate_space(SpaceKind::Cycle(6)).unwrap();
        let f = ScalarField::random_zero_mean(&s, 9);
        let (_, trace) = epsilon_continuation(&s, &f, 2.5, &Default::default()).unwrap();
        let table = trace_table(&trace);
        let mut lines = table.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        let rows: Vec<_> = lines.collect();
        let steps: usize = trace.stages.iter().chain(&trace.limit_stage).map(|t| t.steps.len()).sum();
        assert_eq!(rows.len(), steps);
        assert!(rows.iter().all(|r| r.split('\t').count() == 8));
    }
}
