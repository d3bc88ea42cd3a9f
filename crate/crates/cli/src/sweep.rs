//! Cartesian parameter sweeps. Jobs run concurrently (capped by
//! `PLAPLAB_THREADS`) and rows are written in job order, so the table does
//! not depend on scheduling.

use plaplab_core::calculus::p_laplacian;
use plaplab_core::fixedpoint::{epsilon_continuation, FixedPointConfig};
use plaplab_core::space::{generate_space, parse_generator};
use plaplab_core::variational::{solve_poisson_neumann, SolverConfig};
use plaplab_core::ScalarField;

use crate::args::{Method, SweepArgs};
use crate::output::{real, KeyValues, Output};
use crate::{CliError, CliResult};

pub const SWEEP_HEADER: &str =
    "space\tp\teps0\tstatus\tvariational_residual\tfixedpoint_residual\tsup_distance\tstages\tmessage";

struct Job {
    space: String,
    p: f64,
    eps0: f64,
}

fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("PLAPLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("PLAPLAB_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

fn run_job(job: &Job, method: Method, seed: u64) -> String {
    let dash = || "-".to_string();
    let row = |status: &str, v: String, fp: String, d: String, stages: String, msg: &str| {
        format!(
            "{}\t{}\t{}\t{status}\t{v}\t{fp}\t{d}\t{stages}\t{msg}",
            job.space,
            real(job.p),
            real(job.eps0),
        )
    };
    let space = match parse_generator(&job.space).and_then(generate_space) {
        Ok(s) => s,
        Err(e) => return row("error", dash(), dash(), dash(), dash(), &e.to_string()),
    };
    let f = ScalarField::random_zero_mean(&space, seed);
    let residual = |u: &ScalarField| -> String {
        p_laplacian(&space, u, job.p, 0.0).map_or_else(|_| dash(), |l| real(l.sub(&f).norm_l2(&space)))
    };
    let mut variational = None;
    if method != Method::Fixedpoint {
        match solve_poisson_neumann(&space, job.p, &f, &SolverConfig::default()) {
            Ok(r) => variational = Some(r.solution),
            Err(e) => return row("failed", dash(), dash(), dash(), dash(), &e.to_string()),
        }
    }
    let v_res = variational.as_ref().map_or_else(dash, &residual);
    if method == Method::Variational {
        return row("ok", v_res, dash(), dash(), dash(), "");
    }
    let cfg = FixedPointConfig {
        epsilon0: job.eps0,
        ..Default::default()
    };
    match epsilon_continuation(&space, &f, job.p, &cfg) {
        Ok((u, trace)) => {
            let d = variational.as_ref().map_or_else(dash, |v| real(u.sup_distance(v)));
            row("ok", v_res, residual(&u), d, trace.stages.len().to_string(), "")
        }
        Err(e) => row("failed", v_res, dash(), dash(), dash(), &e.to_string()),
    }
}

pub fn run(a: &SweepArgs, seed: u64, out: &mut Output, manifest: &mut KeyValues) -> CliResult<()> {
    let mut jobs = Vec::new();
    for space in &a.spaces {
        for &p in &a.p {
            for &eps0 in &a.eps0 {
                jobs.push(Job {
                    space: space.clone(),
                    p,
                    eps0,
                });
            }
        }
    }
    manifest.push("jobs", jobs.len());
    let cap = thread_cap()?;
    let rows = execute(&jobs, cap, |job| run_job(job, a.method, seed))?;
    let failed = rows.iter().filter(|r| r.split('\t').nth(3) != Some("ok")).count();
    let mut table = String::from(SWEEP_HEADER);
    table.push('\n');
    for r in rows {
        table.push_str(&r);
        table.push('\n');
    }
    out.write("sweep.tsv", &table)?;
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} of {} sweep jobs failed", jobs.len())));
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn execute<F>(jobs: &[Job], cap: Option<usize>, f: F) -> CliResult<Vec<String>>
where
    F: Fn(&Job) -> String + Sync + Send,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cap {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Failure(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn execute<F>(jobs: &[Job], _cap: Option<usize>, f: F) -> CliResult<Vec<String>>
where
    F: Fn(&Job) -> String,
{
    Ok(jobs.iter().map(f).collect())
}
