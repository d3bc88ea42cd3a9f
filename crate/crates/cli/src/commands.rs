use std::fs;
use std::path::Path;

use plaplab_core::calculus::{curvature_lower_bound, p_laplacian};
use plaplab_core::fixedpoint::{epsilon_continuation, trace_table, FixedPointConfig};
use plaplab_core::space::{generate_space, parse_generator, parse_space, serialize_space};
use plaplab_core::variational::{
    parse_problem, solve, solve_capacity, solve_eigen, EigenMode, ProblemKind, ProblemSpec, SolverConfig,
};
use plaplab_core::{DiscreteMms, Execution, ScalarField};

use crate::args::{
    CapacityArgs, Cli, Command, CurvatureArgs, EigenArgs, FixedPointArgs, Method, Mode, SolveArgs, SolveKind,
    SpaceAction, SpaceSource, VariationalArgs,
};
use crate::output::{real, KeyValues, Output};
use crate::{sweep, verify, CliError, CliResult};

pub fn run(cli: &Cli, out: &mut Output, manifest: &mut KeyValues) -> CliResult<()> {
    match &cli.command {
        Command::Space { action } => space(action, out),
        Command::Solve(a) => solve_cmd(a, cli.seed, out, manifest),
        Command::Eigen(a) => eigen(a, out),
        Command::Capacity(a) => capacity(a, out),
        Command::Curvature(a) => curvature(a, out),
        Command::Verify { check } => verify::run(check, cli.seed, out),
        Command::Sweep(a) => sweep::run(a, cli.seed, out, manifest),
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn load_space(source: &SpaceSource) -> CliResult<DiscreteMms> {
    match (&source.space, &source.space_file) {
        (Some(g), None) => Ok(generate_space(parse_generator(g)?)?),
        (None, Some(path)) => Ok(parse_space(&read_text(path)?)?),
        _ => Err(CliError::Usage("exactly one of --space or --space-file is required".into())),
    }
}

pub fn load_field(path: &Path, space: &DiscreteMms) -> CliResult<ScalarField> {
    let f = ScalarField::parse(&read_text(path)?)?;
    f.check(space)?;
    Ok(f)
}

pub fn variational_config(a: &VariationalArgs) -> SolverConfig {
    SolverConfig {
        tolerance: a.tolerance,
        max_iterations: a.max_iterations,
        ..Default::default()
    }
}

pub fn fixedpoint_config(a: &FixedPointArgs) -> FixedPointConfig {
    let outer = a.outer_tolerance.unwrap_or(a.final_tolerance / 10.0);
    FixedPointConfig {
        epsilon0: a.eps0,
        rho: a.rho,
        epsilon_min: a.eps_min,
        final_tolerance: a.final_tolerance,
        outer_tolerance: outer,
        inner_tolerance: a.inner_tolerance.unwrap_or(outer / 10.0),
        max_outer: a.max_outer,
        max_inner: a.max_inner,
        theta_min: a.theta_min,
        limit_stage: !a.no_limit_stage,
        ..Default::default()
    }
}

fn space(action: &SpaceAction, out: &mut Output) -> CliResult<()> {
    match action {
        SpaceAction::Generate { source } => {
            if source.space.is_none() {
                return Err(CliError::Usage("space generate needs --space <generator>".into()));
            }
            out.write("space.txt", &serialize_space(&load_space(source)?))
        }
        SpaceAction::Convert { source } => out.write("space.txt", &serialize_space(&load_space(source)?)),
        SpaceAction::Inspect { source } => {
            let s = load_space(source)?;
            let mut kv = KeyValues::default();
            kv.push("vertices", s.len());
            kv.push("edges", s.edges().len());
            kv.real("total_measure", s.total_measure());
            kv.push("components", s.component_count());
            if s.is_connected() {
                kv.real("diameter", s.diameter());
            }
            let degrees: Vec<usize> = (0..s.len()).map(|x| s.degree(x)).collect();
            kv.push("min_degree", degrees.iter().min().copied().unwrap_or(0));
            kv.push("max_degree", degrees.iter().max().copied().unwrap_or(0));
            if let Some(l) = s.min_edge_length() {
                kv.real("min_edge_length", l);
            }
            let text = kv.render();
            print!("{text}");
            out.write("inspect.txt", &text)
        }
    }
}

fn problem_from_args(a: &SolveArgs, space: &DiscreteMms, seed: u64) -> CliResult<ProblemSpec> {
    if let Some(path) = &a.problem {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loader = |name: &str| -> plaplab_core::Result<ScalarField> {
            let text = fs::read_to_string(dir.join(name))?;
            ScalarField::parse(&text)
        };
        return Ok(parse_problem(&read_text(path)?, space.len(), loader)?);
    }
    let (Some(kind), Some(p)) = (a.kind, a.p) else {
        return Err(CliError::Usage("--kind and --p are required without --problem".into()));
    };
    let f = match (&a.rhs.f, a.rhs.f_random) {
        (Some(path), _) => load_field(path, space)?,
        (None, true) => ScalarField::random_zero_mean(space, seed),
        (None, false) => ScalarField::zeros(space.len()),
    };
    let kind = match kind {
        SolveKind::PoissonDirichlet => ProblemKind::PoissonDirichlet {
            boundary: a.boundary.clone(),
            boundary_values: a.boundary_values.clone(),
            f,
        },
        SolveKind::PoissonNeumann => ProblemKind::PoissonNeumann { f },
    };
    Ok(ProblemSpec::new(p, kind)?)
}

fn plap_residual(space: &DiscreteMms, u: &ScalarField, p: f64, f: &ScalarField) -> CliResult<f64> {
    Ok(p_laplacian(space, u, p, 0.0)?.sub(f).norm_l2(space))
}

fn solve_cmd(a: &SolveArgs, seed: u64, out: &mut Output, manifest: &mut KeyValues) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let spec = problem_from_args(a, &space, seed)?;
    let mut summary = KeyValues::default();
    summary.push("kind", spec.label());
    summary.real("p", spec.p);

    let neumann_f = match &spec.kind {
        ProblemKind::PoissonNeumann { f } => Some(f.clone()),
        ProblemKind::PoissonDirichlet { .. } => None,
        _ => return Err(CliError::Usage(format!("solve handles Poisson problems, got {}", spec.label()))),
    };
    if a.method != Method::Variational && neumann_f.is_none() {
        return Err(CliError::Usage("--method fixedpoint and both need kind poisson-neumann".into()));
    }

    let mut variational = None;
    if a.method != Method::Fixedpoint {
        let r = solve(&space, &spec, &variational_config(&a.variational))?;
        summary.real("variational.objective", r.objective_value);
        summary.real("variational.kkt_residual", r.kkt_residual);
        summary.push("variational.iterations", r.iterations);
        out.write("solution.txt", &r.solution.to_text())?;
        variational = Some(r.solution);
    }
    if a.method != Method::Variational {
        let f = neumann_f.expect("checked above");
        let cfg = fixedpoint_config(&a.fixedpoint);
        manifest.real("resolved.outer_tolerance", cfg.outer_tolerance);
        manifest.real("resolved.inner_tolerance", cfg.inner_tolerance);
        match epsilon_continuation(&space, &f, spec.p, &cfg) {
            Ok((u, trace)) => {
                out.write("solution_fixedpoint.txt", &u.to_text())?;
                out.write("trace.tsv", &trace_table(&trace))?;
                summary.real("fixedpoint.plap_residual", plap_residual(&space, &u, spec.p, &f)?);
                summary.push("fixedpoint.stages", trace.stages.len());
                summary.push("fixedpoint.stop_reason", format!("{:?}", trace.stop_reason));
                summary.push("fixedpoint.limit_stage", trace.limit_stage.is_some());
                if let Some(c) = trace.c_hat.last() {
                    summary.real("fixedpoint.c_hat", *c);
                }
                if let Some(v) = &variational {
                    summary.real("cross_check.sup_distance", u.sup_distance(v));
                }
            }
            Err(e) => {
                if let plaplab_core::Error::Fixedpoint(fp) = &e {
                    if let Some(t) = &fp.continuation {
                        out.write("trace.tsv", &trace_table(t))?;
                    }
                    if let Some(best) = &fp.best {
                        out.write("best_fixedpoint.txt", &best.to_text())?;
                    }
                }
                summary.push("fixedpoint.failure", e.to_string());
                out.write("summary.txt", &summary.render())?;
                return Err(e.into());
            }
        }
    }
    out.write("summary.txt", &summary.render())
}

pub fn eigen_mode(mode: Mode, boundary: &[usize]) -> CliResult<EigenMode> {
    match mode {
        Mode::Neumann if boundary.is_empty() => Ok(EigenMode::Neumann),
        Mode::Neumann => Err(CliError::Usage("--boundary is only valid with --mode dirichlet".into())),
        Mode::Dirichlet if boundary.is_empty() => Err(CliError::Usage("--mode dirichlet needs --boundary".into())),
        Mode::Dirichlet => Ok(EigenMode::Dirichlet {
            boundary: boundary.to_vec(),
        }),
    }
}

pub fn eigen_config(a: &EigenArgs) -> SolverConfig {
    SolverConfig {
        eigen_tolerance: a.eigen_tolerance,
        eigen_max_iterations: a.max_iterations,
        ..Default::default()
    }
}

fn eigen(a: &EigenArgs, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let mode = eigen_mode(a.mode, &a.boundary)?;
    let r = solve_eigen(&space, a.p, &mode, &eigen_config(a))?;
    out.write("eigenfield.txt", &r.solution.to_text())?;
    let mut kv = KeyValues::default();
    kv.real("p", a.p);
    kv.push("mode", format!("{:?}", a.mode).to_lowercase());
    kv.real("eigenvalue", r.eigenvalue.unwrap_or(f64::NAN));
    kv.real("euler_lagrange_residual", r.kkt_residual);
    kv.push("iterations", r.iterations);
    out.write("summary.txt", &kv.render())
}

fn capacity(a: &CapacityArgs, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let r = solve_capacity(&space, a.p, &a.k, &a.omega, &variational_config(&a.variational))?;
    out.write("potential.txt", &r.solution.to_text())?;
    let mut kv = KeyValues::default();
    kv.real("p", a.p);
    kv.real("capacity", r.capacity.unwrap_or(f64::NAN));
    kv.real("kkt_residual", r.kkt_residual);
    kv.push("iterations", r.iterations);
    out.write("summary.txt", &kv.render())
}

pub fn curvature_table(space: &DiscreteMms, exec: Execution) -> (String, f64) {
    let report = curvature_lower_bound(space, exec);
    let mut table = String::from("vertex\tK\tisolated\n");
    for v in &report.vertices {
        table.push_str(&format!("{}\t{}\t{}\n", v.vertex, real(v.k), v.isolated));
    }
    (table, report.global_k)
}

fn curvature(a: &CurvatureArgs, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
    let (table, global) = curvature_table(&space, exec);
    out.write("curvature.tsv", &table)?;
    let mut kv = KeyValues::default();
    kv.real("global_K", global);
    out.write("summary.txt", &kv.render())
}
