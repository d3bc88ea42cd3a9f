use plaplab_core::regularity::{
    bochner_report, harnack_subsolution, harnack_supersolution, holder_exponent_fit, lipschitz_constant,
    maximum_principle_check, poincare_constant, report_table, second_order_check, sobolev_probe, EstimateReport,
    HarnackOptions, HolderLevel, RadiusPolicy, SobolevOptions,
};
use plaplab_core::space::{doubling_estimates, DoublingOptions, EdgeSpec};
use plaplab_core::variational::{solve_poisson_dirichlet, solve_poisson_neumann, SolverConfig};
use plaplab_core::{DiscreteMms, Execution, ScalarField};

use crate::args::{
    BochnerArgs, DoublingArgs, HarnackArgs, HolderArgs, MaxPrincipleArgs, SecondOrderArgs, SobolevArgs, VerifyCheck,
};
use crate::commands::{curvature_table, eigen_config, eigen_mode, load_field, load_space};
use crate::output::{real, reals, KeyValues, Output};
use crate::{CliError, CliResult};

pub fn run(check: &VerifyCheck, seed: u64, out: &mut Output) -> CliResult<()> {
    match check {
        VerifyCheck::Harnack(a) => harnack(a, out),
        VerifyCheck::Holder(a) => holder(a, out),
        VerifyCheck::Bochner(a) => bochner(a, seed, out),
        VerifyCheck::SecondOrder(a) => second_order(a, seed, out),
        VerifyCheck::MaxPrinciple(a) => max_principle(a, seed, out),
        VerifyCheck::Poincare(a) => {
            let space = load_space(&a.source)?;
            let r = poincare_constant(&space, a.p, &eigen_mode(a.mode, &a.boundary)?, &eigen_config(a))?;
            let mut kv = KeyValues::default();
            kv.real("p", a.p);
            kv.real("constant", r.constant);
            kv.real("eigenvalue", r.eigenvalue);
            if let Some(d) = r.dense_eigenvalue {
                kv.real("dense_eigenvalue", d);
            }
            out.write("eigenfield.txt", &r.eigenfield.to_text())?;
            out.write("poincare.txt", &kv.render())
        }
        VerifyCheck::Sobolev(a) => sobolev(a, seed, out),
        VerifyCheck::Doubling(a) => doubling(a, out),
    }
}

fn write_reports(out: &mut Output, reports: &[EstimateReport]) -> CliResult<()> {
    out.write("reports.tsv", &report_table(reports))?;
    let mut contexts = String::from("context_digest\tcontext\n");
    for r in reports {
        contexts.push_str(&format!("{}\t{}\n", r.digest(), r.context));
    }
    out.write("contexts.tsv", &contexts)
}

fn endpoints(space: &DiscreteMms, boundary: &[usize]) -> Vec<usize> {
    if boundary.is_empty() {
        vec![0, space.len() - 1]
    } else {
        boundary.to_vec()
    }
}

fn harnack(a: &HarnackArgs, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let n = space.len();
    let boundary = endpoints(&space, &a.boundary);
    let u = match &a.u {
        Some(path) => load_field(path, &space)?,
        None => {
            let values = if a.boundary_values.is_empty() { vec![1.0, 2.0] } else { a.boundary_values.clone() };
            let r = solve_poisson_dirichlet(&space, a.p, &boundary, &values, &ScalarField::zeros(n), &SolverConfig::default())?;
            out.write("u.txt", &r.solution.to_text())?;
            r.solution
        }
    };
    let domain: Vec<usize> = (0..n).filter(|x| !boundary.contains(x)).collect();
    if domain.is_empty() {
        return Err(CliError::Usage("no vertex lies off the boundary".into()));
    }
    let vertex = match a.vertex {
        Some(v) => v,
        None => {
            // interior vertex farthest from the boundary, lowest index on ties
            let dists: Vec<Vec<f64>> = boundary.iter().map(|&b| space.distances_from(b)).collect();
            let depth = |x: usize| dists.iter().map(|d| d[x]).fold(f64::INFINITY, f64::min);
            domain.iter().copied().fold(domain[0], |best, x| if depth(x) > depth(best) { x } else { best })
        }
    };
    let opts = HarnackOptions {
        radius: a.radius,
        dilation: a.dilation,
        m_hat: a.m_hat,
        policy: if a.strict_radii { RadiusPolicy::Strict } else { RadiusPolicy::Fit },
        domain: Some(domain),
        ..Default::default()
    };
    let zero = ScalarField::zeros(n);
    let sub = harnack_subsolution(&space, &u, vertex, a.p, &zero, &zero, &opts)?;
    let sup = harnack_supersolution(&space, &u, vertex, a.p, &zero, &zero, &opts)?;
    let mut kv = KeyValues::default();
    kv.push("vertex", vertex);
    for (name, r) in [("sub", &sub), ("super", &sup)] {
        kv.real(format!("{name}.constant"), r.report.empirical_constant);
        kv.real(format!("{name}.radius_scale"), r.radius_scale);
        kv.push(format!("{name}.radii"), reals(&r.radii));
        if let Some(rigid) = r.rigidity {
            kv.push(format!("{name}.rigidity"), rigid);
        }
    }
    out.write("harnack.txt", &kv.render())?;
    let mut reports = vec![sub.report, sup.report];
    plaplab_core::regularity::sort_reports(&mut reports);
    write_reports(out, &reports)
}

/// `[0, 1]` with `cells` cells: measure `h`, conductance `1/h`, length `h`.
fn interval(cells: usize) -> CliResult<DiscreteMms> {
    let h = 1.0 / cells as f64;
    let edges: Vec<EdgeSpec> = (0..cells).map(|i| EdgeSpec::new(i, i + 1, 1.0 / h, h)).collect();
    Ok(DiscreteMms::new(vec![h; cells + 1], &edges)?)
}

fn holder(a: &HolderArgs, out: &mut Output) -> CliResult<()> {
    if a.levels.is_empty() || a.levels.iter().any(|&c| c < 4) {
        return Err(CliError::Usage("--levels needs cell counts of at least 4".into()));
    }
    let mut spaces = Vec::new();
    let mut fields = Vec::new();
    let mut regions = Vec::new();
    for &cells in &a.levels {
        let s = interval(cells)?;
        let zero = ScalarField::zeros(cells + 1);
        let r = solve_poisson_dirichlet(&s, a.p, &[0, cells], &[0.0, 1.0], &zero, &SolverConfig::default())?;
        spaces.push(s);
        fields.push(r.solution);
        regions.push((cells / 4..=3 * cells / 4).collect::<Vec<usize>>());
    }
    let levels: Vec<HolderLevel> = (0..spaces.len())
        .map(|i| HolderLevel {
            space: &spaces[i],
            u: &fields[i],
            region: &regions[i],
        })
        .collect();
    let fit = holder_exponent_fit(&levels)?;
    let mut kv = KeyValues::default();
    kv.real("p", a.p);
    kv.real("alpha", fit.alpha);
    kv.real("constant", fit.constant);
    kv.real("fit_residual", fit.fit_residual);
    kv.push("pairs", fit.pairs);
    for (i, cells) in a.levels.iter().enumerate() {
        kv.push(format!("level.{cells}.alpha"), fit.level_alphas[i].map_or("-".into(), real));
        let lip = lipschitz_constant(&spaces[i], &fields[i])?;
        kv.real(format!("level.{cells}.lipschitz"), lip.edge_constant);
    }
    out.write("holder.txt", &kv.render())
}

fn bochner(a: &BochnerArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let k = match a.k.as_str() {
        "auto" => None,
        v => Some(v.parse::<f64>().map_err(|_| CliError::Usage(format!("--K expects a number or auto, got '{v}'")))?),
    };
    let (table, global) = curvature_table(&space, Execution::Parallel);
    out.write("curvature.tsv", &table)?;
    let report = bochner_report(&space, k, a.probes, seed, Execution::Parallel)?;
    let mut kv = KeyValues::default();
    kv.real("global_K", global);
    kv.real("K", report.rhs);
    kv.push("pass", report.pass);
    out.write("summary.txt", &kv.render())?;
    write_reports(out, &[report])
}

fn second_order(a: &SecondOrderArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let f = ScalarField::random_zero_mean(&space, seed);
    let mut reports = Vec::new();
    for &p in &a.p {
        let r = solve_poisson_neumann(&space, p, &f, &SolverConfig::default())?;
        let mut rep = second_order_check(&space, &r.solution, p, &f, a.certification_tolerance, f64::INFINITY)?;
        rep.context = format!("{} seed={seed}", rep.context);
        reports.push(rep);
    }
    plaplab_core::regularity::sort_reports(&mut reports);
    write_reports(out, &reports)
}

fn max_principle(a: &MaxPrincipleArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let n = space.len();
    let boundary = endpoints(&space, &a.boundary);
    let mut table = String::from("instance\twithin_bounds\tstrict_extremum\tboundary_min\tboundary_max\tinterior_min\tinterior_max\n");
    let mut violations = 0;
    for i in 0..a.instances {
        let values = ScalarField::random(boundary.len(), seed.wrapping_add(i as u64)).into_vec();
        let r = solve_poisson_dirichlet(&space, a.p, &boundary, &values, &ScalarField::zeros(n), &SolverConfig::default())?;
        let rep = maximum_principle_check(&space, &boundary, &values, &r.solution, 1e-10)?;
        if !rep.within_bounds || rep.strict_extremum.is_some() {
            violations += 1;
        }
        table.push_str(&format!(
            "{i}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            rep.within_bounds,
            rep.strict_extremum.map_or("-".into(), |x| x.to_string()),
            real(rep.boundary_min),
            real(rep.boundary_max),
            real(rep.interior_min),
            real(rep.interior_max)
        ));
    }
    out.write("max_principle.tsv", &table)?;
    let mut kv = KeyValues::default();
    kv.push("instances", a.instances);
    kv.push("violations", violations);
    out.write("summary.txt", &kv.render())
}

fn default_radii(min_len: f64, cap: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = min_len;
    while r < cap {
        radii.push(r);
        r *= 2.0;
    }
    radii
}

fn doubling_for(space: &DiscreteMms, cap: Option<f64>, radii: &[f64]) -> CliResult<plaplab_core::space::DoublingReport> {
    let min_len = space
        .min_edge_length()
        .ok_or_else(|| CliError::Usage("doubling needs a space with edges".into()))?;
    let cap = cap.unwrap_or_else(|| space.diameter());
    let radii = if radii.is_empty() { default_radii(min_len, cap) } else { radii.to_vec() };
    Ok(doubling_estimates(space, &DoublingOptions::new(cap, radii))?)
}

fn doubling(a: &DoublingArgs, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    space.require_connected()?;
    let r = doubling_for(&space, a.radius_cap, &a.radii)?;
    let mut kv = KeyValues::default();
    kv.real("radius_cap", r.radius_cap);
    kv.real("constant_cd", r.constant_cd);
    kv.real("fitted_dimension_s", r.fitted_dimension_s);
    kv.real("fit_residual", r.fit_residual);
    kv.push("samples", r.samples);
    kv.push("degenerate", r.degenerate);
    out.write("doubling.txt", &kv.render())
}

fn sobolev(a: &SobolevArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let space = load_space(&a.source)?;
    let s = match a.s {
        Some(s) => s,
        None => {
            space.require_connected()?;
            doubling_for(&space, None, &[])?.fitted_dimension_s
        }
    };
    let opts = SobolevOptions {
        dilation: a.dilation,
        seed,
        ..Default::default()
    };
    let report = sobolev_probe(&space, a.p, s, a.vertex, a.radius, &opts)?;
    write_reports(out, &[report])
}
