use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "plaplab", version, about = "p-Laplacian laboratory on weighted graphs")]
pub struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "plaplab-out")]
    pub out: PathBuf,

    /// Seed for every random choice (right-hand sides, probe fields).
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(multiple = false)]
pub struct SpaceSource {
    /// Generator string: path:n, cycle:n, grid:AxB, star:k, horn:n:e, random:n:seed.
    #[arg(long)]
    pub space: Option<String>,
    /// Space file with `v <i> <measure>` and `e <i> <j> <conductance> <length>` records.
    #[arg(long)]
    pub space_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate, inspect or convert a space.
    Space {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// Solve a p-Poisson problem.
    Solve(SolveArgs),
    /// First p-eigenvalue and eigenfield.
    Eigen(EigenArgs),
    /// p-capacity of a condenser.
    Capacity(CapacityArgs),
    /// Pointwise Bakry-Émery curvature lower bounds.
    Curvature(CurvatureArgs),
    /// Run one regularity check.
    Verify {
        #[command(subcommand)]
        check: VerifyCheck,
    },
    /// Cartesian sweep of Neumann solves over spaces, exponents and ε₀.
    Sweep(SweepArgs),
}

#[derive(Subcommand, Debug)]
pub enum SpaceAction {
    /// Write a generated space to `space.txt`.
    Generate {
        #[command(flatten)]
        source: SpaceSource,
    },
    /// Write summary statistics to `inspect.txt`.
    Inspect {
        #[command(flatten)]
        source: SpaceSource,
    },
    /// Re-serialize a space file in canonical order to `space.txt`.
    Convert {
        #[command(flatten)]
        source: SpaceSource,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveKind {
    PoissonDirichlet,
    PoissonNeumann,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Variational,
    Fixedpoint,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dirichlet,
    Neumann,
}

/// Right-hand side selection shared by solving commands.
#[derive(Args, Debug, Clone)]
pub struct RhsArgs {
    /// Right-hand side field file (`<index> <value>` lines).
    #[arg(long, conflicts_with = "f_random")]
    pub f: Option<PathBuf>,
    /// Use a seeded random zero-mean right-hand side.
    #[arg(long)]
    pub f_random: bool,
}

#[derive(Args, Debug, Clone)]
pub struct VariationalArgs {
    /// KKT residual bound of the direct solver.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
}

#[derive(Args, Debug, Clone)]
pub struct FixedPointArgs {
    #[arg(long, default_value_t = 1.0)]
    pub eps0: f64,
    #[arg(long, default_value_t = 0.3)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub eps_min: f64,
    /// Certification bound on ‖Δ_p u - f‖.
    #[arg(long, default_value_t = 1e-9)]
    pub final_tolerance: f64,
    /// Per-stage residual bound; defaults to final/10.
    #[arg(long)]
    pub outer_tolerance: Option<f64>,
    /// Inner increment bound; defaults to outer/10.
    #[arg(long)]
    pub inner_tolerance: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 500)]
    pub max_inner: usize,
    /// Smallest damping factor before the outer loop stops.
    #[arg(long, default_value_t = 1e-6)]
    pub theta_min: f64,
    /// Skip the final stage at ε = 0.
    #[arg(long)]
    pub no_limit_stage: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    /// Problem file; replaces --kind, --p, --boundary, --boundary-values and --f.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "problem")]
    pub kind: Option<SolveKind>,
    #[arg(long, required_unless_present = "problem", allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub boundary: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub boundary_values: Vec<f64>,
    #[command(flatten)]
    pub rhs: RhsArgs,
    #[arg(long, value_enum, default_value = "variational")]
    pub method: Method,
    #[command(flatten)]
    pub variational: VariationalArgs,
    #[command(flatten)]
    pub fixedpoint: FixedPointArgs,
}

#[derive(Args, Debug)]
pub struct EigenArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, value_enum, default_value = "neumann")]
    pub mode: Mode,
    #[arg(long, value_delimiter = ',')]
    pub boundary: Vec<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub eigen_tolerance: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iterations: usize,
}

#[derive(Args, Debug)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Condenser plate where u = 1.
    #[arg(long = "K", value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Domain; u = 0 outside.
    #[arg(long, value_delimiter = ',', required = true)]
    pub omega: Vec<usize>,
    #[command(flatten)]
    pub variational: VariationalArgs,
}

#[derive(Args, Debug)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    /// Run vertex pencils one after another.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug)]
pub enum VerifyCheck {
    /// Harnack sup/inf estimates for a positive p-harmonic Dirichlet solution.
    Harnack(HarnackArgs),
    /// Hölder exponent fit on refined intervals.
    Holder(HolderArgs),
    /// Pointwise Bochner inequality against curvature lower bounds.
    Bochner(BochnerArgs),
    /// Second-order surrogate of a certified Neumann solution.
    SecondOrder(SecondOrderArgs),
    /// Comparison with boundary data on seeded Dirichlet instances.
    MaxPrinciple(MaxPrincipleArgs),
    /// Sharp Poincaré constant from the first eigenvalue.
    Poincare(EigenArgs),
    /// Empirical local Sobolev constant.
    Sobolev(SobolevArgs),
    /// Doubling constant and fitted dimension.
    Doubling(DoublingArgs),
}

#[derive(Args, Debug)]
pub struct HarnackArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Field to test; defaults to the p-harmonic solution with the given boundary data.
    #[arg(long)]
    pub u: Option<PathBuf>,
    /// Dirichlet vertices; defaults to the first and last vertex.
    #[arg(long, value_delimiter = ',')]
    pub boundary: Vec<usize>,
    /// Dirichlet values; default 1 and 2.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub boundary_values: Vec<f64>,
    /// Ball center; defaults to the vertex farthest from the boundary.
    #[arg(long)]
    pub vertex: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dilation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m_hat: f64,
    /// Fail instead of shrinking radii that do not fit.
    #[arg(long)]
    pub strict_radii: bool,
}

#[derive(Args, Debug)]
pub struct HolderArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Cell counts of the refined intervals.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    pub levels: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct BochnerArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    /// Curvature constant, or `auto` for the pencil lower bound.
    #[arg(long = "K", default_value = "auto", allow_negative_numbers = true)]
    pub k: String,
    #[arg(long, default_value_t = 16)]
    pub probes: usize,
}

#[derive(Args, Debug)]
pub struct SecondOrderArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,2.5")]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub certification_tolerance: f64,
}

#[derive(Args, Debug)]
pub struct MaxPrincipleArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    /// Dirichlet vertices; defaults to the first and last vertex.
    #[arg(long, value_delimiter = ',')]
    pub boundary: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct SobolevArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Dimension exponent; defaults to the fitted doubling dimension.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub vertex: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dilation: f64,
}

#[derive(Args, Debug)]
pub struct DoublingArgs {
    #[command(flatten)]
    pub source: SpaceSource,
    /// Radius cap R; defaults to the diameter.
    #[arg(long)]
    pub radius_cap: Option<f64>,
    /// Sampled radii; defaults to 1, 2, 4, … below the cap.
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub spaces: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,2.5")]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub eps0: Vec<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub method: Method,
}
