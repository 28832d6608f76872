use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ousg", version, about = "Ornstein-Uhlenbeck semigroups: kernels, normal forms and numerical checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Model file, or the name of a shipped model.
    #[arg(long, global = true, conflicts_with = "lambdas")]
    pub model: Option<String>,
    /// Diagonal model with these rates and Q = I, e.g. `1,2`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Required by every command that draws random numbers.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file. Relative paths are resolved against `OUSG_OUTPUT_DIR` when it is set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "OUSG_OUTPUT_DIR", hide_env_values = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model and print its spectrum and invariant covariance.
    Validate,
    /// Canonical form of a normal model.
    Decompose(DecomposeArgs),
    /// Evaluate a Mehler kernel variant on a grid.
    Kernel(KernelArgs),
    /// `H_t f(x)` for a Gaussian bump, by both routes.
    Apply(ApplyArgs),
    /// `sup_t |H_t f(x)|` over a time grid.
    Maximal(MaximalArgs),
    /// Exact draws from the transition law.
    Sample(SampleArgs),
    /// Empirical margins of the geometric inequalities.
    Geometry(GeometryArgs),
    /// Weak-type level-set scans and the forbidden-zone recursion.
    Weaktype(WeaktypeArgs),
    /// Run the acceptance criteria.
    VerifyAll(VerifyArgs),
    /// List the shipped models.
    Models,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Print the canonical model in the model-file format instead of the report.
    #[arg(long)]
    pub emit_model: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelVariant {
    /// Transition density against the invariant measure, any model.
    Transition,
    /// Diagonal formula; needs a diagonal model.
    Diag,
    /// Kernel of the canonical form, arguments mapped to canonical coordinates.
    General,
    /// Single 2x2 rotation block in canonical coordinates.
    Block,
    /// Frequency-free bound for a single block.
    BlockBound,
    /// Exponent multiplied by `--kappa`; needs a diagonal model.
    Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Coupling {
    Exact,
    HalfCross,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelVariant::Transition)]
    pub variant: KernelVariant,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    /// Points `x`; coordinates comma separated, points separated by `;`.
    #[arg(long, required = true)]
    pub x: String,
    #[arg(long, required = true)]
    pub u: String,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = Coupling::Exact)]
    pub coupling: Coupling,
}

#[derive(Debug, Args)]
pub struct BumpArgs {
    /// Center of `f(u) = exp(-|u - c|^2 / (2 w^2))`; defaults to the origin.
    #[arg(long, value_delimiter = ',')]
    pub center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Kolmogorov,
    Mehler,
    Both,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[command(flatten)]
    pub bump: BumpArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, required = true)]
    pub x: String,
    #[arg(long, value_enum, default_value_t = Route::Both)]
    pub route: Route,
}

#[derive(Debug, Args)]
pub struct MaximalArgs {
    #[command(flatten)]
    pub bump: BumpArgs,
    #[arg(long, required = true)]
    pub x: String,
    /// Log-spaced grid `lo,hi,count`; the standard grid when omitted.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, required = true)]
    pub x: String,
    /// One time for independent draws, several for paths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long, required = true)]
    pub lemma: String,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Bump,
    Atoms,
}

#[derive(Debug, Args)]
pub struct WeaktypeArgs {
    /// `lo,hi,count`, log-spaced.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 1000.0, 9.0])]
    pub alpha_grid: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = Family::Bump)]
    pub family: Family,
    /// Bump center, or the atoms as `;`-separated points.
    #[arg(long)]
    pub at: Option<String>,
    /// Bump width; 0.01 for scans and 0.1 for the recursion by default.
    #[arg(long)]
    pub width: Option<f64>,
    /// Run the forbidden-zone recursion instead of a scan.
    #[arg(long)]
    pub recursion: bool,
    #[arg(long, default_value_t = 0)]
    pub m1: u32,
    #[arg(long, default_value_t = 0)]
    pub m2: u32,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Localization cell index for the local coordinates.
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<i64>>,
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long = "B")]
    pub b: Option<f64>,
    #[arg(long = "M", default_value_t = 2.0)]
    pub m: f64,
    /// Level for the recursion; calibrated from the test function when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Budgets divided by about ten.
    #[arg(long)]
    pub quick: bool,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u8>>,
}
