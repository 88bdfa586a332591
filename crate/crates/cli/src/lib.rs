//! Command-line front end for `vide-core`: solves, stability sweeps, h-paths,
//! node-count searches and the example-table reports.
//!
//! All logic lives here so it can be driven from tests; `main` only parses
//! arguments and maps errors to exit codes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use vide_core::stability::{self, DEFAULT_BOUND, DEFAULT_I_MAX};
use vide_core::{
    build_mesh, h_path, min_nodes_for_stability, nodes_for_tolerance, registry_lookup, solve,
    sweep_region, GridSpec, KernelDependence, Method, NewtonConfig, Problem, ProblemRegistryEntry,
    StabilityOptions, ToleranceOptions, VideError,
};

pub mod output;
pub mod reproduce;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] VideError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                VideError::Domain(_) | VideError::UnknownProblem(_) | VideError::Dimension { .. } => {
                    EXIT_USAGE
                }
                _ => EXIT_NUMERIC,
            },
            CliError::Io(_) | CliError::Csv(_) => EXIT_IO,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "vide", version, about = "Solve and analyse Volterra integro-differential equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a registry problem on a uniform mesh and write the trajectory.
    Solve(SolveArgs),
    /// Sweep a rectangle of the (z, w) plane for practical stability.
    StabilityRegion(RegionArgs),
    /// Sample the h-path (hλ, h²γ) and classify each point.
    HPath(HPathArgs),
    /// Double the mesh until the Richardson error estimate meets a tolerance.
    ToleranceSearch(ToleranceArgs),
    /// Find the least node count giving a bounded plain solve.
    StabilitySearch(StabilitySearchArgs),
    /// Recompute the example tables and compare with the published values.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Implicit,
    Explicit,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Implicit => Method::Implicit,
            MethodArg::Explicit => Method::Explicit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pbm,
    Pgm,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Registry name: example1, example2, example3 or test.
    #[arg(long)]
    pub problem: Option<String>,
    /// λ for the test equation (implies `--problem test`).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// γ for the test equation (implies `--problem test`).
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long = "x-end", allow_hyphen_values = true)]
    pub x_end: Option<f64>,
}

impl ProblemArgs {
    pub fn resolve(&self) -> Result<ProblemRegistryEntry> {
        for (flag, v) in [("--lambda", self.lambda), ("--gamma", self.gamma), ("--x0", self.x0), ("--x-end", self.x_end)] {
            if let Some(v) = v {
                check_finite(flag, v)?;
            }
        }
        let params = match (self.lambda, self.gamma) {
            (Some(l), Some(g)) => Some((l, g)),
            (None, None) => None,
            _ => return Err(usage("--lambda and --gamma must be given together")),
        };
        let name = match (&self.problem, params) {
            (Some(name), _) => name.as_str(),
            (None, Some(_)) => "test",
            (None, None) => return Err(usage("no problem selected: pass --problem or --lambda/--gamma")),
        };
        if name != "test" && params.is_some() {
            return Err(usage(format!("--lambda/--gamma only apply to `test`, not `{name}`")));
        }
        let entry = registry_lookup(name, params)?;
        if self.x0.is_none() && self.x_end.is_none() {
            return Ok(entry);
        }
        let (x0, x_end) = entry.interval();
        Ok(entry.with_interval(self.x0.unwrap_or(x0), self.x_end.unwrap_or(x_end))?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl OutputArgs {
    fn open(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Implicit)]
    pub method: MethodArg,
    /// Number of mesh nodes, including both endpoints.
    #[arg(long)]
    pub nodes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Implicit)]
    pub method: MethodArg,
    #[arg(long, allow_hyphen_values = true, default_value_t = -100.0)]
    pub zmin: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub zmax: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -100.0)]
    pub wmin: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub wmax: f64,
    /// Lattice size as NZxNW.
    #[arg(long, default_value = "101x101")]
    pub grid: String,
    #[arg(long, default_value_t = DEFAULT_I_MAX)]
    pub imax: u64,
    #[arg(long, value_enum, default_value_t = Format::Pbm)]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HPathArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated stepsizes.
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125,0.0625,0")]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_I_MAX)]
    pub imax: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Implicit)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Coarse node count of the first tableau.
    #[arg(long, default_value_t = 2)]
    pub nodes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StabilitySearchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Explicit)]
    pub method: MethodArg,
    /// First node count probed.
    #[arg(long, default_value_t = 3)]
    pub nodes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// Which table: 1 (tolerance search, implicit) or 2 (stability search, explicit).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub table: u8,
    /// Tolerances for table 1.
    #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-12")]
    pub tol: Vec<f64>,
    /// Run against an empty registry (exercises the per-row failure path).
    #[arg(long, hide = true)]
    pub empty_registry: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn check_finite(flag: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("{flag} must be finite, got {v}")))
    }
}

/// Parse `NZxNW`.
pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || usage(format!("--grid expects NZxNW with both at least 2, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let nz: usize = a.trim().parse().map_err(|_| bad())?;
    let nw: usize = b.trim().parse().map_err(|_| bad())?;
    if nz < 2 || nw < 2 {
        return Err(bad());
    }
    Ok((nz, nw))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::StabilityRegion(a) => cmd_stability_region(a),
        Command::HPath(a) => cmd_h_path(a),
        Command::ToleranceSearch(a) => cmd_tolerance_search(a),
        Command::StabilitySearch(a) => cmd_stability_search(a),
        Command::Reproduce(a) => reproduce::cmd_reproduce(a),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let entry = args.problem.resolve()?;
    let (x0, x_end) = entry.interval();
    let mesh = build_mesh(x0, x_end, args.nodes)?;
    let problem = Problem::Scalar(entry.problem);
    let traj = solve(&problem, &mesh, args.method.into(), &NewtonConfig::default())?;
    let mut out = args.output.open()?;
    output::write_trajectory(&mut out, &traj)?;
    out.flush()?;
    Ok(())
}

pub fn region_spec(args: &RegionArgs) -> Result<GridSpec> {
    for (flag, v) in [("--zmin", args.zmin), ("--zmax", args.zmax), ("--wmin", args.wmin), ("--wmax", args.wmax)] {
        check_finite(flag, v)?;
    }
    let (nz, nw) = parse_grid(&args.grid)?;
    if args.imax == 0 {
        return Err(usage("--imax must be at least 1"));
    }
    let spec = GridSpec::new(args.zmin, args.zmax, args.wmin, args.wmax)
        .with_resolution(nz, nw)
        .with_i_max(args.imax);
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_stability_region(args: &RegionArgs) -> Result<()> {
    let spec = region_spec(args)?;
    let grid = sweep_region(&spec, args.method.into())?;
    let mut out = args.output.open()?;
    match args.format {
        Format::Csv => output::write_region_csv(&mut out, &grid)?,
        Format::Pbm => output::write_region_pbm(&mut out, &grid)?,
        Format::Pgm => output::write_region_pgm(&mut out, &grid)?,
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_h_path(args: &HPathArgs) -> Result<()> {
    let entry = args.problem.resolve()?;
    if args.imax == 0 {
        return Err(usage("--imax must be at least 1"));
    }
    for &h in &args.h {
        check_finite("--h", h)?;
    }
    let path = h_path(entry.lambda, entry.gamma, &args.h)?;
    let mut out = args.output.open()?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
    w.write_record(["h", "z", "w", "implicit_stable", "explicit_stable"])?;
    for s in &path.samples {
        let imp = stability::implicit_p(s.z, s.w, args.imax, DEFAULT_BOUND);
        let exp = stability::explicit_p(s.z, s.w, args.imax, DEFAULT_BOUND);
        w.write_record([
            output::fmt_f64(s.h),
            output::fmt_f64(s.z),
            output::fmt_f64(s.w),
            (imp.is_stable() as u8).to_string(),
            (exp.is_stable() as u8).to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

/// The linear family's kernel ignores `x`, so the O(N) running-sum window
/// is exact for it.
pub fn fast_problem(entry: &ProblemRegistryEntry) -> Problem {
    Problem::Scalar(entry.problem.clone().with_kernel_dependence(KernelDependence::IndependentOfX))
}

pub fn cmd_tolerance_search(args: &ToleranceArgs) -> Result<()> {
    let entry = args.problem.resolve()?;
    if !(args.tol > 0.0) || !args.tol.is_finite() {
        return Err(usage(format!("--tol must be positive and finite, got {}", args.tol)));
    }
    if args.nodes < 2 {
        return Err(usage("--nodes must be at least 2"));
    }
    let opts = ToleranceOptions { start_coarse: args.nodes, ..ToleranceOptions::default() };
    let found = nodes_for_tolerance(
        &fast_problem(&entry),
        args.method.into(),
        args.tol,
        &NewtonConfig::default(),
        &opts,
    )?;
    let mut out = args.output.open()?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
    w.write_record(["problem", "tol", "n_nodes", "coarse_nodes", "error_estimate", "model_nodes"])?;
    w.write_record([
        entry.name.clone(),
        output::fmt_f64(args.tol),
        found.n_nodes.to_string(),
        found.tableau.coarse_mesh().n_nodes().to_string(),
        output::fmt_f64(found.tableau.error_estimate),
        found.model_nodes.to_string(),
    ])?;
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

pub fn cmd_stability_search(args: &StabilitySearchArgs) -> Result<()> {
    let entry = args.problem.resolve()?;
    if args.nodes < 2 {
        return Err(usage("--nodes must be at least 2"));
    }
    let opts = StabilityOptions { start_nodes: args.nodes, ..StabilityOptions::default() };
    let b = min_nodes_for_stability(&entry, args.method.into(), &NewtonConfig::default(), &opts)?;
    let mut out = args.output.open()?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
    w.write_record(["problem", "n_nodes", "h_s", "z", "w", "probes"])?;
    w.write_record([
        entry.name.clone(),
        b.n_nodes.to_string(),
        output::fmt_f64(b.h_s),
        output::fmt_f64(b.z),
        output::fmt_f64(b.w),
        b.probes.to_string(),
    ])?;
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}
