//! Command-line entry point. Exit status: 0 on success, 2 when a run (or
//! any sweep member) fails to converge, 1 on every error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use porodarcy::config::{self, LinearChoice, RunConfig};
use porodarcy::csvio::SweepStatus;
use porodarcy::error::{Error, Result};
use porodarcy::meshfile;
use porodarcy::runner::{self, RunRequest};
use porodarcy_core::benchmarks::{problem_summary, FittedRate, PROBLEM_NAMES};
use porodarcy_core::drag::DragLaw;

#[derive(Parser)]
#[command(
    name = "porodarcy",
    version,
    about = "Mixed finite element solver for Darcy flow with pressure-dependent drag"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a packaged problem; writes solution.vtk, history.csv,
    /// summary.txt and pressure.txt into the output directory.
    Solve(SolveArgs),
    /// Run the same problem over several beta values; writes sweep.csv plus
    /// one beta-<value> subdirectory per member.
    Sweep(SweepArgs),
    /// Mesh-refinement study against a problem's closed form; writes
    /// convergence.csv.
    Convergence(ConvergenceArgs),
    /// List the packaged problems.
    ListProblems,
    /// Summarize a mesh file.
    MeshInfo {
        /// Mesh in the solver's ASCII format.
        path: PathBuf,
    },
    /// Regenerate the desk-scale meshes shipped under meshes/.
    GenMeshes {
        /// Target directory.
        #[arg(long, default_value = "meshes")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Packaged problem name (see list-problems).
    #[arg(long)]
    problem: Option<String>,
    /// Configuration file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default out/<problem>, suffixed per subcommand).
    #[arg(long)]
    out: Option<String>,
    /// Drag law: constant, linear or barus.
    #[arg(long)]
    law: Option<String>,
    /// Pressure coefficient of the drag law.
    #[arg(long)]
    beta: Option<f64>,
    /// Per-region base drag as tag:value pairs, e.g. 1:0.001,2:1.0.
    #[arg(long)]
    alpha0: Option<String>,
    /// Fixed-point tolerance on the nodal pressure change.
    #[arg(long)]
    eps_tol: Option<f64>,
    /// Fixed-point iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Mesh resolution knob (elements per edge, rings, ...).
    #[arg(long)]
    resolution: Option<usize>,
    /// Triangulate the 2D grid problems.
    #[arg(long)]
    triangles: bool,
    /// Quadrature degree (default 2; raise for sensitivity checks).
    #[arg(long)]
    quadrature_degree: Option<usize>,
    /// Linear solver: direct or minres.
    #[arg(long)]
    linear: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Start the fixed point from a previously written pressure.txt.
    #[arg(long)]
    warm_start: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated beta values.
    #[arg(long)]
    betas: Option<String>,
    /// Evenly spaced betas as start:stop:count (inclusive).
    #[arg(long)]
    beta_range: Option<String>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated mesh resolutions, strictly increasing.
    #[arg(long, default_value = "8,16,32,64")]
    resolutions: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let fine = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if fine { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Convergence(args) => convergence(args),
        Command::ListProblems => {
            for name in PROBLEM_NAMES {
                println!("{name:<15} {}", problem_summary(name).unwrap_or(""));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::MeshInfo { path } => {
            let mesh = meshfile::read_mesh(&path)?;
            print!("{}", meshfile::info_string(&mesh));
            Ok(ExitCode::SUCCESS)
        }
        Command::GenMeshes { dir } => {
            for (path, nodes, elements) in meshfile::generate_shipped_meshes(&dir)? {
                println!("{}: {nodes} nodes, {elements} elements", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Merged configuration, the problem it selects and the output directory;
/// `suffix` distinguishes the per-subcommand defaults.
fn resolve(common: &CommonArgs, suffix: &str) -> Result<(String, RunConfig, PathBuf)> {
    let file = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let merged = file.overlay(&common.to_config()?);
    let problem = merged.problem.clone().ok_or_else(|| {
        Error::InvalidArgument("no problem selected; use --problem or a config file".into())
    })?;
    let out = match &merged.output {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from("out").join(format!("{problem}{suffix}")),
    };
    Ok((problem, merged, out))
}

impl CommonArgs {
    fn to_config(&self) -> Result<RunConfig> {
        let law = self
            .law
            .as_deref()
            .map(|s| {
                DragLaw::from_name(s).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "unknown law '{s}' (constant, linear, barus)"
                    ))
                })
            })
            .transpose()?;
        let linear = self
            .linear
            .as_deref()
            .map(|s| {
                LinearChoice::from_name(s).ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown linear solver '{s}' (direct, minres)"))
                })
            })
            .transpose()?;
        let alpha0 = self
            .alpha0
            .as_deref()
            .map(|s| config::parse_alpha0(s).map_err(Error::InvalidArgument))
            .transpose()?;
        Ok(RunConfig {
            problem: self.problem.clone(),
            output: self.out.clone(),
            law,
            beta: self.beta,
            alpha0,
            eps_tol: self.eps_tol,
            max_iters: self.max_iters,
            linear,
            quadrature_degree: self.quadrature_degree,
            resolution: self.resolution,
            triangles: self.triangles.then_some(true),
        })
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let (problem, config, out) = resolve(&args.common, "")?;
    let outcome = runner::run_solve(&RunRequest {
        problem: problem.clone(),
        config,
        out_dir: out.clone(),
        warm_start: args.warm_start,
        threads: runner::thread_count()?,
    })?;
    println!(
        "problem {problem}: {} nodes, {} elements",
        outcome.nodes, outcome.elements
    );
    if outcome.converged {
        println!(
            "converged in {} (tolerance {:e})",
            iteration_count(outcome.iterations),
            outcome.eps_tol
        );
    } else {
        println!(
            "no convergence within {} (tolerance {:e})",
            iteration_count(outcome.iterations),
            outcome.eps_tol
        );
    }
    for (name, f) in &outcome.fluxes {
        println!("flux {name}: {f}");
    }
    println!("artifacts in {}", out.display());
    Ok(exit_for(outcome.converged))
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let (problem, config, out) = resolve(&args.common, "-sweep")?;
    let betas = match (&args.betas, &args.beta_range) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "give either --betas or --beta-range, not both".into(),
            ))
        }
        (Some(list), None) => config::parse_float_list(list)
            .map_err(|m| Error::InvalidArgument(format!("--betas: {m}")))?,
        (None, Some(range)) => config::parse_float_range(range)
            .map_err(|m| Error::InvalidArgument(format!("--beta-range: {m}")))?,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "a sweep needs --betas or --beta-range".into(),
            ))
        }
    };
    let threads = runner::thread_count()?;
    let outcome = runner::run_sweep(&problem, &betas, &config, &out, threads)?;
    for row in &outcome.rows {
        match &row.status {
            SweepStatus::Done {
                iterations,
                converged,
                ..
            } => println!(
                "beta {}: {}, {}",
                row.beta,
                iteration_count(*iterations),
                if *converged { "converged" } else { "no convergence" }
            ),
            SweepStatus::Failed(msg) => println!("beta {}: error: {msg}", row.beta),
        }
    }
    println!("aggregate in {}", outcome.csv_path.display());
    Ok(exit_for(outcome.all_converged))
}

fn convergence(args: ConvergenceArgs) -> Result<ExitCode> {
    let (problem, config, out) = resolve(&args.common, "-convergence")?;
    let resolutions = config::parse_usize_list(&args.resolutions)
        .map_err(|m| Error::InvalidArgument(format!("--resolutions: {m}")))?;
    let (report, csv) = runner::run_convergence(&problem, &resolutions, &config, &out)?;
    println!("{:>12} {:>13} {:>13} {:>6}", "h", "e_p", "e_v", "iters");
    for row in &report.rows {
        println!(
            "{:>12.6e} {:>13.6e} {:>13.6e} {:>6}",
            row.h, row.e_p, row.e_v, row.iterations
        );
    }
    println!("fitted rates: pressure {}, velocity {}", report.rate_p, report.rate_v);
    if let (FittedRate::Slope(p), FittedRate::Slope(v)) = (report.rate_p, report.rate_v) {
        if p < 1.5 || v < 0.8 {
            println!("warning: rates below the expected second/first order");
        }
    }
    println!("table in {}", csv.display());
    Ok(exit_for(report.all_converged))
}

fn exit_for(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn iteration_count(n: usize) -> String {
    if n == 1 {
        "1 iteration".into()
    } else {
        format!("{n} iterations")
    }
}
