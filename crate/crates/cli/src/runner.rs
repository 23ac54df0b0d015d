//! Run orchestration: build a catalog problem, solve it with the assembly
//! loop spread over worker threads, and write the artifact set
//!
//! ```text
//! <out>/solution.vtk   mesh plus nodal pressure and velocity
//! <out>/history.csv    iter, diff_norm
//! <out>/summary.txt    iterations, convergence, tolerance, fluxes
//! <out>/pressure.txt   nodal pressures, one per line (warm-start input)
//! ```
//!
//! Element systems are computed on `PORODARCY_THREADS` workers but always
//! scattered in element order, so every artifact is byte-identical across
//! thread counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use porodarcy_core::assembly::{Assembler, LinearSystem, LocalSystem};
use porodarcy_core::benchmarks::{
    build_problem, convergence_study, opening_fluxes, ConvergenceReport,
};
use porodarcy_core::picard::{
    solve_prepared, solve_with, InitialGuess, LinearSolverKind, SolverConfig, Solution,
};
use porodarcy_core::problem::ProblemSpec;

use crate::config::{LinearChoice, RunConfig};
use crate::csvio::{self, full, SweepRow, SweepStatus};
use crate::error::{invalid, io_err, Error, Result};
use crate::vtk::write_vtk;

/// Accuracy of the iterative fallback, chosen well below every catalog
/// tolerance.
const MINRES_TOL: f64 = 1e-12;
const MINRES_MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub problem: String,
    /// Fully merged configuration (flags over file over defaults).
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub warm_start: Option<PathBuf>,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub nodes: usize,
    pub elements: usize,
    pub iterations: usize,
    pub converged: bool,
    pub eps_tol: f64,
    pub fluxes: BTreeMap<String, f64>,
}

/// Worker count: the environment variable wins, `0` meaning a serial
/// element loop; otherwise the machine's parallelism.
pub fn thread_count() -> Result<usize> {
    thread_spec(std::env::var("PORODARCY_THREADS").ok().as_deref())
}

pub fn thread_spec(var: Option<&str>) -> Result<usize> {
    match var {
        None => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
        Some(s) => {
            let n: usize = s.trim().parse().map_err(|_| {
                invalid(format!(
                    "PORODARCY_THREADS must be a non-negative integer, got '{s}'"
                ))
            })?;
            Ok(n.max(1))
        }
    }
}

fn assemble_parallel(
    asm: &Assembler,
    p: &[f64],
    threads: usize,
) -> porodarcy_core::Result<LinearSystem> {
    let ne = asm.spec().mesh.element_count();
    let chunk = ne.div_ceil(threads);
    let mut locals: Vec<Option<LocalSystem>> = vec![None; ne];
    std::thread::scope(|scope| {
        let mut workers = Vec::new();
        for (t, slice) in locals.chunks_mut(chunk).enumerate() {
            let start = t * chunk;
            workers.push(scope.spawn(move || {
                for (k, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(asm.local_system(start + k, p)?);
                }
                Ok::<(), porodarcy_core::Error>(())
            }));
        }
        for w in workers {
            w.join().expect("assembly worker panicked")?;
        }
        Ok::<(), porodarcy_core::Error>(())
    })?;
    let locals: Vec<LocalSystem> = locals
        .into_iter()
        .map(|l| l.expect("every element visited"))
        .collect();
    asm.assemble_from_locals(&locals)
}

/// [`porodarcy_core::picard::solve_with`] with the element loop spread
/// over `threads` workers; bitwise the same result for any count.
pub fn solve_threaded(
    spec: &ProblemSpec,
    config: &SolverConfig,
    threads: usize,
) -> Result<Solution> {
    if threads <= 1 {
        return Ok(solve_with(spec, config)?);
    }
    let asm = Assembler::new(spec)?;
    Ok(solve_prepared(&asm, config, |a, p| {
        assemble_parallel(a, p, threads)
    })?)
}

pub fn run_solve(req: &RunRequest) -> Result<RunOutcome> {
    req.config.check_applicability(&req.problem)?;
    let spec = build_problem(&req.problem, &req.config.build_options())?;

    let mut solver = SolverConfig::default();
    if req.config.linear == Some(LinearChoice::Minres) {
        solver.linear = LinearSolverKind::Minres {
            tol: MINRES_TOL,
            max_iters: MINRES_MAX_ITERS,
        };
    }
    if let Some(path) = &req.warm_start {
        solver.initial_guess = InitialGuess::Pressure(load_pressure(path)?);
    }

    let solution = solve_threaded(&spec, &solver, req.threads)?;
    let fluxes = opening_fluxes(&spec, &solution)?;

    fs::create_dir_all(&req.out_dir).map_err(|e| io_err(&req.out_dir, e))?;
    write_vtk(&spec.mesh, &solution, &req.out_dir.join("solution.vtk"))?;
    csvio::write_history(&solution.report, &req.out_dir.join("history.csv"))?;
    write_pressure(&solution.pressure, &req.out_dir.join("pressure.txt"))?;
    let summary = summary_string(&req.problem, &spec, &solution, &fluxes);
    let path = req.out_dir.join("summary.txt");
    fs::write(&path, summary).map_err(|e| io_err(&path, e))?;

    Ok(RunOutcome {
        nodes: spec.mesh.node_count(),
        elements: spec.mesh.element_count(),
        iterations: solution.report.iterations_used,
        converged: solution.report.converged,
        eps_tol: spec.eps_tol,
        fluxes,
    })
}

fn summary_string(
    problem: &str,
    spec: &ProblemSpec,
    solution: &Solution,
    fluxes: &BTreeMap<String, f64>,
) -> String {
    let report = &solution.report;
    let mut s = format!("problem: {problem}\n");
    s.push_str(&format!("nodes: {}\n", spec.mesh.node_count()));
    s.push_str(&format!("elements: {}\n", spec.mesh.element_count()));
    s.push_str(&format!("law: {}\n", spec.drag.law.name()));
    s.push_str(&format!("beta: {}\n", spec.drag.beta));
    s.push_str(&format!("iterations: {}\n", report.iterations_used));
    s.push_str(&format!(
        "converged: {}\n",
        if report.converged { "yes" } else { "no" }
    ));
    s.push_str(&format!(
        "tolerance: {:e} ({})\n",
        spec.eps_tol,
        if report.converged { "met" } else { "not met" }
    ));
    if let Some(&d) = report.diff_norms.last() {
        s.push_str(&format!("final diff norm: {d:e}\n"));
    }
    for (name, f) in fluxes {
        s.push_str(&format!("flux {name}: {f}\n"));
    }
    s
}

fn write_pressure(pressure: &[f64], path: &Path) -> Result<()> {
    let mut s = String::new();
    for &p in pressure {
        s.push_str(&full(p));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| io_err(path, e))
}

fn load_pressure(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|_| {
            Error::InvalidArgument(format!(
                "{}:{}: bad pressure value '{line}'",
                path.display(),
                i + 1
            ))
        })?);
    }
    Ok(values)
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub all_converged: bool,
    pub csv_path: PathBuf,
}

/// One independent run per beta, each in its own `beta-<value>`
/// subdirectory; a failed member keeps its marked row and the sweep goes
/// on.
pub fn run_sweep(
    problem: &str,
    betas: &[f64],
    config: &RunConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<SweepOutcome> {
    if betas.is_empty() {
        return Err(invalid("the beta list is empty"));
    }
    for (i, &b) in betas.iter().enumerate() {
        if betas[..i].contains(&b) {
            return Err(invalid(format!(
                "beta {b} appears twice; sweep members need distinct directories"
            )));
        }
    }
    let mut rows = Vec::new();
    for &beta in betas {
        let mut member = config.clone();
        member.beta = Some(beta);
        let req = RunRequest {
            problem: problem.to_string(),
            config: member,
            out_dir: out_dir.join(format!("beta-{beta}")),
            warm_start: None,
            threads,
        };
        let status = match run_solve(&req) {
            Ok(outcome) => SweepStatus::Done {
                iterations: outcome.iterations,
                converged: outcome.converged,
                fluxes: outcome.fluxes.into_iter().collect(),
            },
            Err(e) => SweepStatus::Failed(e.to_string()),
        };
        rows.push(SweepRow { beta, status });
    }
    let csv_path = out_dir.join("sweep.csv");
    csvio::write_sweep(&rows, &csv_path)?;
    let all_converged = rows.iter().all(SweepRow::converged);
    Ok(SweepOutcome {
        rows,
        all_converged,
        csv_path,
    })
}

/// Refinement study against the problem's closed form; rows and fitted
/// rates land in `convergence.csv`.
pub fn run_convergence(
    problem: &str,
    resolutions: &[usize],
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(ConvergenceReport, PathBuf)> {
    config.check_applicability(problem)?;
    let report = convergence_study(problem, resolutions, &config.build_options())?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let csv_path = out_dir.join("convergence.csv");
    csvio::write_convergence(&report, &csv_path)?;
    Ok((report, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use porodarcy_core::benchmarks::BuildOptions;

    #[test]
    fn thread_spec_reads_the_cap() {
        assert_eq!(thread_spec(Some("4")).unwrap(), 4);
        assert_eq!(thread_spec(Some("0")).unwrap(), 1);
        assert_eq!(thread_spec(Some(" 2 ")).unwrap(), 2);
        assert!(thread_spec(Some("fast")).is_err());
        assert!(thread_spec(Some("-1")).is_err());
        assert!(thread_spec(None).unwrap() >= 1);
    }

    #[test]
    fn threaded_assembly_is_bitwise_serial() {
        let mut opts = BuildOptions::default();
        opts.resolution = Some(8);
        opts.beta = Some(0.2);
        let spec = build_problem("constant2d", &opts).unwrap();
        let serial = solve_threaded(&spec, &SolverConfig::default(), 1).unwrap();
        for threads in [2, 3, 7] {
            let par = solve_threaded(&spec, &SolverConfig::default(), threads).unwrap();
            assert_eq!(par.report.iterations_used, serial.report.iterations_used);
            for n in 0..spec.mesh.node_count() {
                assert_eq!(par.pressure[n].to_bits(), serial.pressure[n].to_bits());
                for d in 0..3 {
                    assert_eq!(
                        par.velocity[n][d].to_bits(),
                        serial.velocity[n][d].to_bits()
                    );
                }
            }
        }
    }

    #[test]
    fn artifacts_exist_and_warm_start_restarts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let req = RunRequest {
            problem: "constant2d".into(),
            config: RunConfig {
                resolution: Some(6),
                beta: Some(0.2),
                ..RunConfig::default()
            },
            out_dir: out.clone(),
            warm_start: None,
            threads: 1,
        };
        let cold = run_solve(&req).unwrap();
        assert!(cold.converged);
        assert!(cold.iterations > 1);
        for f in ["solution.vtk", "history.csv", "summary.txt", "pressure.txt"] {
            assert!(out.join(f).is_file(), "{f}");
        }
        let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
        assert!(summary.contains("converged: yes"));
        assert!(summary.contains("(met)"));

        let warm = RunRequest {
            out_dir: dir.path().join("warm"),
            warm_start: Some(out.join("pressure.txt")),
            ..req
        };
        let outcome = run_solve(&warm).unwrap();
        assert!(outcome.converged);
        assert_eq!(outcome.iterations, 1);
    }

    #[test]
    fn sweep_marks_a_failing_member_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            resolution: Some(20),
            ..RunConfig::default()
        };
        // beta = -1 fails model validation; the sweep must still finish
        let outcome =
            run_sweep("oneD", &[0.01, -1.0, 0.02], &cfg, dir.path(), 1).unwrap();
        assert!(!outcome.all_converged);
        assert_eq!(outcome.rows.len(), 3);
        assert!(outcome.rows[0].converged());
        assert!(matches!(outcome.rows[1].status, SweepStatus::Failed(_)));
        assert!(outcome.rows[2].converged());
        let text = fs::read_to_string(outcome.csv_path).unwrap();
        assert!(text.lines().nth(2).unwrap().contains("error: "));
        assert!(dir.path().join("beta-0.01").join("summary.txt").is_file());
        assert!(dir.path().join("beta-0.02").join("summary.txt").is_file());

        let dup = run_sweep("oneD", &[0.01, 0.01], &cfg, dir.path(), 1);
        assert!(dup.is_err());
        let empty = run_sweep("oneD", &[], &cfg, dir.path(), 1);
        assert!(empty.is_err());
    }

    #[test]
    fn convergence_writes_rows_for_each_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::default();
        let (report, csv) =
            run_convergence("constant2d", &[4, 6, 8], &cfg, dir.path()).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.all_converged);
        let text = fs::read_to_string(csv).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().last().unwrap().starts_with("# rate_p = "));
    }
}
