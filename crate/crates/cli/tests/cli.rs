//! End-to-end runs of the porodarcy binary. Every test writes into its own
//! temporary directory; nothing touches the repository tree.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn porodarcy() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_porodarcy"));
    // keep runs reproducible regardless of the ambient environment
    cmd.env_remove("PORODARCY_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    porodarcy().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Numbers from one CSV column, header skipped, rows with an empty cell
/// ignored.
fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split(',').nth(col))
        .filter(|c| !c.is_empty())
        .map(|c| c.parse().unwrap())
        .collect()
}

fn meshes_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../meshes")
}

#[test]
fn solve_one_d_converges_with_strictly_decreasing_history() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let res = run(&[
        "solve",
        "--problem",
        "oneD",
        "--beta",
        "0.02",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(stdout(&res).contains("converged"));

    let history = csv_column(&read(&out.join("history.csv")), 1);
    assert!(history.len() >= 2);
    for w in history.windows(2) {
        assert!(w[1] < w[0], "history not strictly decreasing: {history:?}");
    }
    assert!(out.join("solution.vtk").is_file());
    assert!(read(&out.join("summary.txt")).contains("converged: yes"));
}

#[test]
fn iteration_starved_solve_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let res = run(&[
        "solve",
        "--problem",
        "fivespot",
        "--max-iters",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 2);
    let summary = read(&out.join("summary.txt"));
    assert!(summary.contains("converged: no"));
    assert!(summary.contains("(not met)"));
}

#[test]
fn checkerboard_summary_reports_its_tolerance_met() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let res = run(&["solve", "--problem", "checkerboard", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(read(&out.join("summary.txt")).contains("tolerance: 1e-9 (met)"));
}

#[test]
fn unknown_problem_exits_1() {
    let res = run(&["solve", "--problem", "nonesuch"]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("unknown problem"));
}

#[test]
fn flag_errors_use_exit_1_not_the_convergence_code() {
    let res = run(&["solve", "--no-such-flag"]);
    assert_eq!(code(&res), 1);
    let res = run(&["--help"]);
    assert_eq!(code(&res), 0);
}

#[test]
fn sweep_iteration_counts_grow_with_beta() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sweep");
    let res = run(&[
        "sweep",
        "--problem",
        "oneD",
        "--betas",
        "0.005,0.01,0.015,0.02",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));

    let csv = read(&out.join("sweep.csv"));
    let iters = csv_column(&csv, 1);
    assert_eq!(iters.len(), 4);
    for w in iters.windows(2) {
        assert!(w[1] >= w[0], "iterations not monotone: {iters:?}");
    }
    // each member keeps its own artifact directory
    for b in ["0.005", "0.01", "0.015", "0.02"] {
        assert!(out.join(format!("beta-{b}")).join("summary.txt").is_file());
    }
}

#[test]
fn regions_sweep_production_falls_as_beta_rises() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sweep");
    let res = run(&[
        "sweep",
        "--problem",
        "regions",
        "--betas",
        "0,0.5,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));

    let csv = read(&out.join("sweep.csv"));
    assert!(csv.lines().next().unwrap().ends_with("interface,well"));
    let well = csv_column(&csv, 4);
    assert_eq!(well.len(), 3);
    for w in well.windows(2) {
        assert!(w[1].abs() < w[0].abs(), "production not falling: {well:?}");
    }
}

#[test]
fn empty_beta_list_is_rejected_as_invalid() {
    let res = run(&["sweep", "--problem", "oneD", "--betas", ""]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("invalid argument"));

    let neither = run(&["sweep", "--problem", "oneD"]);
    assert_eq!(code(&neither), 1);
}

#[test]
fn failing_sweep_member_is_marked_and_the_rest_completes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sweep");
    // beta = -1 fails drag-model validation
    let res = run(&[
        "sweep",
        "--problem",
        "oneD",
        "--betas",
        "0.01,-1,0.02",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 2);

    let csv = read(&out.join("sweep.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].contains("converged"));
    assert!(lines[2].contains("error: "));
    assert!(lines[3].contains("converged"));
    assert!(out.join("beta-0.01").join("summary.txt").is_file());
    assert!(out.join("beta-0.02").join("summary.txt").is_file());
}

#[test]
fn convergence_writes_the_table_and_fitted_rates() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("conv");
    let res = run(&[
        "convergence",
        "--problem",
        "mms",
        "--resolutions",
        "8,16,24",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(stdout(&res).contains("fitted rates"));

    let csv = read(&out.join("convergence.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "h,e_p,e_v");
    assert!(lines[4].starts_with("# rate_p = "));
    let h = csv_column(&csv, 0);
    assert!(h[0] > h[1] && h[1] > h[2]);
}

#[test]
fn list_problems_names_the_whole_catalog() {
    let res = run(&["list-problems"]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    for name in [
        "oneD",
        "constant2d",
        "fivespot",
        "checkerboard",
        "mms",
        "regions",
        "leakage-coarse",
        "patch3d",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn mesh_info_describes_a_shipped_mesh() {
    let path = meshes_dir().join("leakage_desk.msh");
    let res = run(&["mesh-info", path.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let text = stdout(&res);
    assert!(text.contains("dimension: 3"));
    assert!(text.contains("nodes: 494"));
    assert!(text.contains("facet sets:"));
}

#[test]
fn gen_meshes_reproduces_the_shipped_files() {
    let tmp = TempDir::new().unwrap();
    let res = run(&["gen-meshes", "--dir", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    for file in ["regions_desk.msh", "leakage_desk.msh"] {
        let fresh = read(&tmp.path().join(file));
        let shipped = read(&meshes_dir().join(file));
        assert_eq!(fresh, shipped, "{file} differs from the shipped copy");
    }
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("from-config");
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "[run]\nproblem = oneD\noutput = {}\n\n[model]\nbeta = 0.02\n",
            out.display()
        ),
    )
    .unwrap();

    let res = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(read(&out.join("summary.txt")).contains("beta: 0.02"));

    // a flag wins over the file
    let out2 = tmp.path().join("override");
    let res = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--beta",
        "0.01",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    assert!(read(&out2.join("summary.txt")).contains("beta: 0.01"));
}

#[test]
fn config_errors_carry_the_line_number() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "[run]\nproblem = oneD\nwhatever = 3\n").unwrap();
    let res = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("line 3"), "stderr: {}", stderr(&res));
}

#[test]
fn artifacts_are_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let mut outs = Vec::new();
    for (dir, threads) in [("serial", "0"), ("pool", "3")] {
        let out = tmp.path().join(dir);
        let res = porodarcy()
            .args(["solve", "--problem", "checkerboard", "--out", out.to_str().unwrap()])
            .env("PORODARCY_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
        outs.push(out);
    }
    for file in ["solution.vtk", "history.csv", "summary.txt", "pressure.txt"] {
        assert_eq!(
            fs::read(outs[0].join(file)).unwrap(),
            fs::read(outs[1].join(file)).unwrap(),
            "{file} depends on the thread count"
        );
    }

    let res = porodarcy()
        .args(["solve", "--problem", "oneD"])
        .env("PORODARCY_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("PORODARCY_THREADS"));
}

#[test]
fn warm_start_resumes_from_the_saved_pressure() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let res = run(&["solve", "--problem", "oneD", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&res), 0);

    let second = tmp.path().join("second");
    let res = run(&[
        "solve",
        "--problem",
        "oneD",
        "--warm-start",
        first.join("pressure.txt").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(read(&second.join("summary.txt")).contains("iterations: 1"));
}

#[test]
fn solver_flags_reach_the_core() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let res = run(&[
        "solve",
        "--problem",
        "constant2d",
        "--resolution",
        "6",
        "--triangles",
        "--linear",
        "minres",
        "--quadrature-degree",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(read(&out.join("summary.txt")).contains("elements: 72"));

    // triangles only exist on the 2D grid problems
    let res = run(&["solve", "--problem", "oneD", "--triangles"]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("triangles"));
}
