//! Fixed-point iteration on the drag pressure.
//!
//! Each sweep assembles the system at the previous nodal pressure, solves
//! it, and measures the Euclidean norm of the nodal pressure change. The
//! loop stops when that norm drops to the problem tolerance or the
//! iteration limit is reached; running out of iterations is reported, not
//! an error. A pressure-independent drag makes the fixed-point map
//! constant, so the first solve is already exact and no second sweep could
//! change it: such problems report one iteration and a zero change.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{Assembler, LinearSystem};
use crate::error::{invalid, Error};
use crate::math;
use crate::problem::ProblemSpec;
use crate::sparse::{minres, LdlSymbolic};
use crate::Result;

#[derive(Debug, Clone)]
pub enum LinearSolverKind {
    /// Sparse LDL^T; factors the symbolic structure once per run.
    Direct,
    /// Diagonally scaled MINRES.
    Minres { tol: f64, max_iters: usize },
}

#[derive(Debug, Clone)]
pub enum InitialGuess {
    Zero,
    /// Nodal pressures to start the drag linearization from.
    Pressure(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub linear: LinearSolverKind,
    pub initial_guess: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            linear: LinearSolverKind::Direct,
            initial_guess: InitialGuess::Zero,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardReport {
    pub iterations_used: usize,
    /// Pressure-change norm after each sweep.
    pub diff_norms: Vec<f64>,
    pub converged: bool,
}

/// Nodal solution fields plus the iteration record.
#[derive(Debug, Clone)]
pub struct Solution {
    pub velocity: Vec<[f64; 3]>,
    pub pressure: Vec<f64>,
    pub report: PicardReport,
}

pub fn solve(spec: &ProblemSpec) -> Result<Solution> {
    solve_with(spec, &SolverConfig::default())
}

pub fn solve_with(spec: &ProblemSpec, config: &SolverConfig) -> Result<Solution> {
    let assembler = Assembler::new(spec)?;
    solve_prepared(&assembler, config, |asm, p| asm.assemble(p))
}

/// Runs the iteration with a caller-supplied assembly step, so element
/// loops can be distributed; the callback must reproduce
/// [`Assembler::assemble`] exactly.
pub fn solve_prepared(
    assembler: &Assembler,
    config: &SolverConfig,
    assemble: impl Fn(&Assembler, &[f64]) -> Result<LinearSystem>,
) -> Result<Solution> {
    let spec = assembler.spec();
    let dofs = assembler.dof_map();
    let n_nodes = spec.mesh.node_count();

    let mut p_nodes = match &config.initial_guess {
        InitialGuess::Zero => vec![0.0; n_nodes],
        InitialGuess::Pressure(p) => {
            if p.len() != n_nodes {
                return Err(invalid(alloc::format!(
                    "initial pressure has {} entries for {} nodes",
                    p.len(),
                    n_nodes
                )));
            }
            p.clone()
        }
    };

    let mut symbolic: Option<LdlSymbolic> = None;
    let mut diff_norms = Vec::new();
    let mut velocity = vec![[0.0; 3]; n_nodes];
    let mut converged = false;

    let single_sweep = spec.drag.is_pressure_independent();
    let max_iters = if single_sweep { 1 } else { spec.max_iters };

    for _ in 0..max_iters {
        let sys = assemble(assembler, &p_nodes)?;
        let x = solve_linear(&sys, &config.linear, &mut symbolic)?;
        let (v, p_new) = dofs.expand(&x);
        velocity = v;
        if single_sweep {
            // the assembled operator never changes, so the solve is exact
            p_nodes = p_new;
            diff_norms.push(0.0);
            converged = true;
            break;
        }
        let diff = norm_diff(&p_new, &p_nodes);
        p_nodes = p_new;
        diff_norms.push(diff);
        if diff <= spec.eps_tol {
            converged = true;
            break;
        }
    }

    Ok(Solution {
        velocity,
        pressure: p_nodes,
        report: PicardReport {
            iterations_used: diff_norms.len(),
            diff_norms,
            converged,
        },
    })
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    math::sqrt(s)
}

fn solve_linear(
    sys: &LinearSystem,
    kind: &LinearSolverKind,
    symbolic: &mut Option<LdlSymbolic>,
) -> Result<Vec<f64>> {
    match kind {
        LinearSolverKind::Direct => {
            let sym = symbolic
                .get_or_insert_with(|| LdlSymbolic::analyze(sys.matrix.pattern()));
            let factor = sym.factor(&sys.matrix)?;
            let mut x = sys.rhs.clone();
            factor.solve_in_place(&mut x);

            // cheap backward check; a pivot that degraded silently shows up
            // here as a residual far above roundoff
            let mut ax = vec![0.0; x.len()];
            sys.matrix.mul_vec(&x, &mut ax);
            let r: f64 = math::sqrt(
                ax.iter()
                    .zip(&sys.rhs)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum(),
            );
            let amax = sys
                .matrix
                .values()
                .iter()
                .fold(0.0_f64, |m, &v| m.max(math::abs(v)));
            let scale = norm(&sys.rhs) + amax * norm(&x);
            if r > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::LinearSolveFailure {
                    n_dofs: x.len(),
                    residual: r / scale,
                    tolerance: 1e-9,
                });
            }
            Ok(x)
        }
        LinearSolverKind::Minres { tol, max_iters } => {
            minres(&sys.matrix, &sys.rhs, *tol, *max_iters).map(|(x, _)| x)
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|&x| x * x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drag::{DragLaw, DragModel};
    use crate::element::ElementKind;
    use crate::mesh::generate_grid_2d;
    use crate::problem::{BcValue, PressurePin, VelocityBc, VelocityBcKind};

    fn channel(n: usize, beta: f64) -> ProblemSpec {
        let mesh = generate_grid_2d(n, n, ElementKind::Quad4, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let drag = DragModel::uniform(DragLaw::Barus, 1.0, beta, 1.0).unwrap();
        let mut spec = ProblemSpec::with_defaults(mesh, drag);
        for (set, comp, val) in [
            ("left", 0, 1.0),
            ("right", 0, 1.0),
            ("bottom", 1, 0.0),
            ("top", 1, 0.0),
        ] {
            spec.bcs.velocity.push(VelocityBc {
                set: set.into(),
                kind: VelocityBcKind::Component(comp),
                value: BcValue::Constant(val),
            });
        }
        let corner = spec.mesh.node_near([1.0, 1.0, 0.0], 1e-12).unwrap();
        spec.bcs.pins.push(PressurePin {
            node: corner,
            value: 1.0,
        });
        spec
    }

    #[test]
    fn pressure_independent_drag_solves_in_one_sweep() {
        let spec = channel(4, 0.0);
        let sol = solve(&spec).unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.report.iterations_used, 1);
        assert_eq!(sol.report.diff_norms, alloc::vec![0.0]);

        // alpha0 = 1, beta = 0: p = p0 + (1 - x), v = (1, 0); linear fields
        // are reproduced exactly by the discretization
        for node in 0..spec.mesh.node_count() {
            let x = spec.mesh.coord(node);
            assert!((sol.pressure[node] - (2.0 - x[0])).abs() <= 1e-10);
            assert!((sol.velocity[node][0] - 1.0).abs() <= 1e-10);
            assert!(sol.velocity[node][1].abs() <= 1e-10);
        }
    }

    #[test]
    fn drag_feedback_iterates_and_contracts() {
        let spec = channel(6, 0.3);
        let sol = solve(&spec).unwrap();
        assert!(sol.report.converged);
        assert!(sol.report.iterations_used > 1);
        let d = &sol.report.diff_norms;
        for k in 1..d.len() {
            assert!(d[k] < d[k - 1], "diff norms must contract: {d:?}");
        }
        assert!(*d.last().unwrap() <= spec.eps_tol);
    }

    #[test]
    fn warm_start_from_the_fixed_point_converges_immediately() {
        let spec = channel(5, 0.2);
        let cold = solve(&spec).unwrap();
        let config = SolverConfig {
            initial_guess: InitialGuess::Pressure(cold.pressure.clone()),
            ..SolverConfig::default()
        };
        let warm = solve_with(&spec, &config).unwrap();
        assert!(warm.report.converged);
        assert_eq!(warm.report.iterations_used, 1);
    }

    #[test]
    fn iteration_budget_exhaustion_is_reported_not_raised() {
        let mut spec = channel(5, 0.4);
        spec.max_iters = 2;
        let sol = solve(&spec).unwrap();
        assert!(!sol.report.converged);
        assert_eq!(sol.report.iterations_used, 2);
    }

    #[test]
    fn minres_and_direct_agree() {
        let spec = channel(4, 0.25);
        let direct = solve(&spec).unwrap();
        let config = SolverConfig {
            linear: LinearSolverKind::Minres {
                tol: 1e-13,
                max_iters: 10_000,
            },
            ..SolverConfig::default()
        };
        let iterative = solve_with(&spec, &config).unwrap();
        for node in 0..spec.mesh.node_count() {
            assert!((direct.pressure[node] - iterative.pressure[node]).abs() <= 1e-8);
        }
    }

    #[test]
    fn bad_warm_start_length_is_rejected() {
        let spec = channel(3, 0.1);
        let config = SolverConfig {
            initial_guess: InitialGuess::Pressure(alloc::vec![0.0; 3]),
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_with(&spec, &config),
            Err(Error::InvalidArgument(_))
        ));
    }
}
