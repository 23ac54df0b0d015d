//! Global assembly of the linearized systems.
//!
//! Unknowns are nodal, interleaved per node as `[v_x, .., v_{dim-1}, p]` and
//! numbered along a reverse Cuthill-McKee node order; keeping each node's
//! pressure right behind its velocities preserves the sign pattern the
//! pivot-free factorization relies on. Strongly constrained components
//! (velocity values and pressure pins) are eliminated: their columns move to
//! the right-hand side, their rows are dropped.
//!
//! Element contributions at a pressure iterate `p~`:
//!
//! ```text
//! vv[a i, b i] = 1/2 (N_a, A a(p~) N_b)
//! vp[a i, b]   = -(dN_a/dx_i, N_b) - 1/2 (N_a, dN_b/dx_i)   pv = vp^T
//! pp[a, b]     = -1/2 (grad N_a, grad N_b / (A a(p~)))
//! fv[a i]      = 1/2 (N_a, C r b_i)
//! fp[a]        = -1/2 (grad N_a, C r b / (A a(p~)))
//! ```
//!
//! `pv` is written by mirroring `vp`, so the assembled matrix is symmetric
//! bit for bit at every iterate. Natural pressure conditions add
//! `-(w . n, p0)` over their facets; a point source of strength `s` adds
//! `-s` to its node's continuity row.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::element::{
    facet_quadrature, map_gradients, ElementBasis, ElementKind, QuadratureRule,
};
use crate::error::invalid;
use crate::mesh::Mesh;
use crate::problem::{BoundaryAnalysis, ProblemSpec};
use crate::sparse::{reverse_cuthill_mckee, CsrMatrix, SparsityPattern};
use crate::Result;

const NONE: usize = usize::MAX;

/// Map from nodal components to equation numbers, with values for the
/// eliminated components.
#[derive(Debug, Clone)]
pub struct DofMap {
    dim: usize,
    fields: usize,
    eq: Vec<usize>,
    value: Vec<f64>,
    n_free: usize,
}

impl DofMap {
    pub fn build(
        mesh: &Mesh,
        velocity_values: &BTreeMap<(usize, usize), f64>,
        pins: &[(usize, f64)],
    ) -> DofMap {
        let dim = mesh.dim();
        let fields = dim + 1;
        let n = mesh.node_count();
        let mut constrained = vec![false; n * fields];
        let mut value = vec![0.0; n * fields];
        for (&(node, comp), &v) in velocity_values {
            constrained[node * fields + comp] = true;
            value[node * fields + comp] = v;
        }
        for &(node, v) in pins {
            constrained[node * fields + dim] = true;
            value[node * fields + dim] = v;
        }
        let order = reverse_cuthill_mckee(&node_adjacency(mesh));
        let mut eq = vec![NONE; n * fields];
        let mut next = 0;
        for &node in &order {
            for f in 0..fields {
                let i = node * fields + f;
                if !constrained[i] {
                    eq[i] = next;
                    next += 1;
                }
            }
        }
        DofMap {
            dim,
            fields,
            eq,
            value,
            n_free: next,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn node_count(&self) -> usize {
        self.eq.len() / self.fields
    }

    /// Equation number of field `f` at a node; `f == dim` is the pressure.
    pub fn eq_of(&self, node: usize, field: usize) -> Option<usize> {
        let i = self.eq[node * self.fields + field];
        (i != NONE).then_some(i)
    }

    pub fn velocity_eq(&self, node: usize, comp: usize) -> Option<usize> {
        self.eq_of(node, comp)
    }

    pub fn pressure_eq(&self, node: usize) -> Option<usize> {
        self.eq_of(node, self.dim)
    }

    /// Value of an eliminated component; zero for free ones.
    pub fn constrained_value(&self, node: usize, field: usize) -> f64 {
        self.value[node * self.fields + field]
    }

    /// Scatter a free-dof vector into full nodal velocity and pressure
    /// arrays, filling in the eliminated values.
    pub fn expand(&self, x: &[f64]) -> (Vec<[f64; 3]>, Vec<f64>) {
        debug_assert_eq!(x.len(), self.n_free);
        let n = self.node_count();
        let mut velocity = vec![[0.0; 3]; n];
        let mut pressure = vec![0.0; n];
        for node in 0..n {
            for comp in 0..self.dim {
                velocity[node][comp] = match self.eq_of(node, comp) {
                    Some(i) => x[i],
                    None => self.constrained_value(node, comp),
                };
            }
            pressure[node] = match self.pressure_eq(node) {
                Some(i) => x[i],
                None => self.constrained_value(node, self.dim),
            };
        }
        (velocity, pressure)
    }
}

/// Node graph of the mesh: sorted neighbour lists without self-loops.
pub(crate) fn node_adjacency(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.node_count()];
    for e in 0..mesh.element_count() {
        let conn = mesh.nodes_of(e);
        for &a in conn {
            for &b in conn {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
    }
    adj
}

/// One element's contribution, dense over its `n_nodes * (dim + 1)` local
/// unknowns in node-major order.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub element: usize,
    pub n: usize,
    /// Row-major `n x n`.
    pub k: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

pub struct Assembler<'a> {
    spec: &'a ProblemSpec,
    analysis: BoundaryAnalysis,
    dofs: Arc<DofMap>,
    pattern: Arc<SparsityPattern>,
    bases: BTreeMap<ElementKind, (QuadratureRule, ElementBasis)>,
    sources: Vec<(usize, f64)>,
}

impl<'a> Assembler<'a> {
    /// Validates the problem and prepares the dof numbering, the sparsity
    /// pattern and tabulated bases. The returned assembler borrows `spec`
    /// and is safe to share across threads.
    pub fn new(spec: &'a ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let mesh = &spec.mesh;
        let analysis = spec.analyze_boundary()?;
        let pins = spec.effective_pins()?;
        let sources = spec.source_nodes()?;
        let dofs = Arc::new(DofMap::build(mesh, &analysis.velocity_values, &pins));

        let mut bases = BTreeMap::new();
        for e in 0..mesh.element_count() {
            let kind = mesh.kind_of(e);
            if !bases.contains_key(&kind) {
                let rule = QuadratureRule::for_kind(kind, spec.quad_degree())?;
                let basis = ElementBasis::tabulate(kind, &rule);
                bases.insert(kind, (rule, basis));
            }
        }

        let adj = node_adjacency(mesh);
        let fields = mesh.dim() + 1;
        let mut rows = vec![Vec::new(); dofs.n_free()];
        for node in 0..mesh.node_count() {
            for f in 0..fields {
                let Some(i) = dofs.eq_of(node, f) else { continue };
                let row = &mut rows[i];
                for &m in core::iter::once(&node).chain(&adj[node]) {
                    for g in 0..fields {
                        if let Some(j) = dofs.eq_of(m, g) {
                            row.push(j);
                        }
                    }
                }
            }
        }
        let pattern = Arc::new(SparsityPattern::from_rows(rows));

        Ok(Assembler {
            spec,
            analysis,
            dofs,
            pattern,
            bases,
            sources,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_free()
    }

    pub fn dof_map(&self) -> Arc<DofMap> {
        Arc::clone(&self.dofs)
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    /// Element matrix and load at the nodal pressure iterate `p_nodes`
    /// (full-length nodal array, constrained values included).
    pub fn local_system(&self, element: usize, p_nodes: &[f64]) -> Result<LocalSystem> {
        let mesh = &self.spec.mesh;
        let kind = mesh.kind_of(element);
        let dim = mesh.dim();
        let fields = dim + 1;
        let nn = kind.n_nodes();
        let nl = nn * fields;
        let conn = mesh.nodes_of(element);
        let tag = mesh.region_of(element);
        let (rule, basis) = &self.bases[&kind];
        let mut coords = [[0.0; 3]; crate::element::MAX_ELEM_NODES];
        mesh.element_coords(element, &mut coords[..nn]);

        let mut k = vec![0.0; nl * nl];
        let mut f = vec![0.0; nl];
        let scale_b = self.spec.coeff_c * self.spec.density;
        for q in 0..rule.len() {
            let nv = &basis.values[q];
            let (grads, det) = map_gradients(kind, &coords, &basis.ref_grads[q], element)?;
            let w = rule.weights[q] * det;

            let mut x = [0.0; 3];
            let mut pq = 0.0;
            for a in 0..nn {
                for d in 0..3 {
                    x[d] += nv[a] * coords[a][d];
                }
                pq += nv[a] * p_nodes[conn[a]];
            }
            let aa = self.spec.drag.coeff_a * self.spec.drag.alpha(tag, pq)?;
            let aa_inv = 1.0 / aa;
            let mut bf = [0.0; 3];
            if let Some(body) = self.spec.body_force {
                let b = body(x);
                for d in 0..dim {
                    bf[d] = scale_b * b[d];
                }
            }

            for a in 0..nn {
                let ra = a * fields;
                for b in 0..nn {
                    let rb = b * fields;
                    // parenthesized so the product rounds identically for
                    // (a, b) and (b, a); asymmetry() == 0.0 relies on it
                    let mass = w * (nv[a] * nv[b]);
                    let mut stiff = 0.0;
                    for d in 0..dim {
                        stiff += grads[a][d] * grads[b][d];
                    }
                    k[(ra + dim) * nl + rb + dim] -= 0.5 * w * aa_inv * stiff;
                    for i in 0..dim {
                        k[(ra + i) * nl + rb + i] += 0.5 * aa * mass;
                        let c = -w * grads[a][i] * nv[b] - 0.5 * w * nv[a] * grads[b][i];
                        k[(ra + i) * nl + rb + dim] += c;
                        k[(rb + dim) * nl + ra + i] += c;
                    }
                }
                for i in 0..dim {
                    f[ra + i] += 0.5 * w * nv[a] * bf[i];
                }
                let mut gb = 0.0;
                for d in 0..dim {
                    gb += grads[a][d] * bf[d];
                }
                f[ra + dim] -= 0.5 * w * aa_inv * gb;
            }
        }
        Ok(LocalSystem {
            element,
            n: nl,
            k,
            f,
        })
    }

    /// Assembles matrix and right-hand side at the iterate.
    pub fn assemble(&self, p_nodes: &[f64]) -> Result<LinearSystem> {
        let mut sys = self.empty_system();
        for e in 0..self.spec.mesh.element_count() {
            let local = self.local_system(e, p_nodes)?;
            self.scatter(&local, &mut sys);
        }
        self.add_boundary_and_sources(&mut sys)?;
        Ok(sys)
    }

    /// Same result as [`Assembler::assemble`] from precomputed element
    /// systems, which may have been produced on worker threads. They must
    /// arrive complete and in element order so the scatter stays
    /// deterministic.
    pub fn assemble_from_locals(&self, locals: &[LocalSystem]) -> Result<LinearSystem> {
        if locals.len() != self.spec.mesh.element_count() {
            return Err(invalid("local system count != element count"));
        }
        let mut sys = self.empty_system();
        for (e, local) in locals.iter().enumerate() {
            if local.element != e {
                return Err(invalid("local systems must be ordered by element"));
            }
            self.scatter(local, &mut sys);
        }
        self.add_boundary_and_sources(&mut sys)?;
        Ok(sys)
    }

    fn empty_system(&self) -> LinearSystem {
        LinearSystem {
            matrix: CsrMatrix::zeros(Arc::clone(&self.pattern)),
            rhs: vec![0.0; self.dofs.n_free()],
        }
    }

    fn scatter(&self, local: &LocalSystem, sys: &mut LinearSystem) {
        let conn = self.spec.mesh.nodes_of(local.element);
        let fields = self.dofs.fields;
        for la in 0..local.n {
            let (a, fa) = (la / fields, la % fields);
            let Some(i) = self.dofs.eq_of(conn[a], fa) else {
                continue;
            };
            sys.rhs[i] += local.f[la];
            for lb in 0..local.n {
                let (b, fb) = (lb / fields, lb % fields);
                let kab = local.k[la * local.n + lb];
                if kab == 0.0 {
                    continue;
                }
                match self.dofs.eq_of(conn[b], fb) {
                    Some(j) => sys.matrix.add(i, j, kab),
                    None => sys.rhs[i] -= kab * self.dofs.constrained_value(conn[b], fb),
                }
            }
        }
    }

    fn add_boundary_and_sources(&self, sys: &mut LinearSystem) -> Result<()> {
        let mesh = &self.spec.mesh;
        let dim = mesh.dim();
        for &(e, lf, bci) in &self.analysis.pressure_facets {
            let value = self.spec.bcs.pressure[bci].value;
            let kind = mesh.kind_of(e);
            let mut coords = [[0.0; 3]; crate::element::MAX_ELEM_NODES];
            mesh.element_coords(e, &mut coords[..kind.n_nodes()]);
            let pts = facet_quadrature(kind, &coords, lf, self.spec.quad_degree(), e)?;
            let fnodes = kind.facet_nodes(lf);
            let conn = mesh.nodes_of(e);
            for p in &pts {
                let p0 = value.eval(p.x);
                for (l, &a) in fnodes.iter().enumerate() {
                    for i in 0..dim {
                        if let Some(row) = self.dofs.velocity_eq(conn[a], i) {
                            sys.rhs[row] -= p.weight * p.shape[l] * p.normal[i] * p0;
                        }
                    }
                }
            }
        }
        for &(node, s) in &self.sources {
            match self.dofs.pressure_eq(node) {
                Some(row) => sys.rhs[row] -= s,
                None => {
                    return Err(crate::error::Error::SourcePlacement(alloc::format!(
                        "source node {node} has no free pressure unknown"
                    )))
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drag::{DragLaw, DragModel};
    use crate::mesh::{generate_grid_2d, generate_grid_3d, generate_interval};
    use crate::problem::{BcValue, PressureBc, PressurePin, VelocityBc, VelocityBcKind};

    fn one_d_spec(n: usize, beta: f64) -> ProblemSpec {
        let mesh = generate_interval(n).unwrap();
        let drag = DragModel::uniform(DragLaw::Barus, 1.0, beta, 1.0).unwrap();
        let mut spec = ProblemSpec::with_defaults(mesh, drag);
        spec.bcs.pressure.push(PressureBc {
            set: "left".into(),
            value: BcValue::Constant(200.0),
        });
        spec.bcs.pressure.push(PressureBc {
            set: "right".into(),
            value: BcValue::Constant(1.0),
        });
        spec
    }

    fn channel_spec(n: usize, beta: f64) -> ProblemSpec {
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
        // corner (1, 1) carries the analytic outlet pressure
        let corner = spec.mesh.node_near([1.0, 1.0, 0.0], 1e-12).unwrap();
        spec.bcs.pins.push(PressurePin {
            node: corner,
            value: 1.0,
        });
        spec
    }

    #[test]
    fn free_dof_counts() {
        let spec = one_d_spec(4, 0.02);
        let asm = Assembler::new(&spec).unwrap();
        // 5 nodes x (v_x, p), nothing eliminated: pressure ends are natural
        assert_eq!(asm.n_dofs(), 10);

        let spec = channel_spec(2, 0.1);
        let asm = Assembler::new(&spec).unwrap();
        // 9 nodes x 3 fields, minus 6 v_x, 6 v_y and one pin
        assert_eq!(asm.n_dofs(), 27 - 13);
    }

    #[test]
    fn single_line_element_matches_hand_integrals() {
        let spec = one_d_spec(1, 0.0);
        let asm = Assembler::new(&spec).unwrap();
        let local = asm.local_system(0, &[0.0, 0.0]).unwrap();
        assert_eq!(local.n, 4);
        // fields per node: [v, p]; exact integrals on [0, 1] with alpha = 1:
        // vv = 1/2 [[1/3, 1/6], [1/6, 1/3]]
        // vp[a][b] = -int N_a' N_b - 1/2 int N_a N_b'
        // pp = -1/2 [[1, -1], [-1, 1]]
        let k = |r: usize, c: usize| local.k[r * 4 + c];
        let vv = [[1.0 / 6.0, 1.0 / 12.0], [1.0 / 12.0, 1.0 / 6.0]];
        let vp = [[0.75, 0.25], [-0.25, -0.75]];
        let pp = [[-0.5, 0.5], [0.5, -0.5]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((k(2 * a, 2 * b) - vv[a][b]).abs() <= 1e-15);
                assert!((k(2 * a, 2 * b + 1) - vp[a][b]).abs() <= 1e-15);
                assert!((k(2 * a + 1, 2 * b) - vp[b][a]).abs() <= 1e-15);
                assert!((k(2 * a + 1, 2 * b + 1) - pp[a][b]).abs() <= 1e-15);
            }
        }
        assert!(local.f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn assembled_matrix_is_symmetric_at_any_iterate() {
        let spec = channel_spec(3, 0.3);
        let asm = Assembler::new(&spec).unwrap();
        let p: Vec<f64> = (0..spec.mesh.node_count())
            .map(|n| {
                let x = spec.mesh.coord(n);
                x[0] + 2.0 * x[1]
            })
            .collect();
        let sys = asm.assemble(&p).unwrap();
        assert_eq!(sys.matrix.asymmetry(), 0.0);
    }

    #[test]
    fn pressure_boundary_terms_carry_the_outward_normal() {
        let spec = one_d_spec(4, 0.02);
        let asm = Assembler::new(&spec).unwrap();
        let sys = asm.assemble(&vec![0.0; 5]).unwrap();
        let dofs = asm.dof_map();
        let left = dofs.velocity_eq(0, 0).unwrap();
        let right = dofs.velocity_eq(4, 0).unwrap();
        assert!((sys.rhs[left] - 200.0).abs() <= 1e-12);
        assert!((sys.rhs[right] + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sources_land_on_continuity_rows() {
        let mesh = generate_grid_2d(2, 2, ElementKind::Quad4, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let drag = DragModel::uniform(DragLaw::Barus, 1.0, 0.0, 1.0).unwrap();
        let mut spec = ProblemSpec::with_defaults(mesh, drag);
        for set in ["left", "right", "bottom", "top"] {
            spec.bcs.velocity.push(VelocityBc {
                set: set.into(),
                kind: VelocityBcKind::NormalFlux,
                value: BcValue::Constant(0.0),
            });
        }
        spec.bcs.pins.push(PressurePin { node: 4, value: 0.0 });
        spec.sources.push(crate::problem::PointSource {
            position: [0.0, 0.0, 0.0],
            strength: 0.3,
        });
        spec.sources.push(crate::problem::PointSource {
            position: [1.0, 1.0, 0.0],
            strength: -0.3,
        });
        let asm = Assembler::new(&spec).unwrap();
        let sys = asm.assemble(&vec![0.0; 9]).unwrap();
        let dofs = asm.dof_map();
        assert_eq!(sys.rhs[dofs.pressure_eq(0).unwrap()], -0.3);
        assert_eq!(sys.rhs[dofs.pressure_eq(8).unwrap()], 0.3);
    }

    #[test]
    fn prebuilt_locals_reproduce_the_serial_assembly() {
        let spec = channel_spec(3, 0.2);
        let asm = Assembler::new(&spec).unwrap();
        let p: Vec<f64> = (0..spec.mesh.node_count()).map(|n| 0.1 * n as f64).collect();
        let serial = asm.assemble(&p).unwrap();
        let locals: Vec<LocalSystem> = (0..spec.mesh.element_count())
            .map(|e| asm.local_system(e, &p).unwrap())
            .collect();
        let gathered = asm.assemble_from_locals(&locals).unwrap();
        assert_eq!(serial.matrix.values(), gathered.matrix.values());
        assert_eq!(serial.rhs, gathered.rhs);
    }

    /// Constant-velocity, linear-pressure fields satisfy the discrete
    /// equations exactly, so the exact solution's residual is roundoff.
    #[test]
    fn linear_patch_residual_vanishes() {
        let exact_p = |x: [f64; 3]| 1.0 - x[0];
        for kind in [ElementKind::Quad4, ElementKind::Tri3] {
            let mesh = generate_grid_2d(3, 3, kind, [0.0, 0.0], [1.0, 1.0]).unwrap();
            let drag = DragModel::uniform(DragLaw::Barus, 2.0, 0.0, 1.0).unwrap();
            let mut spec = ProblemSpec::with_defaults(mesh, drag);
            for (set, val) in [("left", -0.5), ("right", 0.5), ("bottom", 0.0), ("top", 0.0)] {
                spec.bcs.velocity.push(VelocityBc {
                    set: set.into(),
                    kind: VelocityBcKind::NormalFlux,
                    value: BcValue::Constant(val),
                });
            }
            spec.bcs.pins.push(PressurePin { node: 0, value: 1.0 });
            assert!((residual_at_exact(&spec, [0.5, 0.0, 0.0], exact_p)) <= 1e-12);
        }

        let mesh = generate_grid_3d(2, 2, 2, [0.0; 3], [1.0; 3]).unwrap();
        let drag = DragModel::uniform(DragLaw::Barus, 2.0, 0.0, 1.0).unwrap();
        let mut spec = ProblemSpec::with_defaults(mesh, drag);
        for (set, val) in [
            ("xmin", -0.5),
            ("xmax", 0.5),
            ("ymin", 0.0),
            ("ymax", 0.0),
            ("zmin", 0.0),
            ("zmax", 0.0),
        ] {
            spec.bcs.velocity.push(VelocityBc {
                set: set.into(),
                kind: VelocityBcKind::NormalFlux,
                value: BcValue::Constant(val),
            });
        }
        spec.bcs.pins.push(PressurePin { node: 0, value: 1.0 });
        assert!((residual_at_exact(&spec, [0.5, 0.0, 0.0], exact_p)) <= 1e-12);
    }

    fn residual_at_exact(
        spec: &ProblemSpec,
        v_exact: [f64; 3],
        p_exact: impl Fn([f64; 3]) -> f64,
    ) -> f64 {
        let asm = Assembler::new(spec).unwrap();
        let dofs = asm.dof_map();
        let mesh = &spec.mesh;
        let p_nodes: Vec<f64> = (0..mesh.node_count())
            .map(|n| p_exact(mesh.coord(n)))
            .collect();
        let sys = asm.assemble(&p_nodes).unwrap();
        let mut u = vec![0.0; dofs.n_free()];
        for node in 0..mesh.node_count() {
            for comp in 0..mesh.dim() {
                if let Some(i) = dofs.velocity_eq(node, comp) {
                    u[i] = v_exact[comp];
                }
            }
            if let Some(i) = dofs.pressure_eq(node) {
                u[i] = p_nodes[node];
            }
        }
        let mut ku = vec![0.0; u.len()];
        sys.matrix.mul_vec(&u, &mut ku);
        ku.iter()
            .zip(&sys.rhs)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
