//! Problem definition: mesh + drag model + boundary data + sources.
//!
//! Velocity conditions are imposed strongly on nodal components, so each
//! velocity facet must determine its normal component (normal-flux data on
//! axis-aligned facets, or enough component values to span the normal).
//! Pressure surface conditions are natural and enter assembly through the
//! boundary term; they never eliminate a pressure unknown. A pressure pin
//! fixes a single nodal value and exists to remove the constant mode of
//! all-velocity problems.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::drag::DragModel;
use crate::element::facet_quadrature;
use crate::error::{invalid, Error};
use crate::math;
use crate::mesh::Mesh;
use crate::Result;

pub type ScalarField = fn([f64; 3]) -> f64;
pub type VectorField = fn([f64; 3]) -> [f64; 3];

/// Boundary datum: either a constant or a coordinate function.
#[derive(Debug, Clone, Copy)]
pub enum BcValue {
    Constant(f64),
    Field(ScalarField),
}

impl BcValue {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            BcValue::Constant(c) => *c,
            BcValue::Field(f) => f(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityBcKind {
    /// Prescribes `v . n`; the facets must be axis-aligned so the condition
    /// maps onto a single nodal component.
    NormalFlux,
    /// Prescribes one velocity component by index, whatever the facet
    /// orientation.
    Component(usize),
}

#[derive(Debug, Clone)]
pub struct VelocityBc {
    pub set: String,
    pub kind: VelocityBcKind,
    pub value: BcValue,
}

#[derive(Debug, Clone)]
pub struct PressureBc {
    pub set: String,
    pub value: BcValue,
}

/// Strong constraint on one nodal pressure.
#[derive(Debug, Clone, Copy)]
pub struct PressurePin {
    pub node: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryConditions {
    pub velocity: Vec<VelocityBc>,
    pub pressure: Vec<PressureBc>,
    pub pins: Vec<PressurePin>,
}

/// Point injection (`strength > 0`) or production (`strength < 0`) located
/// at a mesh node.
#[derive(Debug, Clone, Copy)]
pub struct PointSource {
    pub position: [f64; 3],
    pub strength: f64,
}

/// Tolerance for matching a point source to a node and for the net-flux
/// balance of all-velocity problems.
pub const FLUX_BALANCE_TOL: f64 = 1e-10;
pub const SOURCE_MATCH_TOL: f64 = 1e-10;
pub const DEFAULT_QUADRATURE_DEGREE: usize = 2;

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub mesh: Mesh,
    pub drag: DragModel,
    /// Body-force group C multiplying `density * body_force`.
    pub coeff_c: f64,
    pub density: f64,
    pub body_force: Option<VectorField>,
    pub bcs: BoundaryConditions,
    pub sources: Vec<PointSource>,
    pub quadrature_degree: Option<usize>,
    pub eps_tol: f64,
    pub max_iters: usize,
    /// Named facet groups for flux reporting. Facets may be interior; flux
    /// is measured outward from the owning element.
    pub openings: BTreeMap<String, Vec<(usize, usize)>>,
}

/// Digested boundary data shared by validation and assembly.
#[derive(Debug, Clone)]
pub(crate) struct BoundaryAnalysis {
    /// Strong velocity values keyed by `(node, component)`.
    pub velocity_values: BTreeMap<(usize, usize), f64>,
    /// Facets carrying a natural pressure condition, with the condition's
    /// index into `bcs.pressure`.
    pub pressure_facets: Vec<(usize, usize, usize)>,
    /// Net prescribed outflow through the velocity boundary.
    pub boundary_outflux: f64,
    pub has_pressure_surface: bool,
}

impl ProblemSpec {
    pub fn with_defaults(mesh: Mesh, drag: DragModel) -> Self {
        ProblemSpec {
            mesh,
            drag,
            coeff_c: 0.0,
            density: 1.0,
            body_force: None,
            bcs: BoundaryConditions::default(),
            sources: Vec::new(),
            quadrature_degree: None,
            eps_tol: 1e-10,
            max_iters: 50,
            openings: BTreeMap::new(),
        }
    }

    pub fn quad_degree(&self) -> usize {
        self.quadrature_degree.unwrap_or(DEFAULT_QUADRATURE_DEGREE)
    }

    /// Full consistency check; run once before assembly.
    pub fn validate(&self) -> Result<()> {
        self.mesh.check_geometry()?;
        if !(self.eps_tol > 0.0) {
            return Err(invalid("convergence tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("iteration limit must be at least 1"));
        }
        if !self.coeff_c.is_finite() || !self.density.is_finite() {
            return Err(invalid("body-force coefficients must be finite"));
        }
        if let Some(d) = self.quadrature_degree {
            if !(1..=5).contains(&d) {
                return Err(invalid("quadrature degree must be in 1..=5"));
            }
        }
        let mut tags: BTreeSet<u32> = BTreeSet::new();
        for e in 0..self.mesh.element_count() {
            tags.insert(self.mesh.region_of(e));
        }
        for tag in tags {
            self.drag.alpha0_of(tag)?;
        }
        for (name, facets) in &self.openings {
            for &(e, lf) in facets {
                if e >= self.mesh.element_count()
                    || lf >= self.mesh.kind_of(e).n_facets()
                {
                    return Err(invalid(format!(
                        "opening '{name}' references facet ({e}, {lf}) outside the mesh"
                    )));
                }
            }
        }
        let analysis = self.analyze_boundary()?;
        let pins = self.effective_pins()?;
        let sources = self.source_nodes()?;
        let pinned: BTreeSet<usize> = pins.iter().map(|&(n, _)| n).collect();
        for &(node, _) in &sources {
            if pinned.contains(&node) {
                return Err(Error::SourcePlacement(format!(
                    "source at node {node} coincides with a pinned pressure"
                )));
            }
        }
        if !analysis.has_pressure_surface {
            let total: f64 = sources.iter().map(|&(_, s)| s).sum();
            let imbalance = total - analysis.boundary_outflux;
            if math::abs(imbalance) > FLUX_BALANCE_TOL {
                return Err(Error::IncompatibleFlux { imbalance });
            }
        }
        Ok(())
    }

    /// Strong velocity constraints `(node, component) -> value`.
    pub fn strong_velocity_values(&self) -> Result<BTreeMap<(usize, usize), f64>> {
        Ok(self.analyze_boundary()?.velocity_values)
    }

    /// Pressure pins in effect: the explicit list, or the fallback pin of
    /// node 0 when the problem has neither pressure surfaces nor pins.
    pub fn effective_pins(&self) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for pin in &self.bcs.pins {
            if pin.node >= self.mesh.node_count() {
                return Err(invalid(format!("pin references node {}", pin.node)));
            }
            if !pin.value.is_finite() {
                return Err(invalid("pin value must be finite"));
            }
            if !seen.insert(pin.node) {
                return Err(invalid(format!("node {} pinned twice", pin.node)));
            }
            out.push((pin.node, pin.value));
        }
        if out.is_empty() && self.bcs.pressure.is_empty() {
            out.push((0, 0.0));
        }
        Ok(out)
    }

    /// Sources resolved to node indices, strengths summed per node.
    pub fn source_nodes(&self) -> Result<Vec<(usize, f64)>> {
        let mut by_node: BTreeMap<usize, f64> = BTreeMap::new();
        for s in &self.sources {
            if !s.strength.is_finite() {
                return Err(invalid("source strength must be finite"));
            }
            let node = self.mesh.node_near(s.position, SOURCE_MATCH_TOL).ok_or_else(|| {
                Error::SourcePlacement(format!(
                    "no node within {SOURCE_MATCH_TOL:.0e} of source at ({}, {}, {})",
                    s.position[0], s.position[1], s.position[2]
                ))
            })?;
            *by_node.entry(node).or_insert(0.0) += s.strength;
        }
        Ok(by_node.into_iter().collect())
    }

    pub(crate) fn analyze_boundary(&self) -> Result<BoundaryAnalysis> {
        let mesh = &self.mesh;
        let dim = mesh.dim();
        let boundary: BTreeSet<(usize, usize)> =
            mesh.boundary_facets().into_iter().collect();

        // (facet -> which components are strongly constrained) and the facet
        // normal, kept to judge coverage afterwards.
        let mut constrained: BTreeMap<(usize, usize), [bool; 3]> = BTreeMap::new();
        let mut normals: BTreeMap<(usize, usize), [f64; 3]> = BTreeMap::new();
        let mut velocity_values: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut outflux = 0.0;

        let mut constrain = |node: usize, comp: usize, value: f64| -> Result<()> {
            match velocity_values.get(&(node, comp)) {
                Some(&old) if math::abs(old - value) > 1e-10 * (1.0 + math::abs(old)) => {
                    Err(invalid(format!(
                        "conflicting velocity values {old} and {value} \
                         for component {comp} of node {node}"
                    )))
                }
                _ => {
                    velocity_values.insert((node, comp), value);
                    Ok(())
                }
            }
        };

        for bc in &self.bcs.velocity {
            let facets = mesh
                .facet_set(&bc.set)
                .ok_or_else(|| invalid(format!("unknown facet set '{}'", bc.set)))?;
            if let VelocityBcKind::Component(d) = bc.kind {
                if d >= dim {
                    return Err(invalid(format!(
                        "component {d} out of range for a {dim}D mesh"
                    )));
                }
            }
            for &(e, lf) in facets {
                if !boundary.contains(&(e, lf)) {
                    return Err(invalid(format!(
                        "velocity set '{}' contains interior facet ({e}, {lf})",
                        bc.set
                    )));
                }
                let kind = mesh.kind_of(e);
                let mut coords = vec![[0.0; 3]; kind.n_nodes()];
                mesh.element_coords(e, &mut coords);
                let pts = facet_quadrature(kind, &coords, lf, self.quad_degree(), e)?;
                let n0 = facet_normal(&pts, e, lf)?;
                normals.insert((e, lf), n0);
                let fnodes = mesh.facet_global_nodes(e, lf);
                let flags = constrained.entry((e, lf)).or_insert([false; 3]);
                match bc.kind {
                    VelocityBcKind::NormalFlux => {
                        let (axis, sign) = axis_of(n0, dim).ok_or_else(|| {
                            Error::UnsupportedGeometry(format!(
                                "normal-flux condition on facet ({e}, {lf}) of set '{}' \
                                 with non-axis-aligned normal ({}, {}, {})",
                                bc.set, n0[0], n0[1], n0[2]
                            ))
                        })?;
                        flags[axis] = true;
                        for &node in &fnodes {
                            let v = bc.value.eval(mesh.coord(node));
                            constrain(node, axis, sign * v)?;
                        }
                        for p in &pts {
                            outflux += p.weight * bc.value.eval(p.x);
                        }
                    }
                    VelocityBcKind::Component(d) => {
                        flags[d] = true;
                        for &node in &fnodes {
                            constrain(node, d, bc.value.eval(mesh.coord(node)))?;
                        }
                        for p in &pts {
                            outflux += p.weight * p.normal[d] * bc.value.eval(p.x);
                        }
                    }
                }
            }
        }

        let mut pressure_facets = Vec::new();
        let mut pressure_marked: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (i, bc) in self.bcs.pressure.iter().enumerate() {
            let facets = mesh
                .facet_set(&bc.set)
                .ok_or_else(|| invalid(format!("unknown facet set '{}'", bc.set)))?;
            for &(e, lf) in facets {
                if !boundary.contains(&(e, lf)) {
                    return Err(invalid(format!(
                        "pressure set '{}' contains interior facet ({e}, {lf})",
                        bc.set
                    )));
                }
                if constrained.contains_key(&(e, lf)) {
                    return Err(invalid(format!(
                        "facet ({e}, {lf}) carries both velocity and pressure conditions"
                    )));
                }
                if !pressure_marked.insert((e, lf)) {
                    return Err(invalid(format!(
                        "facet ({e}, {lf}) appears in two pressure conditions"
                    )));
                }
                pressure_facets.push((e, lf, i));
            }
        }

        for &(e, lf) in &boundary {
            if pressure_marked.contains(&(e, lf)) {
                continue;
            }
            let Some(flags) = constrained.get(&(e, lf)) else {
                return Err(invalid(format!(
                    "boundary facet ({e}, {lf}) is covered by no boundary condition"
                )));
            };
            let n = normals[&(e, lf)];
            for d in 0..dim {
                if math::abs(n[d]) > 1e-9 && !flags[d] {
                    return Err(invalid(format!(
                        "boundary facet ({e}, {lf}) leaves its normal velocity \
                         unconstrained (normal component {d} is free)"
                    )));
                }
            }
        }

        Ok(BoundaryAnalysis {
            velocity_values,
            pressure_facets,
            boundary_outflux: outflux,
            has_pressure_surface: !self.bcs.pressure.is_empty(),
        })
    }
}

fn axis_of(normal: [f64; 3], dim: usize) -> Option<(usize, f64)> {
    (0..dim).find_map(|d| {
        (math::abs(normal[d]) >= 1.0 - 1e-9)
            .then(|| (d, if normal[d] > 0.0 { 1.0 } else { -1.0 }))
    })
}

/// Facet normal, required constant across the facet's quadrature points.
fn facet_normal(
    pts: &[crate::element::FacetPoint],
    element: usize,
    facet: usize,
) -> Result<[f64; 3]> {
    let n0 = pts[0].normal;
    for p in pts {
        for d in 0..3 {
            if math::abs(p.normal[d] - n0[d]) > 1e-9 {
                return Err(Error::UnsupportedGeometry(format!(
                    "facet ({element}, {facet}) is curved; boundary conditions \
                     need planar facets"
                )));
            }
        }
    }
    Ok(n0)
}
