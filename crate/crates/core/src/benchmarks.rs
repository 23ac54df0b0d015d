//! Packaged benchmark problems, error norms, convergence studies and flux
//! reporting.
//!
//! The catalog covers: a 1D channel with closed forms for both drag laws, a
//! 2D channel with constant through-flow, the quarter five-spot, the
//! checkerboard variant with a four-region drag map, a manufactured-solution
//! convergence problem, a 3D patch flow, a production well near a
//! permeability interface (annular slab), and a two-aquifer leakage box with
//! an abandoned-well column. The last two run on small built-in meshes whose
//! ASCII form is shipped under `meshes/`; trends, not magnitudes, are the
//! point at this size.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::analytic::{
    analytic_1d, analytic_constant_flow_2d, analytic_patch_3d, manufactured_solution,
    AnalyticSolution,
};
use crate::drag::{DragLaw, DragModel};
use crate::element::{facet_quadrature, map_gradients, ElementBasis, ElementKind, QuadratureRule};
use crate::error::invalid;
use crate::math;
use crate::mesh::{
    generate_grid_2d, generate_grid_3d, generate_interval, Mesh,
};
use crate::picard::Solution;
use crate::problem::{
    BcValue, PointSource, PressureBc, PressurePin, ProblemSpec, VelocityBc,
    VelocityBcKind,
};
use crate::Result;

pub const PROBLEM_NAMES: [&str; 8] = [
    "oneD",
    "constant2d",
    "fivespot",
    "checkerboard",
    "mms",
    "patch3d",
    "regions",
    "leakage-coarse",
];

/// Catalog knobs; `None` keeps a problem's own default.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub law: Option<DragLaw>,
    pub beta: Option<f64>,
    pub alpha0: Option<BTreeMap<u32, f64>>,
    pub eps_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub resolution: Option<usize>,
    /// 2D problems: triangulate instead of quads.
    pub triangles: bool,
    pub quadrature_degree: Option<usize>,
}

pub fn problem_summary(name: &str) -> Option<&'static str> {
    Some(match name {
        "oneD" => "1D channel, end pressures 200/1, closed-form reference",
        "constant2d" => "unit-square channel with unit through-flow",
        "fivespot" => "quarter five-spot, corner sources +1/4 and -1/4",
        "checkerboard" => "five-spot with a four-quadrant drag map 1.0/0.001",
        "mms" => "manufactured solution on the unit square (Barus, beta 0.5)",
        "patch3d" => "uniform flow through the (0,5)^3 cube",
        "regions" => "production well near a permeability interface (annular slab)",
        "leakage-coarse" => "two-aquifer box with leakage up an abandoned-well column",
        _ => return None,
    })
}

fn grid_kind(opts: &BuildOptions) -> ElementKind {
    if opts.triangles {
        ElementKind::Tri3
    } else {
        ElementKind::Quad4
    }
}

pub fn build_problem(name: &str, opts: &BuildOptions) -> Result<ProblemSpec> {
    match name {
        "oneD" => one_d_problem(opts),
        "constant2d" => constant_flow_problem(opts),
        "fivespot" => five_spot_problem(opts, false),
        "checkerboard" => five_spot_problem(opts, true),
        "mms" => manufactured_problem(opts),
        "patch3d" => patch_problem(opts),
        "regions" => regions_problem(opts),
        "leakage-coarse" => leakage_problem(opts),
        _ => Err(invalid(format!(
            "unknown problem '{name}'; known: {}",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}

/// Closed form matching a catalog entry at the given options, for problems
/// that have one.
pub fn analytic_for(name: &str, opts: &BuildOptions) -> Option<AnalyticSolution> {
    match name {
        "oneD" => {
            let law = opts.law.unwrap_or(DragLaw::Barus);
            let beta = opts.beta.unwrap_or(0.02);
            analytic_1d(law, 1.0, beta, 1.0, 200.0, 1.0).ok()
        }
        "constant2d" => analytic_constant_flow_2d(1.0, opts.beta.unwrap_or(0.1), 1.0).ok(),
        "patch3d" => analytic_patch_3d(1.0, opts.beta.unwrap_or(0.1)).ok(),
        "mms" => match opts.beta {
            None => Some(manufactured_solution()),
            // the body force is built around beta = 1/2; any other beta has
            // no closed form
            Some(b) if b == 0.5 => Some(manufactured_solution()),
            Some(_) => None,
        },
        _ => None,
    }
}

fn one_d_problem(opts: &BuildOptions) -> Result<ProblemSpec> {
    let n = opts.resolution.unwrap_or(100);
    let mesh = generate_interval(n)?;
    let law = opts.law.unwrap_or(DragLaw::Barus);
    let beta = opts.beta.unwrap_or(0.02);
    let drag = DragModel::uniform(law, 1.0, beta, 1.0)?;
    let mut spec = ProblemSpec::with_defaults(mesh, drag);
    spec.bcs.pressure.push(PressureBc {
        set: "left".into(),
        value: BcValue::Constant(200.0),
    });
    spec.bcs.pressure.push(PressureBc {
        set: "right".into(),
        value: BcValue::Constant(1.0),
    });
    finish(spec, opts, 1e-10)
}

fn constant_flow_problem(opts: &BuildOptions) -> Result<ProblemSpec> {
    let n = opts.resolution.unwrap_or(20);
    let mesh = generate_grid_2d(n, n, grid_kind(opts), [0.0, 0.0], [1.0, 1.0])?;
    let law = opts.law.unwrap_or(DragLaw::Barus);
    let beta = opts.beta.unwrap_or(0.1);
    let drag = DragModel::uniform(law, 1.0, beta, 1.0)?;
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
    let corner = spec
        .mesh
        .node_near([1.0, 1.0, 0.0], 1e-9)
        .ok_or_else(|| invalid("no node at the outlet corner"))?;
    spec.bcs.pins.push(PressurePin {
        node: corner,
        value: 1.0,
    });
    finish(spec, opts, 1e-10)
}

fn five_spot_problem(opts: &BuildOptions, checkerboard: bool) -> Result<ProblemSpec> {
    let n = opts.resolution.unwrap_or(20);
    if n % 2 != 0 {
        return Err(invalid(
            "five-spot resolution must be even so the center node exists",
        ));
    }
    let mut mesh = generate_grid_2d(n, n, grid_kind(opts), [0.0, 0.0], [1.0, 1.0])?;
    let law = opts.law.unwrap_or(DragLaw::Barus);
    let beta = opts.beta.unwrap_or(0.3);
    let drag = if checkerboard {
        // quadrants counted from the lower-left in reading order; the two
        // on the main diagonal hold the wells and stay permeable
        mesh = mesh.tag_regions(|c| match (c[0] > 0.5, c[1] > 0.5) {
            (false, false) => 1,
            (true, false) => 2,
            (false, true) => 3,
            (true, true) => 4,
        });
        let alpha0 = [(1, 1.0), (2, 0.001), (3, 0.001), (4, 1.0)]
            .into_iter()
            .collect();
        DragModel::per_region(law, alpha0, beta, 1.0)?
    } else {
        DragModel::uniform(law, 1.0, beta, 1.0)?
    };
    let mut spec = ProblemSpec::with_defaults(mesh, drag);
    for set in ["left", "right", "bottom", "top"] {
        spec.bcs.velocity.push(VelocityBc {
            set: set.into(),
            kind: VelocityBcKind::NormalFlux,
            value: BcValue::Constant(0.0),
        });
    }
    let center = spec
        .mesh
        .node_near([0.5, 0.5, 0.0], 1e-9)
        .ok_or_else(|| invalid("no node at the domain center"))?;
    spec.bcs.pins.push(PressurePin {
        node: center,
        value: 0.0,
    });
    spec.sources.push(PointSource {
        position: [0.0, 0.0, 0.0],
        strength: 0.25,
    });
    spec.sources.push(PointSource {
        position: [1.0, 1.0, 0.0],
        strength: -0.25,
    });
    finish(spec, opts, if checkerboard { 1e-9 } else { 1e-10 })
}

fn mms_body_force(x: [f64; 3]) -> [f64; 3] {
    manufactured_solution().body_force(x)
}

fn manufactured_problem(opts: &BuildOptions) -> Result<ProblemSpec> {
    let n = opts.resolution.unwrap_or(32);
    let mesh = generate_grid_2d(n, n, grid_kind(opts), [0.0, 0.0], [1.0, 1.0])?;
    let law = opts.law.unwrap_or(DragLaw::Barus);
    let beta = opts.beta.unwrap_or(0.5);
    let drag = DragModel::uniform(law, 1.0, beta, 1.0)?;
    let mut spec = ProblemSpec::with_defaults(mesh, drag);
    spec.coeff_c = 1.0;
    spec.density = 1.0;
    spec.body_force = Some(mms_body_force);
    for set in ["left", "right", "bottom", "top"] {
        spec.bcs.velocity.push(VelocityBc {
            set: set.into(),
            kind: VelocityBcKind::NormalFlux,
            value: BcValue::Constant(0.0),
        });
    }
    // exact pressure x^2 y^2 vanishes at the origin
    spec.bcs.pins.push(PressurePin { node: 0, value: 0.0 });
    finish(spec, opts, 1e-9)
}

fn patch_problem(opts: &BuildOptions) -> Result<ProblemSpec> {
    let n = opts.resolution.unwrap_or(5);
    let mesh = generate_grid_3d(n, n, n, [0.0; 3], [5.0; 3])?;
    let law = opts.law.unwrap_or(DragLaw::Barus);
    let beta = opts.beta.unwrap_or(0.1);
    let drag = DragModel::uniform(law, 1.0, beta, 1.0)?;
    let mut spec = ProblemSpec::with_defaults(mesh, drag);
    for set in ["xmin", "xmax"] {
        spec.bcs.velocity.push(VelocityBc {
            set: set.into(),
            kind: VelocityBcKind::Component(0),
            value: BcValue::Constant(1.0),
        });
    }
    for set in ["ymin", "ymax", "zmin", "zmax"] {
        spec.bcs.velocity.push(VelocityBc {
            set: set.into(),
            kind: VelocityBcKind::NormalFlux,
            value: BcValue::Constant(0.0),
        });
    }
    spec.bcs.pins.push(PressurePin { node: 0, value: 0.0 });
    finish(spec, opts, 1e-9)
}

fn regions_problem(opts: &BuildOptions) -> Result<ProblemSpec> {
    // 24 rings resolve the cross-interface production share; on coarser
    // grids its discretization drift across a beta sweep exceeds 5%
    let rings = opts.resolution.unwrap_or(24);
    let mesh = annulus_slab_mesh(rings, 2 * rings, 1.0, 100.0, 1.0)?;
    // region A holds the well and is three orders more permeable; the
    // interface is the plane x = 3
    let mesh = mesh.tag_regions(|c| if c[0] < 3.0 { 1 } else { 2 });
    let law = opts.law.unwrap_or(DragLaw::Linear);
    let beta = opts.beta.unwrap_or(0.0);
    let alpha0: BTreeMap<u32, f64> = [(1, 0.001), (2, 1.0)].into_iter().collect();
    let drag = DragModel::per_region(law, alpha0, beta, 1.0)?;
    let mut spec = ProblemSpec::with_defaults(mesh, drag);
    spec.bcs.pressure.push(PressureBc {
        set: "well".into(),
        value: BcValue::Constant(3.333e-4),
    });
    spec.bcs.pressure.push(PressureBc {
        set: "farfield".into(),
        value: BcValue::Constant(1.0),
    });
    for set in ["bottom", "top"] {
        spec.bcs.velocity.push(VelocityBc {
            set: set.into(),
            kind: VelocityBcKind::NormalFlux,
            value: BcValue::Constant(0.0),
        });
    }
    spec.openings.insert(
        "well".to_string(),
        spec.mesh.facet_set("well").unwrap().to_vec(),
    );
    let interface = spec
        .mesh
        .interface_facets(|e| spec.mesh.region_of(e) == 2, |e| spec.mesh.region_of(e) == 1);
    spec.openings.insert("interface".to_string(), interface);
    finish(spec, opts, 1e-12)
}

fn leakage_problem(opts: &BuildOptions) -> Result<ProblemSpec> {
    let n = opts.resolution.unwrap_or(8);
    let mesh = two_aquifer_mesh(n)?;
    let law = opts.law.unwrap_or(DragLaw::Barus);
    let beta = opts.beta.unwrap_or(0.0);
    // the duct is an inlet artifact; keep it nearly lossless so the peak
    // pressure reflects the aquifer, not wellbore friction
    let alpha0: BTreeMap<u32, f64> = [(1, 1.0), (2, 1.0), (3, 100.0), (4, 0.01)]
        .into_iter()
        .collect();
    let drag = DragModel::per_region(law, alpha0, beta, 1.0)?;
    let mut spec = ProblemSpec::with_defaults(mesh, drag);
    spec.bcs.pressure.push(PressureBc {
        set: "a_sides".into(),
        value: BcValue::Constant(1.0),
    });
    spec.bcs.pressure.push(PressureBc {
        set: "b_sides".into(),
        value: BcValue::Constant(0.95),
    });
    spec.bcs.velocity.push(VelocityBc {
        set: "walls".into(),
        kind: VelocityBcKind::NormalFlux,
        value: BcValue::Constant(0.0),
    });
    spec.bcs.velocity.push(VelocityBc {
        set: "injection".into(),
        kind: VelocityBcKind::NormalFlux,
        value: BcValue::Constant(-0.262),
    });
    spec.openings.insert(
        "injection".to_string(),
        spec.mesh.facet_set("injection").unwrap().to_vec(),
    );
    let leakage = spec
        .mesh
        .interface_facets(|e| spec.mesh.region_of(e) == 3, |e| spec.mesh.region_of(e) == 2);
    spec.openings.insert("leakage".to_string(), leakage);
    finish(spec, opts, 1e-12)
}

fn finish(mut spec: ProblemSpec, opts: &BuildOptions, eps_default: f64) -> Result<ProblemSpec> {
    spec.eps_tol = opts.eps_tol.unwrap_or(eps_default);
    spec.max_iters = opts.max_iters.unwrap_or(100);
    spec.quadrature_degree = opts.quadrature_degree;
    if let Some(map) = &opts.alpha0 {
        spec.drag.set_alpha0_map(map.clone())?;
    }
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// built-in desk meshes

/// Annular slab around a well: geometric ring grading from `r_inner` to
/// `r_outer`, one hex layer thick. Facet sets: `well`, `farfield`, `bottom`,
/// `top`.
pub fn annulus_slab_mesh(
    rings: usize,
    sectors: usize,
    r_inner: f64,
    r_outer: f64,
    thickness: f64,
) -> Result<Mesh> {
    if rings < 2 || sectors < 8 {
        return Err(invalid("annulus needs at least 2 rings and 8 sectors"));
    }
    if !(r_outer > r_inner && r_inner > 0.0 && thickness > 0.0) {
        return Err(invalid("annulus radii must satisfy 0 < r_inner < r_outer"));
    }
    let nr = rings + 1;
    let ratio = math::powf(r_outer / r_inner, 1.0 / rings as f64);
    let node = |layer: usize, ring: usize, sector: usize| (layer * nr + ring) * sectors + sector;
    let mut coords = vec![[0.0; 3]; 2 * nr * sectors];
    for layer in 0..2 {
        for ring in 0..nr {
            let r = r_inner * math::powf(ratio, ring as f64);
            for sector in 0..sectors {
                let th = 2.0 * core::f64::consts::PI * sector as f64 / sectors as f64;
                coords[node(layer, ring, sector)] = [
                    r * math::cos(th),
                    r * math::sin(th),
                    layer as f64 * thickness,
                ];
            }
        }
    }
    let mut elements = Vec::with_capacity(rings * sectors);
    for ring in 0..rings {
        for sector in 0..sectors {
            let s1 = (sector + 1) % sectors;
            elements.push((
                ElementKind::Hex8,
                vec![
                    node(0, ring, sector),
                    node(0, ring + 1, sector),
                    node(0, ring + 1, s1),
                    node(0, ring, s1),
                    node(1, ring, sector),
                    node(1, ring + 1, sector),
                    node(1, ring + 1, s1),
                    node(1, ring, s1),
                ],
            ));
        }
    }
    let mesh = Mesh::from_parts(3, coords, elements, Vec::new(), BTreeMap::new())?;
    mesh.check_geometry()?;

    let mut well = Vec::new();
    let mut farfield = Vec::new();
    let mut bottom = Vec::new();
    let mut top = Vec::new();
    let r_tol = 1e-9 * r_outer;
    for (e, lf) in mesh.boundary_facets() {
        let nodes = mesh.facet_global_nodes(e, lf);
        let radius = |n: &usize| {
            let c = mesh.coord(*n);
            math::sqrt(c[0] * c[0] + c[1] * c[1])
        };
        if nodes.iter().all(|n| mesh.coord(*n)[2] <= 1e-12) {
            bottom.push((e, lf));
        } else if nodes
            .iter()
            .all(|n| (mesh.coord(*n)[2] - thickness).abs() <= 1e-12 * thickness.max(1.0))
        {
            top.push((e, lf));
        } else if nodes.iter().all(|n| (radius(n) - r_inner).abs() <= r_tol) {
            well.push((e, lf));
        } else if nodes.iter().all(|n| (radius(n) - r_outer).abs() <= r_tol) {
            farfield.push((e, lf));
        } else {
            return Err(invalid(format!(
                "annulus facet ({e}, {lf}) fits no boundary group"
            )));
        }
    }
    let mesh = mesh
        .with_facet_set("well", well)?
        .with_facet_set("farfield", farfield)?
        .with_facet_set("bottom", bottom)?
        .with_facet_set("top", top)?;
    Ok(mesh)
}

/// Two aquifers on an 8 x 8 plan, connected only through an abandoned-well
/// column in the aquitard gap: aquifer A fills z in (0, 2), the column spans
/// z in (2, 2.5) over (1,3)^2, aquifer B fills z in (2.5, 4.5). The
/// injection well is a short duct rising from A's roof over (4,5)^2 up to
/// z = 2.4; its top facets take the prescribed inflow, and because its rim
/// nodes meet only the duct's vertical sides there is no clash with the
/// no-flow roof around it. Region tags: A = 1, B = 2, column = 3, duct = 4.
/// Facet sets: `a_sides`, `b_sides`, `injection` (duct top), `walls` (all
/// other no-flow surfaces). `n` cells per plan edge must be a multiple of 8
/// so the column and duct footprints align with cell lines.
pub fn two_aquifer_mesh(n: usize) -> Result<Mesh> {
    if n < 8 || n % 8 != 0 {
        return Err(invalid("plan resolution must be a positive multiple of 8"));
    }
    let dx = 8.0 / n as f64;
    let layers = n / 4;
    let mut zs: Vec<f64> = (0..=layers).map(|k| 2.0 * k as f64 / layers as f64).collect();
    zs.push(2.5);
    for k in 1..=layers {
        zs.push(2.5 + 2.0 * k as f64 / layers as f64);
    }
    let n_levels = zs.len();
    let roof_level = layers; // z = 2, top of aquifer A
    let in_span = |lo: f64, hi: f64, a: f64, b: f64| lo >= a - 1e-12 && hi <= b + 1e-12;

    let raw = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut used = vec![false; (n + 1) * (n + 1) * n_levels];
    let mut cells = Vec::new();
    for k in 0..n_levels - 1 {
        let (z_lo, z_hi) = (zs[k], zs[k + 1]);
        let aquitard = z_lo >= 2.0 - 1e-12 && z_hi <= 2.5 + 1e-12;
        let tag = if z_hi <= 2.0 + 1e-12 {
            1
        } else if aquitard {
            3
        } else {
            2
        };
        for j in 0..n {
            for i in 0..n {
                if aquitard {
                    let (x0, x1) = (i as f64 * dx, (i + 1) as f64 * dx);
                    let (y0, y1) = (j as f64 * dx, (j + 1) as f64 * dx);
                    if !(in_span(x0, x1, 1.0, 3.0) && in_span(y0, y1, 1.0, 3.0)) {
                        continue;
                    }
                }
                let conn = [
                    raw(i, j, k),
                    raw(i + 1, j, k),
                    raw(i + 1, j + 1, k),
                    raw(i, j + 1, k),
                    raw(i, j, k + 1),
                    raw(i + 1, j, k + 1),
                    raw(i + 1, j + 1, k + 1),
                    raw(i, j + 1, k + 1),
                ];
                for &c in &conn {
                    used[c] = true;
                }
                cells.push((conn, tag));
            }
        }
    }

    let mut renumber = vec![usize::MAX; used.len()];
    let mut coords = Vec::new();
    for k in 0..n_levels {
        for j in 0..=n {
            for i in 0..=n {
                let r = raw(i, j, k);
                if used[r] {
                    renumber[r] = coords.len();
                    coords.push([i as f64 * dx, j as f64 * dx, zs[k]]);
                }
            }
        }
    }
    let mut elements = Vec::with_capacity(cells.len());
    let mut tags = Vec::with_capacity(cells.len());
    for (conn, tag) in cells {
        elements.push((
            ElementKind::Hex8,
            conn.iter().map(|&c| renumber[c]).collect::<Vec<usize>>(),
        ));
        tags.push(tag);
    }

    // injection duct: plan nodes i, j in [n/2, 5n/8] at two private levels
    let (i0, i1) = (n / 2, 5 * n / 8);
    let span = i1 - i0 + 1;
    let mut duct_nodes = vec![usize::MAX; 2 * span * span];
    let duct = |lvl: usize, i: usize, j: usize| (lvl * span + (j - i0)) * span + (i - i0);
    for lvl in 0..2 {
        let z = 2.0 + 0.2 * (lvl + 1) as f64;
        for j in i0..=i1 {
            for i in i0..=i1 {
                duct_nodes[duct(lvl, i, j)] = coords.len();
                coords.push([i as f64 * dx, j as f64 * dx, z]);
            }
        }
    }
    for lvl in 0..2 {
        for j in i0..i1 {
            for i in i0..i1 {
                let below = |i: usize, j: usize| {
                    if lvl == 0 {
                        renumber[raw(i, j, roof_level)]
                    } else {
                        duct_nodes[duct(0, i, j)]
                    }
                };
                let above = |i: usize, j: usize| duct_nodes[duct(lvl, i, j)];
                elements.push((
                    ElementKind::Hex8,
                    vec![
                        below(i, j),
                        below(i + 1, j),
                        below(i + 1, j + 1),
                        below(i, j + 1),
                        above(i, j),
                        above(i + 1, j),
                        above(i + 1, j + 1),
                        above(i, j + 1),
                    ],
                ));
                tags.push(4);
            }
        }
    }

    let mesh = Mesh::from_parts(3, coords, elements, tags, BTreeMap::new())?;
    mesh.check_geometry()?;

    let mut a_sides = Vec::new();
    let mut b_sides = Vec::new();
    let mut injection = Vec::new();
    let mut walls = Vec::new();
    let eps = 1e-9;
    for (e, lf) in mesh.boundary_facets() {
        let nodes = mesh.facet_global_nodes(e, lf);
        let cs: Vec<[f64; 3]> = nodes.iter().map(|&n| mesh.coord(n)).collect();
        let on_plane = |d: usize, v: f64| cs.iter().all(|c| (c[d] - v).abs() <= eps);
        let side = on_plane(0, 0.0) || on_plane(0, 8.0) || on_plane(1, 0.0) || on_plane(1, 8.0);
        if side {
            if cs.iter().all(|c| c[2] <= 2.0 + eps) {
                a_sides.push((e, lf));
            } else if cs.iter().all(|c| c[2] >= 2.5 - eps) {
                b_sides.push((e, lf));
            } else {
                return Err(invalid("side facet straddles the aquitard gap"));
            }
        } else if on_plane(2, 2.4) {
            injection.push((e, lf));
        } else {
            walls.push((e, lf));
        }
    }
    if injection.is_empty() {
        return Err(invalid("no injection facets found on the duct top"));
    }
    let mesh = mesh
        .with_facet_set("a_sides", a_sides)?
        .with_facet_set("b_sides", b_sides)?
        .with_facet_set("injection", injection)?
        .with_facet_set("walls", walls)?;
    Ok(mesh)
}

// ---------------------------------------------------------------------------
// error norms, fluxes, convergence

/// Quadrature degree for error integration: one rule order above the
/// assembly default, which keeps fourth-degree exact-solution integrands
/// exact on tensor elements.
pub fn error_quadrature_degree(assembly_degree: usize) -> usize {
    (assembly_degree + 2).min(5)
}

/// L2 norms of the pressure and velocity errors of a nodal solution against
/// a closed form.
pub fn l2_errors(
    mesh: &Mesh,
    solution: &Solution,
    exact: &AnalyticSolution,
    degree: usize,
) -> Result<(f64, f64)> {
    let mut ep2 = 0.0;
    let mut ev2 = 0.0;
    let dim = mesh.dim();
    let mut rules: BTreeMap<ElementKind, (QuadratureRule, ElementBasis)> = BTreeMap::new();
    for e in 0..mesh.element_count() {
        let kind = mesh.kind_of(e);
        if !rules.contains_key(&kind) {
            let rule = QuadratureRule::for_kind(kind, degree)?;
            let basis = ElementBasis::tabulate(kind, &rule);
            rules.insert(kind, (rule, basis));
        }
        let (rule, basis) = &rules[&kind];
        let conn = mesh.nodes_of(e);
        let nn = kind.n_nodes();
        let mut coords = [[0.0; 3]; crate::element::MAX_ELEM_NODES];
        mesh.element_coords(e, &mut coords[..nn]);
        for q in 0..rule.len() {
            let nv = &basis.values[q];
            let (_, det) = map_gradients(kind, &coords, &basis.ref_grads[q], e)?;
            let w = rule.weights[q] * det;
            let mut x = [0.0; 3];
            let mut ph = 0.0;
            let mut vh = [0.0; 3];
            for a in 0..nn {
                let na = nv[a];
                for d in 0..3 {
                    x[d] += na * coords[a][d];
                    vh[d] += na * solution.velocity[conn[a]][d];
                }
                ph += na * solution.pressure[conn[a]];
            }
            let dp = ph - exact.pressure(x);
            ep2 += w * dp * dp;
            let ve = exact.velocity(x);
            for d in 0..dim {
                let dv = vh[d] - ve[d];
                ev2 += w * dv * dv;
            }
        }
    }
    Ok((math::sqrt(ep2), math::sqrt(ev2)))
}

/// Net flux of a nodal velocity field through a facet list, positive along
/// the owning elements' outward normals.
pub fn flux_through(
    mesh: &Mesh,
    facets: &[(usize, usize)],
    velocity: &[[f64; 3]],
    degree: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for &(e, lf) in facets {
        let kind = mesh.kind_of(e);
        let nn = kind.n_nodes();
        let mut coords = [[0.0; 3]; crate::element::MAX_ELEM_NODES];
        mesh.element_coords(e, &mut coords[..nn]);
        let pts = facet_quadrature(kind, &coords, lf, degree, e)?;
        let fnodes = kind.facet_nodes(lf);
        let conn = mesh.nodes_of(e);
        for p in &pts {
            let mut vn = 0.0;
            for (l, &a) in fnodes.iter().enumerate() {
                let v = velocity[conn[a]];
                vn += p.shape[l] * (v[0] * p.normal[0] + v[1] * p.normal[1] + v[2] * p.normal[2]);
            }
            total += p.weight * vn;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedRate {
    /// Errors at rounding level; a slope would be meaningless.
    Exact,
    Slope(f64),
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub e_p: f64,
    pub e_v: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub rate_p: FittedRate,
    pub rate_v: FittedRate,
    pub all_converged: bool,
}

/// Solves a catalog problem over a set of resolutions and fits L2
/// convergence rates against its closed form.
pub fn convergence_study(
    name: &str,
    resolutions: &[usize],
    opts: &BuildOptions,
) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(invalid("a rate fit needs at least 3 resolutions"));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("resolutions must be strictly increasing"));
    }
    let exact = analytic_for(name, opts).ok_or_else(|| {
        invalid(format!(
            "problem '{name}' has no closed form at these options"
        ))
    })?;
    let extent = if name == "patch3d" { 5.0 } else { 1.0 };
    let mut rows = Vec::new();
    let mut all_converged = true;
    for &n in resolutions {
        let mut o = opts.clone();
        o.resolution = Some(n);
        let spec = build_problem(name, &o)?;
        let sol = crate::picard::solve(&spec)?;
        let degree = error_quadrature_degree(spec.quad_degree());
        let (e_p, e_v) = l2_errors(&spec.mesh, &sol, &exact, degree)?;
        all_converged &= sol.report.converged;
        rows.push(ConvergenceRow {
            h: extent / n as f64,
            e_p,
            e_v,
            iterations: sol.report.iterations_used,
            converged: sol.report.converged,
        });
    }
    let rate_p = fit_rate(rows.iter().map(|r| (r.h, r.e_p)));
    let rate_v = fit_rate(rows.iter().map(|r| (r.h, r.e_v)));
    Ok(ConvergenceReport {
        rows,
        rate_p,
        rate_v,
        all_converged,
    })
}

/// Least-squares slope of log error against log h.
pub fn fit_rate(points: impl Iterator<Item = (f64, f64)>) -> FittedRate {
    let pts: Vec<(f64, f64)> = points.collect();
    if pts.iter().any(|&(_, e)| e < 1e-12) {
        return FittedRate::Exact;
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in &pts {
        let (x, y) = (math::ln(h), math::ln(e));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    FittedRate::Slope((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

impl core::fmt::Display for FittedRate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FittedRate::Exact => write!(f, "exact"),
            FittedRate::Slope(s) => write!(f, "{s:.3}"),
        }
    }
}

/// Fluxes through every opening a problem declares, keyed by opening name.
pub fn opening_fluxes(spec: &ProblemSpec, solution: &Solution) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (name, facets) in &spec.openings {
        let f = flux_through(&spec.mesh, facets, &solution.velocity, spec.quad_degree())?;
        out.insert(name.clone(), f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picard::PicardReport;

    #[test]
    fn every_catalog_problem_builds_and_validates() {
        for name in PROBLEM_NAMES {
            let spec = build_problem(name, &BuildOptions::default()).unwrap();
            assert!(spec.mesh.element_count() > 0, "{name}");
            assert!(problem_summary(name).is_some());
        }
        assert!(build_problem("bogus", &BuildOptions::default()).is_err());
        assert!(problem_summary("bogus").is_none());
    }

    #[test]
    fn unknown_region_override_is_rejected() {
        let mut opts = BuildOptions::default();
        opts.alpha0 = Some([(9, -1.0)].into_iter().collect());
        assert!(build_problem("fivespot", &opts).is_err());
    }

    fn zero_solution(mesh: &Mesh) -> Solution {
        Solution {
            velocity: vec![[0.0; 3]; mesh.node_count()],
            pressure: vec![0.0; mesh.node_count()],
            report: PicardReport {
                iterations_used: 1,
                diff_norms: vec![0.0],
                converged: true,
            },
        }
    }

    #[test]
    fn l2_error_of_the_zero_solution_matches_analytic_integrals() {
        // ||x^2 y^2|| = 1/5 exactly; the degree-4 rule integrates x^4 y^4
        // without error on rectangles
        let mesh = generate_grid_2d(10, 10, ElementKind::Quad4, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let exact = manufactured_solution();
        let (e_p, e_v) =
            l2_errors(&mesh, &zero_solution(&mesh), &exact, error_quadrature_degree(2)).unwrap();
        assert!((e_p - 0.2).abs() <= 1e-14, "e_p = {e_p:.16}");
        // ||v||^2 = int sin^2 cos^2 + cos^2 sin^2 = 1/2
        assert!((e_v - core::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-7);
    }

    #[test]
    fn interpolated_linear_fields_have_no_l2_error() {
        let mesh = generate_grid_2d(5, 5, ElementKind::Tri3, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let exact = analytic_1d(DragLaw::Barus, 1.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        // p = 1 - x, v = (1, 0): nodal interpolation is the field itself
        let mut sol = zero_solution(&mesh);
        for n in 0..mesh.node_count() {
            sol.pressure[n] = 1.0 - mesh.coord(n)[0];
            sol.velocity[n] = [1.0, 0.0, 0.0];
        }
        let (e_p, e_v) = l2_errors(&mesh, &sol, &exact, 4).unwrap();
        assert!(e_p <= 1e-14);
        assert!(e_v <= 1e-14);
    }

    #[test]
    fn flux_follows_the_outward_normal() {
        let mesh = generate_grid_2d(4, 4, ElementKind::Quad4, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let v = vec![[2.0, 0.0, 0.0]; mesh.node_count()];
        let right = flux_through(&mesh, mesh.facet_set("right").unwrap(), &v, 2).unwrap();
        let left = flux_through(&mesh, mesh.facet_set("left").unwrap(), &v, 2).unwrap();
        let top = flux_through(&mesh, mesh.facet_set("top").unwrap(), &v, 2).unwrap();
        assert!((right - 2.0).abs() <= 1e-13);
        assert!((left + 2.0).abs() <= 1e-13);
        assert!(top.abs() <= 1e-13);
    }

    #[test]
    fn annulus_mesh_is_sound() {
        let mesh = annulus_slab_mesh(8, 16, 1.0, 100.0, 1.0).unwrap();
        assert_eq!(mesh.element_count(), 8 * 16);
        // polygonal approximation of the annulus area, times thickness
        let s = 16.0;
        let poly = |r: f64| 0.5 * s * r * r * math::sin(2.0 * core::f64::consts::PI / s);
        let want = poly(100.0) - poly(1.0);
        assert!((mesh.total_volume().unwrap() - want).abs() <= 1e-8 * want);
        assert_eq!(mesh.facet_set("well").unwrap().len(), 16);
        assert_eq!(mesh.facet_set("farfield").unwrap().len(), 16);
        assert_eq!(mesh.facet_set("bottom").unwrap().len(), 8 * 16);
    }

    #[test]
    fn two_aquifer_mesh_is_sound() {
        let mesh = two_aquifer_mesh(8).unwrap();
        // 2 x 64 cells per aquifer, the 2x2 column, a 2-cell duct
        assert_eq!(mesh.element_count(), 128 + 128 + 4 + 2);
        let vol = mesh.total_volume().unwrap();
        assert!((vol - (128.0 + 128.0 + 4.0 * 0.5 + 2.0 * 0.2)).abs() <= 1e-10);
        assert_eq!(mesh.facet_set("injection").unwrap().len(), 1);
        let leak = mesh.interface_facets(|e| mesh.region_of(e) == 3, |e| mesh.region_of(e) == 2);
        assert_eq!(leak.len(), 4);
        // column tops sit at z = 2.5 facing up
        for &(e, lf) in &leak {
            assert_eq!(mesh.region_of(e), 3);
            for n in mesh.facet_global_nodes(e, lf) {
                assert!((mesh.coord(n)[2] - 2.5).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn refined_two_aquifer_mesh_keeps_the_geometry() {
        let mesh = two_aquifer_mesh(16).unwrap();
        let vol = mesh.total_volume().unwrap();
        assert!((vol - 258.4).abs() <= 1e-9);
        assert_eq!(mesh.facet_set("injection").unwrap().len(), 4);
    }

    #[test]
    fn rate_fit_recovers_known_slopes() {
        let pts = [(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 6.25e-4)];
        match fit_rate(pts.iter().copied()) {
            FittedRate::Slope(s) => assert!((s - 2.0).abs() <= 1e-12),
            other => panic!("expected a slope, got {other:?}"),
        }
        assert_eq!(
            fit_rate([(0.1, 1e-14), (0.05, 2e-15)].into_iter()),
            FittedRate::Exact
        );
    }

    #[test]
    fn darcy_channel_rates_report_exact() {
        let mut opts = BuildOptions::default();
        opts.beta = Some(0.0);
        let report = convergence_study("constant2d", &[4, 6, 8], &opts).unwrap();
        assert!(report.all_converged);
        assert_eq!(report.rate_p, FittedRate::Exact);
        assert_eq!(report.rate_v, FittedRate::Exact);
        for row in &report.rows {
            assert_eq!(row.iterations, 1);
        }
    }

    #[test]
    fn openings_report_fluxes_per_name() {
        let spec = build_problem("leakage-coarse", &BuildOptions::default()).unwrap();
        let sol = crate::picard::solve(&spec).unwrap();
        assert!(sol.report.converged);
        let fluxes = opening_fluxes(&spec, &sol).unwrap();
        // prescribed inflow: v.n = -0.262 over a unit patch
        assert!((fluxes["injection"] + 0.262).abs() <= 1e-12);
        // some of it must leak upward through the column
        assert!(fluxes["leakage"] > 0.0);
        assert!(fluxes["leakage"] < 0.262);
    }
}
