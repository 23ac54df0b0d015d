//! Reference elements: linear Lagrange shape functions, Gauss quadrature and
//! the isoparametric pieces (Jacobians, physical gradients, facet normals).
//!
//! Supported kinds are `line2`, `tri3`, `quad4` and `hex8`. Connectivity is
//! counter-clockwise for the 2D kinds and bottom-then-top (VTK hexahedron
//! order) for `hex8`; facet tables below are oriented so the computed facet
//! normal points out of the element whenever the volume Jacobian is positive.

use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::math;
use crate::Result;

pub const MAX_ELEM_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKind {
    Line2,
    Tri3,
    Quad4,
    Hex8,
}

impl ElementKind {
    pub fn dim(self) -> usize {
        match self {
            ElementKind::Line2 => 1,
            ElementKind::Tri3 | ElementKind::Quad4 => 2,
            ElementKind::Hex8 => 3,
        }
    }

    pub fn n_nodes(self) -> usize {
        match self {
            ElementKind::Line2 => 2,
            ElementKind::Tri3 => 3,
            ElementKind::Quad4 => 4,
            ElementKind::Hex8 => 8,
        }
    }

    pub fn n_facets(self) -> usize {
        match self {
            ElementKind::Line2 => 2,
            ElementKind::Tri3 => 3,
            ElementKind::Quad4 => 4,
            ElementKind::Hex8 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Line2 => "line2",
            ElementKind::Tri3 => "tri3",
            ElementKind::Quad4 => "quad4",
            ElementKind::Hex8 => "hex8",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "line2" => Some(ElementKind::Line2),
            "tri3" => Some(ElementKind::Tri3),
            "quad4" => Some(ElementKind::Quad4),
            "hex8" => Some(ElementKind::Hex8),
            _ => None,
        }
    }

    /// Legacy VTK cell type id.
    pub fn vtk_cell_type(self) -> u8 {
        match self {
            ElementKind::Line2 => 3,
            ElementKind::Tri3 => 5,
            ElementKind::Quad4 => 9,
            ElementKind::Hex8 => 12,
        }
    }

    /// Measure of the reference domain (weights of any rule sum to this).
    pub fn reference_measure(self) -> f64 {
        match self {
            ElementKind::Line2 => 2.0,
            ElementKind::Tri3 => 0.5,
            ElementKind::Quad4 => 4.0,
            ElementKind::Hex8 => 8.0,
        }
    }

    /// Local node indices of a facet, oriented outward (see module docs).
    pub fn facet_nodes(self, facet: usize) -> &'static [usize] {
        const LINE: [&[usize]; 2] = [&[0], &[1]];
        const TRI: [&[usize]; 3] = [&[0, 1], &[1, 2], &[2, 0]];
        const QUAD: [&[usize]; 4] = [&[0, 1], &[1, 2], &[2, 3], &[3, 0]];
        const HEX: [&[usize]; 6] = [
            &[0, 3, 2, 1], // bottom, normal -z
            &[4, 5, 6, 7], // top, normal +z
            &[0, 1, 5, 4], // front, normal -y
            &[1, 2, 6, 5], // right, normal +x
            &[2, 3, 7, 6], // back, normal +y
            &[3, 0, 4, 7], // left, normal -x
        ];
        match self {
            ElementKind::Line2 => LINE[facet],
            ElementKind::Tri3 => TRI[facet],
            ElementKind::Quad4 => QUAD[facet],
            ElementKind::Hex8 => HEX[facet],
        }
    }
}

/// Shape function values and reference-space gradients at a point of the
/// reference domain. Entries past `kind.n_nodes()` are zero.
pub fn shape_values(kind: ElementKind, xi: [f64; 3]) -> ([f64; MAX_ELEM_NODES], [[f64; 3]; MAX_ELEM_NODES]) {
    let mut n = [0.0; MAX_ELEM_NODES];
    let mut g = [[0.0; 3]; MAX_ELEM_NODES];
    match kind {
        ElementKind::Line2 => {
            n[0] = 0.5 * (1.0 - xi[0]);
            n[1] = 0.5 * (1.0 + xi[0]);
            g[0][0] = -0.5;
            g[1][0] = 0.5;
        }
        ElementKind::Tri3 => {
            n[0] = 1.0 - xi[0] - xi[1];
            n[1] = xi[0];
            n[2] = xi[1];
            g[0] = [-1.0, -1.0, 0.0];
            g[1] = [1.0, 0.0, 0.0];
            g[2] = [0.0, 1.0, 0.0];
        }
        ElementKind::Quad4 => {
            const C: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
            for a in 0..4 {
                let (cx, cy) = (C[a][0], C[a][1]);
                n[a] = 0.25 * (1.0 + cx * xi[0]) * (1.0 + cy * xi[1]);
                g[a][0] = 0.25 * cx * (1.0 + cy * xi[1]);
                g[a][1] = 0.25 * cy * (1.0 + cx * xi[0]);
            }
        }
        ElementKind::Hex8 => {
            const C: [[f64; 3]; 8] = [
                [-1.0, -1.0, -1.0],
                [1.0, -1.0, -1.0],
                [1.0, 1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0],
                [1.0, -1.0, 1.0],
                [1.0, 1.0, 1.0],
                [-1.0, 1.0, 1.0],
            ];
            for a in 0..8 {
                let f = [
                    1.0 + C[a][0] * xi[0],
                    1.0 + C[a][1] * xi[1],
                    1.0 + C[a][2] * xi[2],
                ];
                n[a] = 0.125 * f[0] * f[1] * f[2];
                g[a][0] = 0.125 * C[a][0] * f[1] * f[2];
                g[a][1] = 0.125 * C[a][1] * f[0] * f[2];
                g[a][2] = 0.125 * C[a][2] * f[0] * f[1];
            }
        }
    }
    (n, g)
}

/// Gradients of the shape functions in physical coordinates plus `det J`.
/// The `element` argument only labels the error on a degenerate mapping.
pub fn physical_gradients(
    kind: ElementKind,
    coords: &[[f64; 3]],
    xi: [f64; 3],
    element: usize,
) -> Result<([[f64; 3]; MAX_ELEM_NODES], f64)> {
    let (_, ref_grads) = shape_values(kind, xi);
    map_gradients(kind, coords, &ref_grads, element)
}

/// Same as [`physical_gradients`] but reusing tabulated reference gradients.
pub fn map_gradients(
    kind: ElementKind,
    coords: &[[f64; 3]],
    ref_grads: &[[f64; 3]; MAX_ELEM_NODES],
    element: usize,
) -> Result<([[f64; 3]; MAX_ELEM_NODES], f64)> {
    let dim = kind.dim();
    let nn = kind.n_nodes();
    debug_assert!(coords.len() >= nn);

    // J[r][c] = d x_r / d xi_c
    let mut j = [[0.0; 3]; 3];
    for a in 0..nn {
        for r in 0..dim {
            for c in 0..dim {
                j[r][c] += coords[a][r] * ref_grads[a][c];
            }
        }
    }

    let (det, inv) = invert(dim, &j);
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::DegenerateElement { element, det_j: det });
    }

    // grad N_a = J^{-T} ref_grad_a
    let mut out = [[0.0; 3]; MAX_ELEM_NODES];
    for a in 0..nn {
        for r in 0..dim {
            let mut s = 0.0;
            for c in 0..dim {
                s += inv[c][r] * ref_grads[a][c];
            }
            out[a][r] = s;
        }
    }
    Ok((out, det))
}

/// Determinant and inverse of the leading `dim x dim` block.
fn invert(dim: usize, j: &[[f64; 3]; 3]) -> (f64, [[f64; 3]; 3]) {
    let mut inv = [[0.0; 3]; 3];
    match dim {
        1 => {
            let det = j[0][0];
            inv[0][0] = 1.0 / det;
            (det, inv)
        }
        2 => {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let d = 1.0 / det;
            inv[0][0] = j[1][1] * d;
            inv[0][1] = -j[0][1] * d;
            inv[1][0] = -j[1][0] * d;
            inv[1][1] = j[0][0] * d;
            (det, inv)
        }
        3 => {
            let c00 = j[1][1] * j[2][2] - j[1][2] * j[2][1];
            let c01 = j[1][2] * j[2][0] - j[1][0] * j[2][2];
            let c02 = j[1][0] * j[2][1] - j[1][1] * j[2][0];
            let det = j[0][0] * c00 + j[0][1] * c01 + j[0][2] * c02;
            let d = 1.0 / det;
            inv[0][0] = c00 * d;
            inv[1][0] = c01 * d;
            inv[2][0] = c02 * d;
            inv[0][1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) * d;
            inv[1][1] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) * d;
            inv[2][1] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) * d;
            inv[0][2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) * d;
            inv[1][2] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) * d;
            inv[2][2] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) * d;
            (det, inv)
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// quadrature

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre abscissae/weights on [-1, 1], up to five points.
fn gauss_1d(n: usize) -> Result<(&'static [f64], &'static [f64])> {
    const X1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const X2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const X3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    const X4: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_26,
        0.339_981_043_584_856_26,
        0.861_136_311_594_052_6,
    ];
    const W4: [f64; 4] = [
        0.347_854_845_137_453_86,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_86,
    ];
    const X5: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W5: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    match n {
        1 => Ok((&X1, &W1)),
        2 => Ok((&X2, &W2)),
        3 => Ok((&X3, &W3)),
        4 => Ok((&X4, &W4)),
        5 => Ok((&X5, &W5)),
        _ => Err(invalid("Gauss rules supported for 1..=5 points per direction")),
    }
}

impl QuadratureRule {
    /// Rule exact for polynomials of (total) degree `>= degree` on the
    /// reference domain of `kind`. Tensor-product Gauss for line/quad/hex
    /// (degree up to 9); symmetric interior rules for triangles (up to 5).
    pub fn for_kind(kind: ElementKind, degree: usize) -> Result<Self> {
        match kind {
            ElementKind::Line2 | ElementKind::Quad4 | ElementKind::Hex8 => {
                let n = degree / 2 + 1; // n-point Gauss is exact to 2n-1
                let (x, w) = gauss_1d(n)?;
                let dim = kind.dim();
                let mut points = Vec::new();
                let mut weights = Vec::new();
                match dim {
                    1 => {
                        for i in 0..n {
                            points.push([x[i], 0.0, 0.0]);
                            weights.push(w[i]);
                        }
                    }
                    2 => {
                        for j in 0..n {
                            for i in 0..n {
                                points.push([x[i], x[j], 0.0]);
                                weights.push(w[i] * w[j]);
                            }
                        }
                    }
                    _ => {
                        for k in 0..n {
                            for j in 0..n {
                                for i in 0..n {
                                    points.push([x[i], x[j], x[k]]);
                                    weights.push(w[i] * w[j] * w[k]);
                                }
                            }
                        }
                    }
                }
                Ok(QuadratureRule { points, weights })
            }
            ElementKind::Tri3 => triangle_rule(degree),
        }
    }

    /// Default rule used by the assembler: exact at least for degree 2.
    pub fn default_for(kind: ElementKind) -> Self {
        QuadratureRule::for_kind(kind, 2).expect("degree-2 rules exist for all kinds")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    let (points, weights): (Vec<[f64; 3]>, Vec<f64>) = match degree {
        0 | 1 => (
            alloc::vec![[1.0 / 3.0, 1.0 / 3.0, 0.0]],
            alloc::vec![0.5],
        ),
        2 => (
            alloc::vec![
                [1.0 / 6.0, 1.0 / 6.0, 0.0],
                [2.0 / 3.0, 1.0 / 6.0, 0.0],
                [1.0 / 6.0, 2.0 / 3.0, 0.0],
            ],
            alloc::vec![1.0 / 6.0; 3],
        ),
        3 | 4 => {
            let a = 0.445_948_490_915_965;
            let b = 0.091_576_213_509_771;
            let wa = 0.223_381_589_678_011 * 0.5;
            let wb = 0.109_951_743_655_322 * 0.5;
            (
                alloc::vec![
                    [a, a, 0.0],
                    [1.0 - 2.0 * a, a, 0.0],
                    [a, 1.0 - 2.0 * a, 0.0],
                    [b, b, 0.0],
                    [1.0 - 2.0 * b, b, 0.0],
                    [b, 1.0 - 2.0 * b, 0.0],
                ],
                alloc::vec![wa, wa, wa, wb, wb, wb],
            )
        }
        5 => {
            let a = 0.470_142_064_105_115;
            let b = 0.101_286_507_323_456;
            let wa = 0.132_394_152_788_506 * 0.5;
            let wb = 0.125_939_180_544_827 * 0.5;
            (
                alloc::vec![
                    [1.0 / 3.0, 1.0 / 3.0, 0.0],
                    [a, a, 0.0],
                    [1.0 - 2.0 * a, a, 0.0],
                    [a, 1.0 - 2.0 * a, 0.0],
                    [b, b, 0.0],
                    [1.0 - 2.0 * b, b, 0.0],
                    [b, 1.0 - 2.0 * b, 0.0],
                ],
                alloc::vec![0.1125, wa, wa, wa, wb, wb, wb],
            )
        }
        _ => return Err(invalid("triangle quadrature supported up to degree 5")),
    };
    Ok(QuadratureRule { points, weights })
}

/// Shape values and reference gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub kind: ElementKind,
    pub values: Vec<[f64; MAX_ELEM_NODES]>,
    pub ref_grads: Vec<[[f64; 3]; MAX_ELEM_NODES]>,
}

impl ElementBasis {
    pub fn tabulate(kind: ElementKind, rule: &QuadratureRule) -> Self {
        let mut values = Vec::with_capacity(rule.len());
        let mut ref_grads = Vec::with_capacity(rule.len());
        for &xi in &rule.points {
            let (n, g) = shape_values(kind, xi);
            values.push(n);
            ref_grads.push(g);
        }
        ElementBasis {
            kind,
            values,
            ref_grads,
        }
    }
}

/// Measure (length/area/volume) of one element.
pub fn element_volume(kind: ElementKind, coords: &[[f64; 3]], element: usize) -> Result<f64> {
    let rule = QuadratureRule::default_for(kind);
    let basis = ElementBasis::tabulate(kind, &rule);
    let mut vol = 0.0;
    for q in 0..rule.len() {
        let (_, det) = map_gradients(kind, coords, &basis.ref_grads[q], element)?;
        vol += rule.weights[q] * det;
    }
    Ok(vol)
}

// ---------------------------------------------------------------------------
// facet geometry

/// One quadrature point on an element facet, mapped to physical space.
/// `weight` already contains the surface measure; `shape[i]` matches
/// `kind.facet_nodes(facet)[i]`.
#[derive(Debug, Clone, Copy)]
pub struct FacetPoint {
    pub x: [f64; 3],
    pub normal: [f64; 3],
    pub weight: f64,
    pub shape: [f64; 4],
}

/// Quadrature points on a facet with outward unit normals. `degree` matches
/// the volume rule choice; facets of `line2` elements are single points.
pub fn facet_quadrature(
    kind: ElementKind,
    coords: &[[f64; 3]],
    facet: usize,
    degree: usize,
    element: usize,
) -> Result<Vec<FacetPoint>> {
    if facet >= kind.n_facets() {
        return Err(invalid("facet index out of range"));
    }
    let fnodes = kind.facet_nodes(facet);
    let mut out = Vec::new();
    match kind {
        ElementKind::Line2 => {
            let a = coords[fnodes[0]];
            let other = coords[1 - fnodes[0]];
            let sign = if a[0] > other[0] { 1.0 } else { -1.0 };
            out.push(FacetPoint {
                x: a,
                normal: [sign, 0.0, 0.0],
                weight: 1.0,
                shape: [1.0, 0.0, 0.0, 0.0],
            });
        }
        ElementKind::Tri3 | ElementKind::Quad4 => {
            let (x0, x1) = (coords[fnodes[0]], coords[fnodes[1]]);
            let t = [0.5 * (x1[0] - x0[0]), 0.5 * (x1[1] - x0[1])];
            let len = math::sqrt(t[0] * t[0] + t[1] * t[1]);
            if !(len > 0.0) {
                return Err(Error::DegenerateElement {
                    element,
                    det_j: len,
                });
            }
            // edges run counter-clockwise, so rotating the tangent by -90
            // degrees points outward
            let normal = [t[1] / len, -t[0] / len, 0.0];
            let n = degree / 2 + 1;
            let (xq, wq) = gauss_1d(n)?;
            for q in 0..n {
                let n0 = 0.5 * (1.0 - xq[q]);
                let n1 = 0.5 * (1.0 + xq[q]);
                out.push(FacetPoint {
                    x: [
                        n0 * x0[0] + n1 * x1[0],
                        n0 * x0[1] + n1 * x1[1],
                        0.0,
                    ],
                    normal,
                    weight: wq[q] * len,
                    shape: [n0, n1, 0.0, 0.0],
                });
            }
        }
        ElementKind::Hex8 => {
            let xs: [[f64; 3]; 4] = [
                coords[fnodes[0]],
                coords[fnodes[1]],
                coords[fnodes[2]],
                coords[fnodes[3]],
            ];
            let n = degree / 2 + 1;
            let (xq, wq) = gauss_1d(n)?;
            for qb in 0..n {
                for qa in 0..n {
                    let (sv, sg) = shape_values(ElementKind::Quad4, [xq[qa], xq[qb], 0.0]);
                    let mut x = [0.0; 3];
                    let mut ta = [0.0; 3];
                    let mut tb = [0.0; 3];
                    for i in 0..4 {
                        for r in 0..3 {
                            x[r] += sv[i] * xs[i][r];
                            ta[r] += sg[i][0] * xs[i][r];
                            tb[r] += sg[i][1] * xs[i][r];
                        }
                    }
                    let cross = [
                        ta[1] * tb[2] - ta[2] * tb[1],
                        ta[2] * tb[0] - ta[0] * tb[2],
                        ta[0] * tb[1] - ta[1] * tb[0],
                    ];
                    let area = math::sqrt(math::dot3(cross, cross));
                    if !(area > 0.0) {
                        return Err(Error::DegenerateElement {
                            element,
                            det_j: area,
                        });
                    }
                    out.push(FacetPoint {
                        x,
                        normal: [cross[0] / area, cross[1] / area, cross[2] / area],
                        weight: wq[qa] * wq[qb] * area,
                        shape: [sv[0], sv[1], sv[2], sv[3]],
                    });
                }
            }
        }
    }
    Ok(out)
}
