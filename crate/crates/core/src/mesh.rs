//! Unstructured meshes of a single spatial dimension (1, 2 or 3) with
//! per-element region tags and named facet sets.
//!
//! A facet is addressed as `(element, local_facet)` using the tables in
//! [`crate::element`]. Boundary conditions and flux surfaces are expressed
//! through named facet sets, so generators are expected to tag the full
//! boundary. Meshes are immutable once built; [`Mesh::tag_regions`] returns
//! a retagged copy.
//!
//! The text format (one mesh per file) is:
//!
//! ```text
//! dim n_nodes n_elems
//! x [y] [z]                 (n_nodes lines)
//! kind i0 i1 ...            (n_elems lines, 0-based node ids)
//! facetset <name> <count>
//! elem local_facet          (count lines, repeat block per set)
//! regions t0 t1 ... t_{n_elems-1}   (optional)
//! ```
//!
//! `#` starts a comment; blank lines are ignored.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::element::{element_volume, ElementKind};
use crate::error::{invalid, Error};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    coords: Vec<[f64; 3]>,
    kinds: Vec<ElementKind>,
    elem_ptr: Vec<usize>,
    elem_nodes: Vec<usize>,
    region: Vec<u32>,
    facet_sets: BTreeMap<String, Vec<(usize, usize)>>,
}

impl Mesh {
    /// Builds a mesh from raw arrays, checking index ranges and kind/dim
    /// consistency. Geometric checks (positive Jacobians) are separate, see
    /// [`Mesh::check_geometry`].
    pub fn from_parts(
        dim: usize,
        coords: Vec<[f64; 3]>,
        elements: Vec<(ElementKind, Vec<usize>)>,
        region: Vec<u32>,
        facet_sets: BTreeMap<String, Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("mesh dimension must be 1, 2 or 3"));
        }
        for (i, c) in coords.iter().enumerate() {
            if !c.iter().all(|v| v.is_finite()) {
                return Err(invalid(format!("node {i} has non-finite coordinates")));
            }
            for d in dim..3 {
                if c[d] != 0.0 {
                    return Err(invalid(format!(
                        "node {i} uses coordinate {d} beyond mesh dimension {dim}"
                    )));
                }
            }
        }
        let mut kinds = Vec::with_capacity(elements.len());
        let mut elem_ptr = Vec::with_capacity(elements.len() + 1);
        let mut elem_nodes = Vec::new();
        elem_ptr.push(0);
        for (e, (kind, conn)) in elements.into_iter().enumerate() {
            if kind.dim() != dim {
                return Err(invalid(format!(
                    "element {e} is {} but the mesh is {dim}D",
                    kind.name()
                )));
            }
            if conn.len() != kind.n_nodes() {
                return Err(invalid(format!(
                    "element {e} ({}) has {} nodes, expected {}",
                    kind.name(),
                    conn.len(),
                    kind.n_nodes()
                )));
            }
            for &n in &conn {
                if n >= coords.len() {
                    return Err(invalid(format!("element {e} references node {n}")));
                }
            }
            kinds.push(kind);
            elem_nodes.extend_from_slice(&conn);
            elem_ptr.push(elem_nodes.len());
        }
        let region = if region.is_empty() {
            alloc::vec![0; kinds.len()]
        } else if region.len() == kinds.len() {
            region
        } else {
            return Err(invalid("region tag array length != element count"));
        };
        let mesh = Mesh {
            dim,
            coords,
            kinds,
            elem_ptr,
            elem_nodes,
            region,
            facet_sets: BTreeMap::new(),
        };
        let mut out = mesh;
        for (name, facets) in facet_sets {
            out.check_facet_list(&name, &facets)?;
            out.facet_sets.insert(name, facets);
        }
        Ok(out)
    }

    fn check_facet_list(&self, name: &str, facets: &[(usize, usize)]) -> Result<()> {
        for &(e, lf) in facets {
            if e >= self.element_count() {
                return Err(invalid(format!("facet set '{name}' references element {e}")));
            }
            if lf >= self.kinds[e].n_facets() {
                return Err(invalid(format!(
                    "facet set '{name}' references local facet {lf} of a {}",
                    self.kinds[e].name()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn element_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn coord(&self, node: usize) -> [f64; 3] {
        self.coords[node]
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn kind_of(&self, element: usize) -> ElementKind {
        self.kinds[element]
    }

    pub fn nodes_of(&self, element: usize) -> &[usize] {
        &self.elem_nodes[self.elem_ptr[element]..self.elem_ptr[element + 1]]
    }

    pub fn region_of(&self, element: usize) -> u32 {
        self.region[element]
    }

    pub fn region_tags(&self) -> &[u32] {
        &self.region
    }

    pub fn facet_set(&self, name: &str) -> Option<&[(usize, usize)]> {
        self.facet_sets.get(name).map(|v| v.as_slice())
    }

    pub fn facet_set_names(&self) -> impl Iterator<Item = &str> {
        self.facet_sets.keys().map(|s| s.as_str())
    }

    /// Element coordinates gathered into a dense array (padded to 3D).
    pub fn element_coords(&self, element: usize, out: &mut [[f64; 3]]) {
        for (i, &n) in self.nodes_of(element).iter().enumerate() {
            out[i] = self.coords[n];
        }
    }

    pub fn centroid(&self, element: usize) -> [f64; 3] {
        let nodes = self.nodes_of(element);
        let mut c = [0.0; 3];
        for &n in nodes {
            for r in 0..3 {
                c[r] += self.coords[n][r];
            }
        }
        for r in 0..3 {
            c[r] /= nodes.len() as f64;
        }
        c
    }

    /// Global node ids of a facet.
    pub fn facet_global_nodes(&self, element: usize, local_facet: usize) -> Vec<usize> {
        let conn = self.nodes_of(element);
        self.kinds[element]
            .facet_nodes(local_facet)
            .iter()
            .map(|&l| conn[l])
            .collect()
    }

    fn facet_key(&self, element: usize, local_facet: usize) -> Vec<usize> {
        let mut k = self.facet_global_nodes(element, local_facet);
        k.sort_unstable();
        k
    }

    /// All facets owned by exactly one element, i.e. the mesh boundary.
    pub fn boundary_facets(&self) -> Vec<(usize, usize)> {
        let mut seen: BTreeMap<Vec<usize>, (usize, usize, usize)> = BTreeMap::new();
        for e in 0..self.element_count() {
            for lf in 0..self.kinds[e].n_facets() {
                let key = self.facet_key(e, lf);
                seen.entry(key)
                    .and_modify(|v| v.2 += 1)
                    .or_insert((e, lf, 1));
            }
        }
        let mut out: Vec<(usize, usize)> = seen
            .into_values()
            .filter(|&(_, _, count)| count == 1)
            .map(|(e, lf, _)| (e, lf))
            .collect();
        out.sort_unstable();
        out
    }

    /// Interior facets owned by an element matching `owner` whose neighbor
    /// matches `other`; the facet normal then points from owner to neighbor.
    /// Used to measure flux across internal interfaces.
    pub fn interface_facets(
        &self,
        owner: impl Fn(usize) -> bool,
        other: impl Fn(usize) -> bool,
    ) -> Vec<(usize, usize)> {
        let mut by_key: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
        for e in 0..self.element_count() {
            for lf in 0..self.kinds[e].n_facets() {
                by_key.entry(self.facet_key(e, lf)).or_default().push((e, lf));
            }
        }
        let mut out = Vec::new();
        for pair in by_key.values() {
            if pair.len() != 2 {
                continue;
            }
            for (i, &(e, lf)) in pair.iter().enumerate() {
                let (ne, _) = pair[1 - i];
                if owner(e) && other(ne) {
                    out.push((e, lf));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Sum of element measures.
    pub fn total_volume(&self) -> Result<f64> {
        let mut coords = [[0.0; 3]; crate::element::MAX_ELEM_NODES];
        let mut vol = 0.0;
        for e in 0..self.element_count() {
            self.element_coords(e, &mut coords);
            vol += element_volume(self.kinds[e], &coords, e)?;
        }
        Ok(vol)
    }

    /// Verifies positive Jacobians at the default quadrature points of every
    /// element (errors with the offending element index).
    pub fn check_geometry(&self) -> Result<()> {
        self.total_volume().map(|_| ())
    }

    /// Copy with region tags assigned from a centroid classifier.
    pub fn tag_regions(&self, classify: impl Fn([f64; 3]) -> u32) -> Mesh {
        let mut out = self.clone();
        for e in 0..out.element_count() {
            out.region[e] = classify(self.centroid(e));
        }
        out
    }

    /// Copy with an extra named facet set (replaces an existing name).
    pub fn with_facet_set(&self, name: &str, facets: Vec<(usize, usize)>) -> Result<Mesh> {
        self.check_facet_list(name, &facets)?;
        let mut out = self.clone();
        out.facet_sets.insert(name.to_string(), facets);
        Ok(out)
    }

    pub fn node_near(&self, x: [f64; 3], tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (n, c) in self.coords.iter().enumerate() {
            let d2 = (c[0] - x[0]) * (c[0] - x[0])
                + (c[1] - x[1]) * (c[1] - x[1])
                + (c[2] - x[2]) * (c[2] - x[2]);
            if best.map_or(true, |(_, b)| d2 < b) {
                best = Some((n, d2));
            }
        }
        match best {
            Some((n, d2)) if d2 <= tol * tol => Some(n),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// structured generators

/// Uniform mesh of the unit interval with `n` elements; facet sets `left`
/// and `right` hold the two end points.
pub fn generate_interval(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(invalid("interval mesh needs at least one element"));
    }
    let mut coords = Vec::with_capacity(n + 1);
    for i in 0..=n {
        coords.push([i as f64 / n as f64, 0.0, 0.0]);
    }
    let elements = (0..n)
        .map(|e| (ElementKind::Line2, alloc::vec![e, e + 1]))
        .collect();
    let mut sets = BTreeMap::new();
    sets.insert("left".to_string(), alloc::vec![(0, 0)]);
    sets.insert("right".to_string(), alloc::vec![(n - 1, 1)]);
    Mesh::from_parts(1, coords, elements, Vec::new(), sets)
}

/// Structured quad or triangle mesh of the rectangle `min..max` with
/// `nx * ny` cells. Triangles split each cell along the diagonal from the
/// lower-left to the upper-right corner. Facet sets: `left`, `right`,
/// `bottom`, `top`.
pub fn generate_grid_2d(
    nx: usize,
    ny: usize,
    kind: ElementKind,
    min: [f64; 2],
    max: [f64; 2],
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(invalid("2D grid needs nx >= 1 and ny >= 1"));
    }
    if max[0] <= min[0] || max[1] <= min[1] {
        return Err(invalid("2D grid extent is empty"));
    }
    if kind.dim() != 2 {
        return Err(invalid("2D grid supports tri3 and quad4"));
    }
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            coords.push([
                min[0] + (max[0] - min[0]) * i as f64 / nx as f64,
                min[1] + (max[1] - min[1]) * j as f64 / ny as f64,
                0.0,
            ]);
        }
    }

    let mut elements = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut bottom = Vec::new();
    let mut top = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
            match kind {
                ElementKind::Quad4 => {
                    let e = elements.len();
                    elements.push((ElementKind::Quad4, alloc::vec![a, b, c, d]));
                    if j == 0 {
                        bottom.push((e, 0));
                    }
                    if i + 1 == nx {
                        right.push((e, 1));
                    }
                    if j + 1 == ny {
                        top.push((e, 2));
                    }
                    if i == 0 {
                        left.push((e, 3));
                    }
                }
                ElementKind::Tri3 => {
                    // lower triangle (a,b,c): edges ab (bottom), bc (right)
                    let e0 = elements.len();
                    elements.push((ElementKind::Tri3, alloc::vec![a, b, c]));
                    // upper triangle (a,c,d): edges cd (top), da (left)
                    let e1 = elements.len();
                    elements.push((ElementKind::Tri3, alloc::vec![a, c, d]));
                    if j == 0 {
                        bottom.push((e0, 0));
                    }
                    if i + 1 == nx {
                        right.push((e0, 1));
                    }
                    if j + 1 == ny {
                        top.push((e1, 1));
                    }
                    if i == 0 {
                        left.push((e1, 2));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    let mut sets = BTreeMap::new();
    sets.insert("left".to_string(), left);
    sets.insert("right".to_string(), right);
    sets.insert("bottom".to_string(), bottom);
    sets.insert("top".to_string(), top);
    Mesh::from_parts(2, coords, elements, Vec::new(), sets)
}

/// Structured hex mesh of the box `min..max`. Facet sets: `xmin`, `xmax`,
/// `ymin`, `ymax`, `zmin`, `zmax`.
pub fn generate_grid_3d(
    nx: usize,
    ny: usize,
    nz: usize,
    min: [f64; 3],
    max: [f64; 3],
) -> Result<Mesh> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(invalid("3D grid needs nx, ny, nz >= 1"));
    }
    for d in 0..3 {
        if max[d] <= min[d] {
            return Err(invalid("3D grid extent is empty"));
        }
    }
    let node = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                coords.push([
                    min[0] + (max[0] - min[0]) * i as f64 / nx as f64,
                    min[1] + (max[1] - min[1]) * j as f64 / ny as f64,
                    min[2] + (max[2] - min[2]) * k as f64 / nz as f64,
                ]);
            }
        }
    }
    let mut elements = Vec::new();
    let mut sets: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for name in ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"] {
        sets.insert(name.to_string(), Vec::new());
    }
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let e = elements.len();
                elements.push((
                    ElementKind::Hex8,
                    alloc::vec![
                        node(i, j, k),
                        node(i + 1, j, k),
                        node(i + 1, j + 1, k),
                        node(i, j + 1, k),
                        node(i, j, k + 1),
                        node(i + 1, j, k + 1),
                        node(i + 1, j + 1, k + 1),
                        node(i, j + 1, k + 1),
                    ],
                ));
                if k == 0 {
                    sets.get_mut("zmin").unwrap().push((e, 0));
                }
                if k + 1 == nz {
                    sets.get_mut("zmax").unwrap().push((e, 1));
                }
                if j == 0 {
                    sets.get_mut("ymin").unwrap().push((e, 2));
                }
                if i + 1 == nx {
                    sets.get_mut("xmax").unwrap().push((e, 3));
                }
                if j + 1 == ny {
                    sets.get_mut("ymax").unwrap().push((e, 4));
                }
                if i == 0 {
                    sets.get_mut("xmin").unwrap().push((e, 5));
                }
            }
        }
    }
    Mesh::from_parts(3, coords, elements, Vec::new(), sets)
}

// ---------------------------------------------------------------------------
// text format

pub fn to_ascii(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{} {} {}\n",
        mesh.dim,
        mesh.node_count(),
        mesh.element_count()
    ));
    for c in &mesh.coords {
        let mut line = String::new();
        for d in 0..mesh.dim {
            if d > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:.16e}", c[d]));
        }
        s.push_str(&line);
        s.push('\n');
    }
    for e in 0..mesh.element_count() {
        s.push_str(mesh.kinds[e].name());
        for &n in mesh.nodes_of(e) {
            s.push_str(&format!(" {n}"));
        }
        s.push('\n');
    }
    for (name, facets) in &mesh.facet_sets {
        s.push_str(&format!("facetset {name} {}\n", facets.len()));
        for &(e, lf) in facets {
            s.push_str(&format!("{e} {lf}\n"));
        }
    }
    if mesh.region.iter().any(|&t| t != 0) {
        s.push_str("regions");
        for &t in &mesh.region {
            s.push_str(&format!(" {t}"));
        }
        s.push('\n');
    }
    s
}

struct Tokens<'a> {
    line_starts: Vec<(usize, &'a str)>, // (line number, line body)
    cur_line: usize,
    cur_iter: core::str::SplitWhitespace<'a>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut line_starts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("");
            if !body.trim().is_empty() {
                line_starts.push((i + 1, body));
            }
        }
        Tokens {
            line_starts,
            cur_line: 0,
            cur_iter: "".split_whitespace(),
            pos: 0,
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        loop {
            if let Some(tok) = self.cur_iter.next() {
                return Some((self.cur_line, tok));
            }
            if self.pos >= self.line_starts.len() {
                return None;
            }
            let (line, body) = self.line_starts[self.pos];
            self.pos += 1;
            self.cur_line = line;
            self.cur_iter = body.split_whitespace();
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn need<'a>(toks: &mut Tokens<'a>, what: &str) -> Result<(usize, &'a str)> {
    toks.next()
        .ok_or_else(|| parse_err(0, format!("unexpected end of input, expected {what}")))
}

pub fn parse_ascii(text: &str) -> Result<Mesh> {
    let mut toks = Tokens::new(text);
    let (l, t) = need(&mut toks, "dimension")?;
    let dim: usize = t.parse().map_err(|_| parse_err(l, "bad dimension"))?;
    let (l, t) = need(&mut toks, "node count")?;
    let n_nodes: usize = t.parse().map_err(|_| parse_err(l, "bad node count"))?;
    let (l, t) = need(&mut toks, "element count")?;
    let n_elems: usize = t.parse().map_err(|_| parse_err(l, "bad element count"))?;
    if !(1..=3).contains(&dim) {
        return Err(parse_err(l, "dimension must be 1, 2 or 3"));
    }

    let mut coords = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let mut c = [0.0; 3];
        for d in 0..dim {
            let (l, t) = need(&mut toks, "node coordinate")?;
            c[d] = t
                .parse()
                .map_err(|_| parse_err(l, format!("bad coordinate for node {i}")))?;
        }
        coords.push(c);
    }

    let mut elements = Vec::with_capacity(n_elems);
    for e in 0..n_elems {
        let (l, t) = need(&mut toks, "element kind")?;
        let kind = ElementKind::from_name(t)
            .ok_or_else(|| parse_err(l, format!("unknown element kind '{t}'")))?;
        let mut conn = Vec::with_capacity(kind.n_nodes());
        for _ in 0..kind.n_nodes() {
            let (l, t) = need(&mut toks, "node id")?;
            conn.push(
                t.parse()
                    .map_err(|_| parse_err(l, format!("bad node id in element {e}")))?,
            );
        }
        elements.push((kind, conn));
    }

    let mut facet_sets: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    let mut region = Vec::new();
    while let Some((l, t)) = toks.next() {
        match t {
            "facetset" => {
                let (l, name) = need(&mut toks, "facet set name")?;
                let name = name.to_string();
                let (l2, t) = need(&mut toks, "facet count")?;
                let count: usize = t.parse().map_err(|_| parse_err(l2, "bad facet count"))?;
                let mut facets = Vec::with_capacity(count);
                for _ in 0..count {
                    let (l, t) = need(&mut toks, "facet element")?;
                    let e: usize = t.parse().map_err(|_| parse_err(l, "bad facet element"))?;
                    let (l, t) = need(&mut toks, "local facet")?;
                    let lf: usize = t.parse().map_err(|_| parse_err(l, "bad local facet"))?;
                    facets.push((e, lf));
                }
                if facet_sets.insert(name.clone(), facets).is_some() {
                    return Err(parse_err(l, format!("duplicate facet set '{name}'")));
                }
            }
            "regions" => {
                for _ in 0..n_elems {
                    let (l, t) = need(&mut toks, "region tag")?;
                    region.push(t.parse().map_err(|_| parse_err(l, "bad region tag"))?);
                }
            }
            other => return Err(parse_err(l, format!("unexpected token '{other}'"))),
        }
    }

    Mesh::from_parts(dim, coords, elements, region, facet_sets)
        .map_err(|e| match e {
            Error::InvalidArgument(m) => parse_err(0, m),
            other => other,
        })
}
