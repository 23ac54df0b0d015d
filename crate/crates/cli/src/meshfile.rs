//! Mesh files on disk: the solver's ASCII format plus a human summary and
//! the generator for the shipped desk-scale meshes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use porodarcy_core::benchmarks::{build_problem, BuildOptions};
use porodarcy_core::mesh::{parse_ascii, to_ascii, Mesh};

use crate::error::{io_err, Result};

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(parse_ascii(&text)?)
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, to_ascii(mesh)).map_err(|e| io_err(path, e))
}

pub fn info_string(mesh: &Mesh) -> String {
    let mut s = format!("dimension: {}\n", mesh.dim());
    s.push_str(&format!("nodes: {}\n", mesh.node_count()));

    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for e in 0..mesh.element_count() {
        *kinds.entry(mesh.kind_of(e).name()).or_insert(0) += 1;
    }
    let kind_list: Vec<String> = kinds.iter().map(|(k, c)| format!("{k} {c}")).collect();
    s.push_str(&format!(
        "elements: {} ({})\n",
        mesh.element_count(),
        kind_list.join(", ")
    ));

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in mesh.coords() {
        for d in 0..mesh.dim() {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let spans: Vec<String> = (0..mesh.dim())
        .map(|d| format!("[{}, {}]", lo[d], hi[d]))
        .collect();
    s.push_str(&format!("bounding box: {}\n", spans.join(" x ")));

    match mesh.total_volume() {
        Ok(v) => s.push_str(&format!("volume: {v}\n")),
        Err(e) => s.push_str(&format!("volume: not computable ({e})\n")),
    }

    let mut regions: BTreeMap<u32, usize> = BTreeMap::new();
    for &t in mesh.region_tags() {
        *regions.entry(t).or_insert(0) += 1;
    }
    if regions.len() > 1 || !regions.contains_key(&0) {
        let list: Vec<String> = regions
            .iter()
            .map(|(t, c)| format!("{t} x{c}"))
            .collect();
        s.push_str(&format!("regions: {}\n", list.join(", ")));
    } else {
        s.push_str("regions: untagged\n");
    }

    let names: Vec<&str> = mesh.facet_set_names().collect();
    if names.is_empty() {
        s.push_str("facet sets: none\n");
    } else {
        let list: Vec<String> = names
            .iter()
            .map(|n| format!("{n} ({})", mesh.facet_set(n).unwrap().len()))
            .collect();
        s.push_str(&format!("facet sets: {}\n", list.join(", ")));
    }
    s
}

/// The desk-scale meshes shipped under `meshes/`, as (catalog problem,
/// file name). `gen-meshes` regenerates them; a test pins the files to the
/// builders byte for byte.
pub const SHIPPED_MESHES: [(&str, &str); 2] = [
    ("regions", "regions_desk.msh"),
    ("leakage-coarse", "leakage_desk.msh"),
];

/// Writes the shipped meshes into `dir`, returning one (path, nodes,
/// elements) entry per file.
pub fn generate_shipped_meshes(dir: &Path) -> Result<Vec<(PathBuf, usize, usize)>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for (problem, file) in SHIPPED_MESHES {
        let spec = build_problem(problem, &BuildOptions::default())?;
        let path = dir.join(file);
        write_mesh(&spec.mesh, &path)?;
        written.push((path, spec.mesh.node_count(), spec.mesh.element_count()));
    }
    Ok(written)
}
