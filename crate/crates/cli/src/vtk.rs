//! Legacy ASCII VTK output for nodal solutions.
//!
//! One `DATASET UNSTRUCTURED_GRID` per file: POINTS (always three
//! components), CELLS with explicit connectivity sizes, CELL_TYPES (line 3,
//! triangle 5, quad 9, hexahedron 12), then POINT_DATA carrying SCALARS
//! `pressure` and VECTORS `velocity`, the latter zero-padded to three
//! components below 3D. Numbers carry 17 significant digits so a reload
//! reproduces the doubles exactly.

use std::fs;
use std::path::Path;

use porodarcy_core::mesh::Mesh;
use porodarcy_core::picard::Solution;

use crate::csvio::full;
use crate::error::{invalid, io_err, Result};

pub fn write_vtk(mesh: &Mesh, solution: &Solution, path: &Path) -> Result<()> {
    let text = vtk_string(mesh, &solution.pressure, &solution.velocity)?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn vtk_string(mesh: &Mesh, pressure: &[f64], velocity: &[[f64; 3]]) -> Result<String> {
    let n = mesh.node_count();
    if pressure.len() != n || velocity.len() != n {
        return Err(invalid(format!(
            "fields carry {} pressures and {} velocities for {} mesh nodes",
            pressure.len(),
            velocity.len(),
            n
        )));
    }
    let ne = mesh.element_count();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("porodarcy nodal solution\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");

    s.push_str(&format!("POINTS {n} double\n"));
    for c in mesh.coords() {
        s.push_str(&format!("{} {} {}\n", full(c[0]), full(c[1]), full(c[2])));
    }

    let list_len: usize = (0..ne).map(|e| 1 + mesh.nodes_of(e).len()).sum();
    s.push_str(&format!("CELLS {ne} {list_len}\n"));
    for e in 0..ne {
        let conn = mesh.nodes_of(e);
        s.push_str(&conn.len().to_string());
        for &a in conn {
            s.push(' ');
            s.push_str(&a.to_string());
        }
        s.push('\n');
    }
    s.push_str(&format!("CELL_TYPES {ne}\n"));
    for e in 0..ne {
        s.push_str(&format!("{}\n", mesh.kind_of(e).vtk_cell_type()));
    }

    s.push_str(&format!("POINT_DATA {n}\n"));
    s.push_str("SCALARS pressure double 1\n");
    s.push_str("LOOKUP_TABLE default\n");
    for &p in pressure {
        s.push_str(&full(p));
        s.push('\n');
    }
    s.push_str("VECTORS velocity double\n");
    for v in velocity {
        s.push_str(&format!("{} {} {}\n", full(v[0]), full(v[1]), full(v[2])));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use porodarcy_core::mesh::generate_interval;

    #[test]
    fn mismatched_fields_are_rejected() {
        let mesh = generate_interval(4).unwrap();
        let p = vec![0.0; 3];
        let v = vec![[0.0; 3]; mesh.node_count()];
        assert!(vtk_string(&mesh, &p, &v).is_err());
    }

    #[test]
    fn output_is_deterministic() {
        let mesh = generate_interval(4).unwrap();
        let p: Vec<f64> = (0..5).map(|i| i as f64 / 7.0).collect();
        let v = vec![[1.0, 0.0, 0.0]; 5];
        let a = vtk_string(&mesh, &p, &v).unwrap();
        let b = vtk_string(&mesh, &p, &v).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(!a.contains('\r'));
    }
}
