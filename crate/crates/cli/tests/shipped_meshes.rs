//! The mesh files under meshes/ are generated by `porodarcy gen-meshes`.
//! These tests pin them to the in-tree builders so a builder change cannot
//! silently desynchronize the shipped files.

use std::fs;
use std::path::{Path, PathBuf};

use porodarcy::meshfile::{read_mesh, SHIPPED_MESHES};
use porodarcy_core::benchmarks::{build_problem, BuildOptions};
use porodarcy_core::mesh::to_ascii;

fn meshes_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../meshes")
}

#[test]
fn shipped_files_match_their_builders_byte_for_byte() {
    for (problem, file) in SHIPPED_MESHES {
        let spec = build_problem(problem, &BuildOptions::default()).unwrap();
        let path = meshes_dir().join(file);
        let on_disk = fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}; run 'porodarcy gen-meshes'", path.display()));
        assert_eq!(
            on_disk,
            to_ascii(&spec.mesh),
            "{file} is stale; run 'porodarcy gen-meshes'"
        );
    }
}

#[test]
fn shipped_files_parse_with_their_boundary_sets_intact() {
    for (problem, file) in SHIPPED_MESHES {
        let spec = build_problem(problem, &BuildOptions::default()).unwrap();
        let mesh = read_mesh(&meshes_dir().join(file)).unwrap();
        assert_eq!(mesh.node_count(), spec.mesh.node_count());
        assert_eq!(mesh.element_count(), spec.mesh.element_count());
        let names: Vec<&str> = mesh.facet_set_names().collect();
        let expected: Vec<&str> = spec.mesh.facet_set_names().collect();
        assert_eq!(names, expected);
    }
}
