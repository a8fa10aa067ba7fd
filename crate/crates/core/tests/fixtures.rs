use std::path::PathBuf;

use vem3d_core::analysis::compute_errors;
use vem3d_core::assembly::{assemble, solve};
use vem3d_core::elemvem::{BasisChoice, Stabilization};
use vem3d_core::mesh::{load_mesh, PolyMesh};
use vem3d_core::problems::ExactSolution;

fn fixture(name: &str) -> PolyMesh {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    load_mesh(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const ALL: [&str; 6] = [
    "voronoi_8.mesh",
    "voronoi_27.mesh",
    "voronoi_64.mesh",
    "rand_8.mesh",
    "rand_27.mesh",
    "rand_64.mesh",
];

#[test]
fn fixtures_load_and_tile_the_cube() {
    for name in ALL {
        let m = fixture(name);
        let vol: f64 = (0..m.num_cells()).map(|c| m.cell_geometry(c).unwrap().volume).sum();
        assert!((vol - 1.0).abs() < 1e-10, "{name}: total volume {vol}");
        for c in 0..m.num_cells() {
            let euler = m.cell_vertices(c).len() as i64 - m.cell_edges(c).len() as i64 + m.cells()[c].len() as i64;
            assert_eq!(euler, 2, "{name} cell {c}");
        }
        for f in 0..m.num_faces() {
            if m.is_boundary_face(f) {
                let n = m.face_geometry(f).normal;
                assert!(n.iter().filter(|x| x.abs() > 1.0 - 1e-12).count() == 1, "{name} face {f}");
            }
        }
    }
}

fn assert_patch(name: &str, p: u32, choice: BasisChoice, tol: f64) {
    let m = fixture(name);
    let a = assemble(&m, p, choice, Stabilization::S2, ExactSolution::Linear).unwrap();
    let s = solve(&a).unwrap();
    let e = compute_errors(&m, &a, &s.values, ExactSolution::Linear).unwrap();
    assert!(e.h1_rel < tol && e.l2_rel < tol, "{name} p{p} {choice}: {e:?}");
}

#[test]
fn patch_test_on_voronoi_fixtures() {
    for p in 1..=3 {
        for choice in BasisChoice::ALL {
            assert_patch("voronoi_27.mesh", p, choice, 1e-9);
        }
    }
}

#[test]
fn patch_test_on_random_fixtures() {
    for p in 1..=3 {
        for choice in [BasisChoice::Standard, BasisChoice::Hybrid] {
            assert_patch("rand_27.mesh", p, choice, 1e-9);
        }
        // orthonormal face moments scale like |F|^(-1/2); rand_27 has faces of area 6e-8
        assert_patch("rand_27.mesh", p, BasisChoice::Orthogonal, 1e-6);
    }
}
