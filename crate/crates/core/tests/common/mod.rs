#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use vem3d_core::elemvem::ElementOperators;
use vem3d_core::mesh::{build_collapsing_mesh, build_cube_mesh, mesh_from_cell_cycles, Point3, PolyMesh};

/// Triangular prism over the triangle (0,0), (1,0), (0,1) with height 1.
pub fn wedge_mesh() -> PolyMesh {
    let v = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    let cycles = vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 1, 4, 3], vec![1, 2, 5, 4], vec![2, 0, 3, 5]];
    mesh_from_cell_cycles(v, vec![cycles]).unwrap()
}

pub fn tetrahedron_mesh(v: [Point3; 4]) -> PolyMesh {
    let cycles = vec![vec![0, 1, 2], vec![0, 1, 3], vec![1, 2, 3], vec![0, 2, 3]];
    mesh_from_cell_cycles(v.to_vec(), vec![cycles]).unwrap()
}

pub fn reference_tetrahedron() -> PolyMesh {
    tetrahedron_mesh([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
}

/// Cube, wedge and collapsing octahedron (plus one of its neighbours) as
/// (label, mesh, cell) triples.
pub fn test_cells() -> Vec<(&'static str, PolyMesh, usize)> {
    vec![
        ("cube", build_cube_mesh(1).unwrap(), 0),
        ("wedge", wedge_mesh(), 0),
        ("octahedron", build_collapsing_mesh(0).unwrap(), 0),
        ("collapse-neighbour", build_collapsing_mesh(0).unwrap(), 1),
    ]
}

/// Image of a mesh under `x ↦ A x + t` (`det A > 0`).
pub fn affine_image(mesh: &PolyMesh, a: &Matrix3<f64>, t: &Vector3<f64>) -> PolyMesh {
    let verts = mesh
        .vertices()
        .iter()
        .map(|x| {
            let y = a * Vector3::from(*x) + t;
            [y[0], y[1], y[2]]
        })
        .collect();
    PolyMesh::new(verts, mesh.faces().to_vec(), mesh.cells().to_vec()).unwrap()
}

/// Classical P1 stiffness `|T| ∇λ_i·∇λ_j` of a tetrahedron.
pub fn p1_fem_stiffness(v: &[Point3; 4]) -> DMatrix<f64> {
    let m = Matrix3::from_fn(|i, j| v[j + 1][i] - v[0][i]);
    let vol = m.determinant().abs() / 6.0;
    let minv = m.try_inverse().unwrap();
    let mut grads = [Vector3::zeros(); 4];
    for k in 0..3 {
        grads[k + 1] = minv.row(k).transpose();
    }
    grads[0] = -(grads[1] + grads[2] + grads[3]);
    DMatrix::from_fn(4, 4, |i, j| vol * grads[i].dot(&grads[j]))
}

/// Polynomial given by monomial coefficients evaluated on the points of a
/// cell rule.
pub fn sample(mesh: &PolyMesh, ops: &ElementOperators, coeffs: &DVector<f64>, degree: usize) -> Vec<f64> {
    let rule = mesh.cell_rule(ops.layout.cell, degree).unwrap();
    rule.points.iter().map(|x| ops.eval(coeffs, x)).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}
