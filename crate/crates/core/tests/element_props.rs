mod common;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use proptest::prelude::*;
use vem3d_core::dense::{max_abs, sorted_eigenvalues};
use vem3d_core::elemvem::{
    consistency_matrix, element_interpolate, element_operators, local_load, local_stiffness, pollution_diagnostics,
    stabilization_matrix, BasisChoice, Stabilization,
};
use vem3d_core::facevem::{face_operators, FaceBasis};
use vem3d_core::mesh::{build_collapsing_mesh, build_cube_mesh, PolyMesh};
use vem3d_core::problems::ExactSolution;

use common::{affine_image, max_diff, p1_fem_stiffness, sample, tetrahedron_mesh, test_cells};

#[test]
fn projector_identities_on_test_cells() {
    for (label, mesh, cell) in test_cells() {
        for p in 1..=4 {
            for choice in BasisChoice::ALL {
                let ops = element_operators(&mesh, cell, p, choice).unwrap();
                let n = ops.basis.count();
                let id = DMatrix::identity(n, n);
                let scale = max_abs(&ops.g).max(1.0);
                assert!(max_abs(&(&ops.b * &ops.d - &ops.g)) / scale < 1e-9, "{label} p{p} {choice}: G = BD");
                assert!(max_abs(&(&ops.pi_nabla * &ops.d - &id)) < 1e-9, "{label} p{p} {choice}: Π*D");
                assert!(max_abs(&(&ops.pi_zero * &ops.d - &id)) < 1e-9, "{label} p{p} {choice}: Π⁰D");
                if choice != BasisChoice::Standard {
                    assert!(max_abs(&(&ops.h - &id)) < 1e-9, "{label} p{p} {choice}: H̄");
                }
            }
        }
    }
}

fn smooth(x: &[f64; 3]) -> f64 {
    (0.7 * x[0] - 0.4 * x[1] + 0.3 * x[2]).exp() + (2.0 * x[1] * x[2]).sin()
}

#[test]
fn projections_agree_across_basis_choices() {
    for (label, mesh, cell) in test_cells() {
        for p in 1..=4 {
            let q = 2 * p as usize + 6;
            let mut reference: Option<(Vec<f64>, Vec<f64>)> = None;
            for choice in BasisChoice::ALL {
                let ops = element_operators(&mesh, cell, p, choice).unwrap();
                let dofs = element_interpolate(&mesh, &ops, &smooth, q).unwrap();
                let nabla = sample(&mesh, &ops, &(&ops.pi_nabla_mono * &dofs), 4);
                let zero = sample(&mesh, &ops, &(&ops.pi_zero_mono * &dofs), 4);
                match &reference {
                    None => reference = Some((nabla, zero)),
                    Some((rn, rz)) => {
                        assert!(max_diff(rn, &nabla) < 1e-8, "{label} p{p} {choice} Π∇");
                        assert!(max_diff(rz, &zero) < 1e-8, "{label} p{p} {choice} Π⁰");
                    }
                }
            }
        }
    }
}

#[test]
fn consistency_part_agrees_across_choices_as_map_on_functions() {
    let mesh = build_cube_mesh(1).unwrap();
    let f = |x: &[f64; 3]| smooth(x);
    let g = |x: &[f64; 3]| (x[0] * x[1]).cos() + x[2].powi(4);
    let mut values = Vec::new();
    for choice in BasisChoice::ALL {
        let ops = element_operators(&mesh, 0, 3, choice).unwrap();
        let u = element_interpolate(&mesh, &ops, &f, 12).unwrap();
        let v = element_interpolate(&mesh, &ops, &g, 12).unwrap();
        values.push((u.transpose() * consistency_matrix(&ops) * v)[(0, 0)]);
    }
    assert!((values[0] - values[1]).abs() < 1e-8 && (values[0] - values[2]).abs() < 1e-8, "{values:?}");
}

#[test]
fn orthonormal_face_moment_block() {
    let mesh = build_collapsing_mesh(0).unwrap();
    for face in 0..mesh.num_faces() {
        for p in 2..=4 {
            let ops = face_operators(&mesh, face, p, FaceBasis::Orthonormal).unwrap();
            let nm = ops.layout.num_moments;
            let block = ops.d.view((ops.layout.num_skeletal(), 0), (nm, nm)).clone_owned();
            let expected = DMatrix::identity(nm, nm) / ops.area;
            assert!(max_abs(&(block - &expected)) * ops.area < 1e-10, "face {face} p{p}");
        }
    }
}

#[test]
fn single_tetrahedron_matches_linear_fem() {
    let v = [[0.1, 0.0, 0.2], [1.3, 0.1, 0.0], [0.2, 0.9, 0.1], [0.4, 0.3, 1.1]];
    let mesh = tetrahedron_mesh(v);
    let oracle = p1_fem_stiffness(&v);
    for choice in BasisChoice::ALL {
        let ops = element_operators(&mesh, 0, 1, choice).unwrap();
        // vertex dofs are listed by ascending id, matching v
        let kc = consistency_matrix(&ops);
        assert!(max_abs(&(kc - &oracle)) < 1e-10, "{choice}");
    }
}

#[test]
fn stabilization_recipes() {
    let mesh = build_cube_mesh(1).unwrap();
    let ops = element_operators(&mesh, 0, 1, BasisChoice::Standard).unwrap();
    let s1 = stabilization_matrix(&ops, Stabilization::S1);
    assert_eq!(s1, DMatrix::from_diagonal_element(8, 8, 3f64.sqrt()));
    let ops = element_operators(&mesh, 0, 2, BasisChoice::Standard).unwrap();
    let s3 = stabilization_matrix(&ops, Stabilization::S3);
    let n = ops.layout.num_dofs();
    assert_eq!(s3[(n - 1, n - 1)], 0.0);
    assert!((0..n - 1).all(|i| s3[(i, i)] >= 3f64.sqrt()));
}

#[test]
fn load_vector_oracles() {
    let mesh = build_collapsing_mesh(0).unwrap();
    let zero = |_: &[f64; 3]| 0.0;
    let one = |_: &[f64; 3]| 1.0;
    for p in 2..=3 {
        let ops = element_operators(&mesh, 1, p, BasisChoice::Orthogonal).unwrap();
        assert!(local_load(&mesh, &ops, &zero, 8).unwrap().iter().all(|v| *v == 0.0));
        // (1, Π⁰φ_i) = ∫ φ_i = |E|^{3/2} times the first orthonormal bulk moment
        let b = local_load(&mesh, &ops, &one, 8).unwrap();
        let vol = ops.geometry.volume;
        let mut expected = DVector::zeros(b.len());
        expected[ops.layout.bulk_offset()] = vol.powf(1.5);
        assert!((&b - expected).amax() < 1e-10 * vol.powf(1.5), "p{p}");
    }
    let ops = element_operators(&mesh, 0, 3, BasisChoice::Standard).unwrap();
    let f = |x: &[f64; 3]| ExactSolution::Sine.forcing(x);
    let b = local_load(&mesh, &ops, &f, 12).unwrap();
    let rule = mesh.cell_rule(0, 14).unwrap();
    for i in 0..b.len() {
        let col = ops.pi_zero_mono.column(i).clone_owned();
        let dense: f64 = rule.points.iter().zip(&rule.weights).map(|(x, w)| w * f(x) * ops.eval(&col, x)).sum();
        assert!((b[i] - dense).abs() < 1e-9, "dof {i}: {} vs {dense}", b[i]);
    }
}

#[test]
fn pollution_factor_is_at_least_one() {
    for (label, mesh, cell) in test_cells() {
        for p in 1..=3 {
            let ops = element_operators(&mesh, cell, p, BasisChoice::Hybrid).unwrap();
            for stab in [Stabilization::S1, Stabilization::S2] {
                let est = pollution_diagnostics(&ops, &stabilization_matrix(&ops, stab));
                assert!(est.alpha >= 1.0 && est.alpha.is_finite(), "{label} p{p} {stab}: {est:?}");
            }
        }
    }
}

fn distorted(base: usize, m: [f64; 9], t: [f64; 3]) -> (PolyMesh, usize) {
    let (_, mesh, cell) = test_cells().swap_remove(base);
    let a = Matrix3::identity() + 0.25 * Matrix3::from_row_slice(&m);
    (affine_image(&mesh, &a, &Vector3::from(t)), cell)
}

fn choice_strategy() -> impl Strategy<Value = BasisChoice> {
    prop::sample::select(BasisChoice::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stiffness_is_symmetric_psd_with_constant_kernel(
        base in 0usize..4,
        m in prop::array::uniform9(-1.0f64..1.0),
        t in prop::array::uniform3(-3.0f64..3.0),
        p in 1u32..=4,
        choice in choice_strategy(),
    ) {
        let (mesh, cell) = distorted(base, m, t);
        let ops = element_operators(&mesh, cell, p, choice).unwrap();
        for stab in [Stabilization::S1, Stabilization::S2] {
            let k = local_stiffness(&ops, stab);
            prop_assert!(max_abs(&(&k - k.transpose())) <= 1e-10 * max_abs(&k));
            // rank is judged on the Jacobi-scaled matrix, free of dof scaling
            let d = k.diagonal().map(|x| x.sqrt().recip());
            let ks = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| k[(i, j)] * d[i] * d[j]);
            let ev = sorted_eigenvalues(&ks);
            let top = ev[ev.len() - 1];
            prop_assert!(ev[0].abs() <= 1e-9 * top, "{:?}", &ev[..3]);
            prop_assert!(ev[1] > 1e-9 * top, "{} p{} {}: second eigenvalue {} vs {}", choice, p, stab, ev[1], top);
            prop_assert!((&k * ops.d.column(0)).amax() <= 1e-9 * max_abs(&k));
        }
        let k3 = local_stiffness(&ops, Stabilization::S3);
        prop_assert!((&k3 * ops.d.column(0)).amax() <= 1e-9 * max_abs(&k3));
    }

    #[test]
    fn polynomials_see_only_the_consistency_part(
        base in 0usize..4,
        m in prop::array::uniform9(-1.0f64..1.0),
        p in 1u32..=3,
        choice in choice_strategy(),
        coeffs in prop::collection::vec(-1.0f64..1.0, 20),
    ) {
        let (mesh, cell) = distorted(base, m, [0.0; 3]);
        let ops = element_operators(&mesh, cell, p, choice).unwrap();
        let n = ops.basis.count();
        let c = DVector::from_iterator(n, coeffs.into_iter().take(n));
        let dofs = &ops.d * &c;
        let k = local_stiffness(&ops, Stabilization::S2);
        let expected = ops.pi_nabla.transpose() * &ops.g_tilde * &c;
        prop_assert!((&k * &dofs - expected).amax() <= 1e-9 * max_abs(&k).max(1.0));
    }

    #[test]
    fn stabilization_is_positive_off_the_polynomials(
        base in 0usize..4,
        m in prop::array::uniform9(-1.0f64..1.0),
        p in 1u32..=3,
        choice in choice_strategy(),
    ) {
        let (mesh, cell) = distorted(base, m, [0.0; 3]);
        let ops = element_operators(&mesh, cell, p, choice).unwrap();
        // orthonormal basis of ker Π* from the SVD
        let nd = ops.layout.num_dofs();
        let svd = ops.pi_nabla.transpose().svd(true, false);
        let u = svd.u.unwrap();
        let full = DMatrix::<f64>::identity(nd, nd) - &u * u.transpose();
        for stab in [Stabilization::S1, Stabilization::S2] {
            let s = stabilization_matrix(&ops, stab);
            for j in 0..nd {
                let v = full.column(j);
                if v.norm() < 1e-8 {
                    continue;
                }
                let v = v / v.norm();
                let q = (v.transpose() * &s * &v)[(0, 0)];
                prop_assert!(q > 0.0);
                // v has zero projection, so K(v, v) = S(v, v)
                let proj = &ops.pi_nabla * &v;
                prop_assert!(proj.amax() < 1e-10 * ops.pi_nabla.amax());
                let k = local_stiffness(&ops, stab);
                let kv = (v.transpose() * &k * &v)[(0, 0)];
                prop_assert!((kv - q).abs() <= 1e-9 * q.max(1.0));
            }
        }
    }

    #[test]
    fn face_projectors_independent_of_basis_and_frame(
        m in prop::array::uniform9(-1.0f64..1.0),
        p in 1u32..=4,
    ) {
        let (mesh, _) = distorted(3, m, [0.0; 3]);
        let f = |x: &[f64; 2]| (0.3 * x[0] - 0.8 * x[1]).exp();
        for face in mesh.cells()[1].iter().map(|fr| fr.face) {
            let mono = face_operators(&mesh, face, p, FaceBasis::Monomial).unwrap();
            let orth = face_operators(&mesh, face, p, FaceBasis::Orthonormal).unwrap();
            let dm = vem3d_core::facevem::face_interpolate(&mesh, &mono, f, 2 * p as usize + 6).unwrap();
            let dn = vem3d_core::facevem::face_interpolate(&mesh, &orth, f, 2 * p as usize + 6).unwrap();
            let cm = &mono.pi_nabla_mono * DVector::from_vec(dm);
            let cn = &orth.pi_nabla_mono * DVector::from_vec(dn);
            prop_assert!((cm - cn).amax() < 1e-8, "face {}", face);
        }
    }
}
