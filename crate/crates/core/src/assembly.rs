//! Global dof numbering, assembly of the Dirichlet problem and its solution.

use rayon::prelude::*;

use crate::elemvem::{
    element_operators_with_faces, local_load, local_stiffness, BasisChoice, ElementOperators, Stabilization,
};
use crate::error::{Result, VemError};
use crate::facevem::{face_interpolate, face_operators, FaceOperators, SkeletalDof};
use crate::mesh::PolyMesh;
use crate::polybasis::dim_poly;
use crate::problems::ExactSolution;
use crate::sparse::{conjugate_gradient, norm2, rcm_ordering, CscMatrix, EnvelopeCholesky};

/// Global numbering: vertices, edge nodes (edge by edge), face moments (face
/// by face), bulk moments (cell by cell).
#[derive(Debug, Clone)]
pub struct DofMap {
    pub degree: u32,
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_faces: usize,
    pub num_cells: usize,
    pub per_edge: usize,
    pub per_face: usize,
    pub per_cell: usize,
    /// Dofs carried by boundary vertices, edges and faces.
    pub dirichlet: Vec<bool>,
}

impl DofMap {
    pub fn num_dofs(&self) -> usize {
        self.num_vertices + self.num_edges * self.per_edge + self.num_faces * self.per_face + self.num_cells * self.per_cell
    }

    pub fn skeletal(&self, s: &SkeletalDof) -> usize {
        match *s {
            SkeletalDof::Vertex(v) => v,
            SkeletalDof::EdgeNode { edge, node } => self.num_vertices + edge * self.per_edge + node,
        }
    }

    pub fn face_moment(&self, face: usize, j: usize) -> usize {
        self.num_vertices + self.num_edges * self.per_edge + face * self.per_face + j
    }

    pub fn bulk(&self, cell: usize, j: usize) -> usize {
        self.num_vertices + self.num_edges * self.per_edge + self.num_faces * self.per_face + cell * self.per_cell + j
    }

    /// Global index of every local dof of an element.
    pub fn element_dofs(&self, ops: &ElementOperators) -> Vec<usize> {
        let lay = &ops.layout;
        let mut out: Vec<usize> = lay.skeletal.iter().map(|s| self.skeletal(s)).collect();
        for &f in &lay.faces {
            out.extend((0..lay.moments_per_face).map(|j| self.face_moment(f, j)));
        }
        out.extend((0..lay.num_bulk).map(|j| self.bulk(lay.cell, j)));
        out
    }

    pub fn num_free(&self) -> usize {
        self.dirichlet.iter().filter(|d| !**d).count()
    }
}

pub fn build_dof_map(mesh: &PolyMesh, p: u32) -> DofMap {
    let mut map = DofMap {
        degree: p,
        num_vertices: mesh.num_vertices(),
        num_edges: mesh.num_edges(),
        num_faces: mesh.num_faces(),
        num_cells: mesh.num_cells(),
        per_edge: p as usize - 1,
        per_face: dim_poly(p as i32 - 2, 2),
        per_cell: dim_poly(p as i32 - 2, 3),
        dirichlet: Vec::new(),
    };
    let mut dirichlet = vec![false; map.num_dofs()];
    for v in 0..mesh.num_vertices() {
        dirichlet[v] = mesh.is_boundary_vertex(v);
    }
    for e in 0..mesh.num_edges() {
        if mesh.is_boundary_edge(e) {
            for j in 0..map.per_edge {
                dirichlet[map.skeletal(&SkeletalDof::EdgeNode { edge: e, node: j })] = true;
            }
        }
    }
    for f in 0..mesh.num_faces() {
        if mesh.is_boundary_face(f) {
            for j in 0..map.per_face {
                dirichlet[map.face_moment(f, j)] = true;
            }
        }
    }
    map.dirichlet = dirichlet;
    map
}

/// Assembled global system with the Dirichlet values of the exact solution.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub dofmap: DofMap,
    pub choice: BasisChoice,
    pub stabilization: Stabilization,
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    /// Boundary values on Dirichlet dofs, zero elsewhere.
    pub boundary_values: Vec<f64>,
    pub elements: Vec<ElementOperators>,
}

/// Builds every face operator, element and local contribution (in parallel on
/// the current rayon pool) and sums them in cell order.
pub fn assemble(
    mesh: &PolyMesh,
    p: u32,
    choice: BasisChoice,
    stab: Stabilization,
    solution: ExactSolution,
) -> Result<Assembled> {
    if p < 1 {
        return Err(VemError::InvalidArgument("polynomial degree must be at least 1".into()));
    }
    let dofmap = build_dof_map(mesh, p);
    let faces: Vec<FaceOperators> = (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| face_operators(mesh, f, p, choice.face_basis()))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let forcing = move |x: &[f64; 3]| solution.forcing(x);
    let locals: Vec<(ElementOperators, nalgebra::DMatrix<f64>, nalgebra::DVector<f64>)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let refs: Vec<&FaceOperators> = mesh.cells()[c].iter().map(|fr| &faces[fr.face]).collect();
            let ops = element_operators_with_faces(mesh, c, p, choice, &refs)?;
            let k = local_stiffness(&ops, stab);
            let f = local_load(mesh, &ops, &forcing, 2 * p as usize + 2)?;
            Ok((ops, k, f))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let n = dofmap.num_dofs();
    let mut rhs = vec![0.0; n];
    let mut triplets = Vec::new();
    let mut elements = Vec::with_capacity(locals.len());
    for (ops, k, f) in locals {
        let dofs = dofmap.element_dofs(&ops);
        for (a, &ga) in dofs.iter().enumerate() {
            rhs[ga] += f[a];
            for (b, &gb) in dofs.iter().enumerate() {
                if ga >= gb {
                    triplets.push((ga, gb, k[(a, b)]));
                }
            }
        }
        elements.push(ops);
    }
    let matrix = CscMatrix::from_triplets(n, triplets);

    let mut boundary_values = vec![0.0; n];
    let g = |x: &[f64; 3]| solution.value(x);
    for v in 0..mesh.num_vertices() {
        if mesh.is_boundary_vertex(v) {
            boundary_values[v] = g(&mesh.vertices()[v]);
        }
    }
    for e in 0..mesh.num_edges() {
        if mesh.is_boundary_edge(e) {
            for (j, x) in crate::facevem::edge_nodes(mesh, e, p)?.iter().enumerate() {
                boundary_values[dofmap.skeletal(&SkeletalDof::EdgeNode { edge: e, node: j })] = g(x);
            }
        }
    }
    if dofmap.per_face > 0 {
        for f in (0..mesh.num_faces()).filter(|&f| mesh.is_boundary_face(f)) {
            let geom = mesh.face_geometry(f);
            let vals = face_interpolate(mesh, &faces[f], |xi| g(&geom.to_global(xi)), 2 * p as usize + 2)?;
            let ns = faces[f].layout.num_skeletal();
            for j in 0..dofmap.per_face {
                boundary_values[dofmap.face_moment(f, j)] = vals[ns + j];
            }
        }
    }

    Ok(Assembled {
        dofmap,
        choice,
        stabilization: stab,
        matrix,
        rhs,
        boundary_values,
        elements,
    })
}

impl Assembled {
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.dofmap.num_dofs()).filter(|&i| !self.dofmap.dirichlet[i]).collect()
    }

    /// Matrix and right-hand side restricted to the free dofs, with the
    /// boundary values moved to the right-hand side.
    pub fn reduced_system(&self) -> (CscMatrix, Vec<f64>, Vec<usize>) {
        let free = self.free_dofs();
        let lifted = self.matrix.mul_vec(&self.boundary_values);
        let rhs = free.iter().map(|&i| self.rhs[i] - lifted[i]).collect();
        (self.matrix.submatrix(&free), rhs, free)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: SolverMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    /// Values of all global dofs, boundary included.
    pub values: Vec<f64>,
    pub report: SolveReport,
}

const RESIDUAL_TOL: f64 = 1e-10;

/// Solves the reduced system: RCM-ordered envelope Cholesky with iterative
/// refinement, falling back to Jacobi-preconditioned CG when the matrix is
/// not numerically positive definite.
pub fn solve(assembled: &Assembled) -> Result<DiscreteSolution> {
    let (a, b, free) = assembled.reduced_system();
    let bnorm = norm2(&b).max(f64::MIN_POSITIVE);
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x);
        b.iter().zip(ax).map(|(u, v)| u - v).collect()
    };
    let (x, report) = match EnvelopeCholesky::factor(&a, &rcm_ordering(&a)) {
        Ok(chol) => {
            let mut x = chol.solve(&b);
            let mut r = residual(&x);
            let mut steps = 0;
            while norm2(&r) / bnorm > RESIDUAL_TOL && steps < 3 {
                let dx = chol.solve(&r);
                x.iter_mut().zip(dx).for_each(|(u, d)| *u += d);
                r = residual(&x);
                steps += 1;
            }
            (
                x,
                SolveReport {
                    method: SolverMethod::Cholesky,
                    iterations: steps,
                    relative_residual: norm2(&r) / bnorm,
                },
            )
        }
        Err(VemError::Factorization { .. }) => {
            let (x, it) = conjugate_gradient(&a, &b, 1e-12, 10 * a.dim().max(1))?;
            let r = residual(&x);
            (
                x,
                SolveReport {
                    method: SolverMethod::ConjugateGradient,
                    iterations: it,
                    relative_residual: norm2(&r) / bnorm,
                },
            )
        }
        Err(e) => return Err(e),
    };
    let mut values = assembled.boundary_values.clone();
    for (k, &i) in free.iter().enumerate() {
        values[i] = x[k];
    }
    Ok(DiscreteSolution { values, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_cube_mesh;

    #[test]
    fn dof_counts_on_cube() {
        let m = build_cube_mesh(2).unwrap();
        let d = build_dof_map(&m, 2);
        assert_eq!(d.num_dofs(), 27 + 54 + 36 + 8);
        // interior: centre vertex, 6 interior edges, 12 interior faces, 8 cells
        assert_eq!(d.num_free(), 1 + 6 + 12 + 8);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = build_cube_mesh(2).unwrap();
        let a = assemble(&m, 2, BasisChoice::Standard, Stabilization::S2, ExactSolution::Zero).unwrap();
        let s = solve(&a).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn assembled_matrix_is_symmetric_and_annihilates_constants() {
        let m = build_cube_mesh(2).unwrap();
        let a = assemble(&m, 2, BasisChoice::Orthogonal, Stabilization::S1, ExactSolution::Zero).unwrap();
        // the constant 1 has unit point values, moments of 1 in each basis
        let mut one = vec![0.0; a.dofmap.num_dofs()];
        for ops in &a.elements {
            let dofs = a.dofmap.element_dofs(ops);
            for (l, &g) in dofs.iter().enumerate() {
                one[g] = ops.d[(l, 0)] * ops.basis_change[(0, 0)].recip();
            }
        }
        let k1 = a.matrix.mul_vec(&one);
        assert!(k1.iter().all(|v| v.abs() < 1e-10));
    }
}
