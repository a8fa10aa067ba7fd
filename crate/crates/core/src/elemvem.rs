//! Element-level virtual element operators, stabilizations and local
//! stiffness/load.
//!
//! All matrices are first built against the scaled monomials of the element
//! and then rotated to the bulk moment basis `q = R·m` of the chosen basis
//! (`R = I` for the standard choice, the Gram-Schmidt factor otherwise).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::dense::{lower_inverse, monomial_moments, solve_pivoted};
use crate::error::{Result, VemError};
use crate::facevem::{edge_nodes, face_operators, FaceBasis, FaceOperators, SkeletalDof};
use crate::mesh::{CellGeometry, Point3, PolyMesh};
use crate::polybasis::{
    dim_poly, gram_schmidt, laplacian_coefficients, mass_from_moments, stiffness_from_moments, GsMatrix,
    ScaledMonomialBasis,
};

/// Polynomial bases used for the face and bulk moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisChoice {
    /// Scaled monomials on faces and in the bulk.
    Standard,
    /// L²-orthonormal polynomials on faces and in the bulk.
    Orthogonal,
    /// Scaled monomials on faces, orthonormal polynomials in the bulk.
    Hybrid,
}

impl BasisChoice {
    pub const ALL: [BasisChoice; 3] = [BasisChoice::Standard, BasisChoice::Orthogonal, BasisChoice::Hybrid];

    pub fn face_basis(self) -> FaceBasis {
        match self {
            BasisChoice::Orthogonal => FaceBasis::Orthonormal,
            _ => FaceBasis::Monomial,
        }
    }

    pub fn bulk_orthonormal(self) -> bool {
        self != BasisChoice::Standard
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisChoice::Standard => "standard",
            BasisChoice::Orthogonal => "orthogonal",
            BasisChoice::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for BasisChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisChoice {
    type Err = VemError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(BasisChoice::Standard),
            "orthogonal" => Ok(BasisChoice::Orthogonal),
            "hybrid" => Ok(BasisChoice::Hybrid),
            _ => Err(VemError::InvalidArgument(format!("unknown basis choice '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stabilization {
    /// `h_E` times the identity.
    S1,
    /// Diagonal recipe `max(h_E, a(Π∇φ_i, Π∇φ_i))`.
    S2,
    /// S2 on skeletal and face dofs, nothing on bulk dofs.
    S3,
}

impl Stabilization {
    pub const ALL: [Stabilization; 3] = [Stabilization::S1, Stabilization::S2, Stabilization::S3];

    pub fn name(self) -> &'static str {
        match self {
            Stabilization::S1 => "S1",
            Stabilization::S2 => "S2",
            Stabilization::S3 => "S3",
        }
    }
}

impl fmt::Display for Stabilization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stabilization {
    type Err = VemError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Stabilization::S1),
            "S2" => Ok(Stabilization::S2),
            "S3" => Ok(Stabilization::S3),
            _ => Err(VemError::InvalidArgument(format!("unknown stabilization '{s}'"))),
        }
    }
}

/// Local dof ordering of a cell: vertices (ascending id), interior edge
/// nodes (ascending edge id, nodes from the lower vertex), face moments
/// (cell face order), bulk moments.
#[derive(Debug, Clone)]
pub struct ElementDofLayout {
    pub cell: usize,
    pub degree: u32,
    pub skeletal: Vec<SkeletalDof>,
    pub coords: Vec<Point3>,
    pub faces: Vec<usize>,
    pub moments_per_face: usize,
    pub num_bulk: usize,
}

impl ElementDofLayout {
    pub fn num_skeletal(&self) -> usize {
        self.skeletal.len()
    }

    pub fn num_face_dofs(&self) -> usize {
        self.faces.len() * self.moments_per_face
    }

    pub fn num_dofs(&self) -> usize {
        self.num_skeletal() + self.num_face_dofs() + self.num_bulk
    }

    pub fn face_offset(&self, local_face: usize) -> usize {
        self.num_skeletal() + local_face * self.moments_per_face
    }

    pub fn bulk_offset(&self) -> usize {
        self.num_skeletal() + self.num_face_dofs()
    }
}

pub fn element_dof_layout(mesh: &PolyMesh, cell: usize, p: u32) -> Result<ElementDofLayout> {
    if p < 1 {
        return Err(VemError::InvalidArgument("polynomial degree must be at least 1".into()));
    }
    let mut skeletal = Vec::new();
    let mut coords = Vec::new();
    for v in mesh.cell_vertices(cell) {
        skeletal.push(SkeletalDof::Vertex(v));
        coords.push(mesh.vertices()[v]);
    }
    for e in mesh.cell_edges(cell) {
        for (j, x) in edge_nodes(mesh, e, p)?.into_iter().enumerate() {
            skeletal.push(SkeletalDof::EdgeNode { edge: e, node: j });
            coords.push(x);
        }
    }
    Ok(ElementDofLayout {
        cell,
        degree: p,
        skeletal,
        coords,
        faces: mesh.cells()[cell].iter().map(|fr| fr.face).collect(),
        moments_per_face: dim_poly(p as i32 - 2, 2),
        num_bulk: dim_poly(p as i32 - 2, 3),
    })
}

/// Local matrices of a cell, expressed in the bulk moment basis `q = R·m`.
#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub layout: ElementDofLayout,
    pub choice: BasisChoice,
    pub geometry: CellGeometry,
    pub basis: ScaledMonomialBasis,
    /// `R`: rows are the bulk basis polynomials in monomial coefficients.
    pub basis_change: DMatrix<f64>,
    pub gs: GsMatrix,
    pub d: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub g_tilde: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub pi_nabla: DMatrix<f64>,
    pub pi_zero: DMatrix<f64>,
    pub pi_nabla_mono: DMatrix<f64>,
    pub pi_zero_mono: DMatrix<f64>,
    /// Per cell face: frame-local monomials and the moment basis rows.
    pub face_moment_bases: Vec<(ScaledMonomialBasis, DMatrix<f64>)>,
}

impl ElementOperators {
    /// Value of a polynomial given by monomial coefficients.
    pub fn eval(&self, coeffs: &DVector<f64>, x: &Point3) -> f64 {
        self.basis.eval(x).iter().zip(coeffs.iter()).map(|(m, c)| m * c).sum()
    }

    pub fn eval_gradient(&self, coeffs: &DVector<f64>, x: &Point3) -> [f64; 3] {
        let g = self.basis.eval_gradient(x);
        let mut out = [0.0; 3];
        for a in 0..coeffs.len() {
            for d in 0..3 {
                out[d] += coeffs[a] * g[(a, d)];
            }
        }
        out
    }
}

/// Builds the local operators, computing the needed face operators.
pub fn element_operators(mesh: &PolyMesh, cell: usize, p: u32, choice: BasisChoice) -> Result<ElementOperators> {
    let faces = mesh.cells()[cell]
        .iter()
        .map(|fr| face_operators(mesh, fr.face, p, choice.face_basis()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&FaceOperators> = faces.iter().collect();
    element_operators_with_faces(mesh, cell, p, choice, &refs)
}

/// Builds the local operators from precomputed face operators, given in the
/// order of the cell's faces.
pub fn element_operators_with_faces(
    mesh: &PolyMesh,
    cell: usize,
    p: u32,
    choice: BasisChoice,
    faces: &[&FaceOperators],
) -> Result<ElementOperators> {
    let layout = element_dof_layout(mesh, cell, p)?;
    if faces.len() != layout.faces.len() {
        return Err(VemError::InvalidArgument(format!(
            "cell {cell} has {} faces, got {} face operators",
            layout.faces.len(),
            faces.len()
        )));
    }
    let geometry = mesh.cell_geometry(cell)?;
    let basis = ScaledMonomialBasis::new(3, p, &geometry.barycenter, geometry.diameter)?;
    let np = basis.count();
    let nl = layout.num_bulk;
    let ns = layout.num_skeletal();
    let ndof = layout.num_dofs();
    let vol = geometry.volume;
    let degenerate_pivot = |pivot: f64| VemError::DegenerateElement { cell, pivot };

    let rule = mesh.cell_rule(cell, 2 * p as usize)?;
    let big = ScaledMonomialBasis::new(3, 2 * p, &geometry.barycenter, geometry.diameter)?;
    let moments = monomial_moments(&big, rule.points.iter().map(|x| &x[..]).zip(rule.weights.iter().copied()));
    let h_mono = mass_from_moments(&basis, &moments);
    let gt_mono = stiffness_from_moments(&basis, &moments);
    let gs = gram_schmidt(&h_mono).map_err(|e| match e {
        VemError::DegenerateDomain { detail, .. } => VemError::degenerate(format!("cell {cell}"), detail),
        other => other,
    })?;
    let r = if choice.bulk_orthonormal() {
        gs.coefficients.clone()
    } else {
        DMatrix::identity(np, np)
    };
    let r_low = r.view((0, 0), (nl, nl)).clone_owned();
    // (m_low, v) = |E| R_low⁻¹ · bulk dofs
    let m_low = lower_inverse(&r_low) * vol;

    let local_of: HashMap<SkeletalDof, usize> = layout.skeletal.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    let mut d_mono = DMatrix::zeros(ndof, np);
    for (i, x) in layout.coords.iter().enumerate() {
        let vals = basis.eval(x);
        for a in 0..np {
            d_mono[(i, a)] = vals[a];
        }
    }
    let mut a_mono = DMatrix::zeros(np, ndof);
    let mut face_moment_bases = Vec::with_capacity(faces.len());
    for (lf, fops) in faces.iter().enumerate() {
        let face = layout.faces[lf];
        if fops.layout.face != face || fops.layout.degree != p {
            return Err(VemError::InvalidArgument(format!(
                "face operators for face {} (p={}) passed for face {face}",
                fops.layout.face, fops.layout.degree
            )));
        }
        let geom = mesh.face_geometry(face);
        let normal = mesh.outward_normal(face, cell)?;
        let frule = geom.rule(2 * p as usize)?;
        let nfp = fops.basis.count();
        let nfl = layout.moments_per_face;
        // ∫_F m^F_β m_α and ∫_F (∇m_α·n) m^F_β
        let mut mass_cross = DMatrix::zeros(nfp, np);
        let mut lambda = DMatrix::zeros(np, nfp);
        for (xi, w) in frule.points.iter().zip(&frule.weights) {
            let x = geom.to_global(xi);
            let mf = fops.basis.eval(xi);
            let me = basis.eval(&x);
            let ge = basis.eval_gradient(&x);
            for a in 0..np {
                let dn = ge[(a, 0)] * normal[0] + ge[(a, 1)] * normal[1] + ge[(a, 2)] * normal[2];
                for bf in 0..nfp {
                    lambda[(a, bf)] += w * dn * mf[bf];
                    mass_cross[(bf, a)] += w * mf[bf] * me[a];
                }
            }
        }
        let off = layout.face_offset(lf);
        let s_low = fops.basis_change.view((0, 0), (nfl, nfl)).clone_owned();
        if nfl > 0 {
            let rows = &s_low * mass_cross.rows(0, nfl) / fops.area;
            d_mono.rows_mut(off, nfl).copy_from(&rows);
        }
        let contrib = &lambda * &fops.pi_zero_mono;
        for (i, sk) in fops.layout.skeletal.iter().enumerate() {
            let col = local_of[sk];
            let mut dst = a_mono.column_mut(col);
            dst += contrib.column(i);
        }
        for j in 0..nfl {
            let mut dst = a_mono.column_mut(off + j);
            dst += contrib.column(fops.layout.num_skeletal() + j);
        }
        face_moment_bases.push((fops.basis.clone(), s_low));
    }
    let bo = layout.bulk_offset();
    if nl > 0 {
        let block = &r_low * h_mono.rows(0, nl) / vol;
        d_mono.rows_mut(bo, nl).copy_from(&block);
        let lap = laplacian_coefficients(&basis);
        let mut view = a_mono.columns_mut(bo, nl);
        view -= &lap * &m_low;
    }

    // P₀ condition: plain sum / integral for the standard choice, the mean otherwise
    let mean = choice.bulk_orthonormal();
    let mut p0_dofs = DVector::zeros(ndof);
    let mut p0_mono = DVector::zeros(np);
    if p == 1 {
        let nv = ns;
        let wv = if mean { 1.0 / nv as f64 } else { 1.0 };
        for i in 0..nv {
            p0_dofs[i] = wv;
            for a in 0..np {
                p0_mono[a] += wv * d_mono[(i, a)];
            }
        }
    } else {
        let wm = if mean { 1.0 / vol } else { 1.0 };
        for j in 0..nl {
            p0_dofs[bo + j] = wm * m_low[(0, j)];
        }
        for a in 0..np {
            p0_mono[a] = wm * h_mono[(0, a)];
        }
    }

    let rt = r.transpose();
    let g_tilde = &r * &gt_mono * &rt;
    let mut g = g_tilde.clone();
    g.row_mut(0).copy_from(&(&r * &p0_mono).transpose());
    let mut b = &r * &a_mono;
    b.row_mut(0).copy_from(&p0_dofs.transpose());
    let pi_nabla = solve_pivoted(&g, &b).map_err(|(_, piv)| degenerate_pivot(piv))?;
    let pi_nabla_mono = &rt * &pi_nabla;

    let gsc = &gs.coefficients;
    let mut pbar = gsc * &h_mono * &pi_nabla_mono;
    if nl > 0 {
        let low = gsc.view((0, 0), (nl, nl)) * &m_low;
        pbar.rows_mut(0, nl).fill(0.0);
        pbar.view_mut((0, bo), (nl, nl)).copy_from(&low);
    }
    let pi_zero_mono = gsc.transpose() * pbar;
    let pi_zero = rt
        .solve_upper_triangular(&pi_zero_mono)
        .ok_or_else(|| degenerate_pivot(0.0))?;
    let h = &r * &h_mono * &rt;
    let c = &h * &pi_zero;
    let d = &d_mono * &rt;

    Ok(ElementOperators {
        layout,
        choice,
        geometry,
        basis,
        basis_change: r,
        gs,
        d,
        g,
        g_tilde,
        b,
        h,
        c,
        pi_nabla,
        pi_zero,
        pi_nabla_mono,
        pi_zero_mono,
        face_moment_bases,
    })
}

/// Consistency part `Π*ᵀ G̃ Π*` of the local stiffness.
pub fn consistency_matrix(ops: &ElementOperators) -> DMatrix<f64> {
    ops.pi_nabla.transpose() * &ops.g_tilde * &ops.pi_nabla
}

pub fn stabilization_matrix(ops: &ElementOperators, stab: Stabilization) -> DMatrix<f64> {
    let n = ops.layout.num_dofs();
    let h = ops.geometry.diameter;
    match stab {
        Stabilization::S1 => DMatrix::from_diagonal_element(n, n, h),
        Stabilization::S2 | Stabilization::S3 => {
            let kc = consistency_matrix(ops);
            let bulk = if stab == Stabilization::S3 { ops.layout.bulk_offset() } else { n };
            DMatrix::from_fn(n, n, |i, j| if i == j && i < bulk { h.max(kc[(i, i)]) } else { 0.0 })
        }
    }
}

/// Local stiffness `Π*ᵀG̃Π* + (I − DΠ*)ᵀ S (I − DΠ*)`.
pub fn local_stiffness(ops: &ElementOperators, stab: Stabilization) -> DMatrix<f64> {
    let n = ops.layout.num_dofs();
    let s = stabilization_matrix(ops, stab);
    let proj = DMatrix::identity(n, n) - &ops.d * &ops.pi_nabla;
    let mut k = consistency_matrix(ops) + proj.transpose() * s * proj;
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Local load `(f, Π⁰φ_i)_E` with a cell rule exact to `degree`.
pub fn local_load(mesh: &PolyMesh, ops: &ElementOperators, f: &(dyn Fn(&Point3) -> f64 + Sync), degree: usize) -> Result<DVector<f64>> {
    let rule = mesh.cell_rule(ops.layout.cell, degree)?;
    let mut fm = DVector::zeros(ops.basis.count());
    let mut vals = vec![0.0; ops.basis.count()];
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        ops.basis.eval_into(x, &mut vals);
        let fx = w * f(x);
        for (a, v) in vals.iter().enumerate() {
            fm[a] += fx * v;
        }
    }
    Ok(ops.pi_zero_mono.transpose() * fm)
}

/// Local dofs of a function; moments use rules exact to `degree`.
pub fn element_interpolate(mesh: &PolyMesh, ops: &ElementOperators, f: &dyn Fn(&Point3) -> f64, degree: usize) -> Result<DVector<f64>> {
    let lay = &ops.layout;
    let mut out = DVector::zeros(lay.num_dofs());
    for (i, x) in lay.coords.iter().enumerate() {
        out[i] = f(x);
    }
    let nfl = lay.moments_per_face;
    if nfl > 0 {
        for (lf, &face) in lay.faces.iter().enumerate() {
            let geom = mesh.face_geometry(face);
            let (fb, s_low) = &ops.face_moment_bases[lf];
            let rule = geom.rule(degree)?;
            let mut acc = DVector::zeros(nfl);
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let fx = w * f(&geom.to_global(xi));
                let m = fb.eval(xi);
                for j in 0..nfl {
                    acc[j] += fx * m[j];
                }
            }
            let mom = s_low * acc / geom.area;
            out.rows_mut(lay.face_offset(lf), nfl).copy_from(&mom);
        }
    }
    let nl = lay.num_bulk;
    if nl > 0 {
        let rule = mesh.cell_rule(lay.cell, degree)?;
        let mut acc = DVector::zeros(nl);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let fx = w * f(x);
            let m = ops.basis.eval(x);
            for j in 0..nl {
                acc[j] += fx * m[j];
            }
        }
        let mom = ops.basis_change.view((0, 0), (nl, nl)) * acc / ops.geometry.volume;
        out.rows_mut(lay.bulk_offset(), nl).copy_from(&mom);
    }
    Ok(out)
}

/// Extreme generalized eigenvalues of the stabilization against the
/// consistency form on polynomial dof vectors without constants.
#[derive(Debug, Clone, Copy)]
pub struct PollutionEstimate {
    pub c_min: f64,
    pub c_max: f64,
    /// `max(1, c_max) / min(1, c_min)`; infinite when the pencil degenerates.
    pub alpha: f64,
}

pub fn pollution_diagnostics(ops: &ElementOperators, s: &DMatrix<f64>) -> PollutionEstimate {
    let np = ops.basis.count();
    let degenerate = PollutionEstimate {
        c_min: 0.0,
        c_max: f64::INFINITY,
        alpha: f64::INFINITY,
    };
    if np < 2 {
        return degenerate;
    }
    let y = ops.d.columns(1, np - 1);
    let sy = y.transpose() * s * y;
    let a = ops.g_tilde.view((1, 1), (np - 1, np - 1)).clone_owned();
    let Some(chol) = a.cholesky() else {
        return degenerate;
    };
    let l = chol.l();
    let Some(linv_sy) = l.solve_lower_triangular(&sy) else {
        return degenerate;
    };
    let Some(m) = l.solve_lower_triangular(&linv_sy.transpose()) else {
        return degenerate;
    };
    let m = 0.5 * (&m + m.transpose());
    let ev = crate::dense::sorted_eigenvalues(&m);
    let (c_min, c_max) = (ev[0], ev[ev.len() - 1]);
    if !(c_min > 0.0) || !c_max.is_finite() {
        return PollutionEstimate {
            c_min,
            c_max,
            alpha: f64::INFINITY,
        };
    }
    PollutionEstimate {
        c_min,
        c_max,
        alpha: c_max.max(1.0) / c_min.min(1.0),
    }
}
