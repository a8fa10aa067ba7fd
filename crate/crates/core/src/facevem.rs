//! Planar virtual element operators on a single face.
//!
//! Everything is computed in the face frame: local coordinates centred at the
//! face barycenter, monomials scaled by the face diameter. The L² projector
//! uses the enhancement `(v − Π∇v, q) = 0` for every `q ∈ P_p` orthogonal to
//! `P_{p−2}`, which depends only on the polynomial spaces and so is the same
//! for monomial and orthonormal moment bases.

use nalgebra::{DMatrix, DVector};

use crate::dense::{lower_inverse, monomial_moments, solve_pivoted};
use crate::error::{Result, VemError};
use crate::mesh::{Point3, PolyMesh};
use crate::polybasis::{
    dim_poly, gram_schmidt, laplacian_coefficients, mass_from_moments, stiffness_from_moments, GsMatrix,
    ScaledMonomialBasis,
};
use crate::quadrature::{gauss_1d, gauss_lobatto_1d};

/// Point-value degree of freedom on the mesh skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkeletalDof {
    Vertex(usize),
    /// `node`-th interior Gauss-Lobatto node of an edge, counted from the
    /// endpoint with the lower vertex id.
    EdgeNode { edge: usize, node: usize },
}

/// Local dof ordering of a face: vertices in cycle order, then the interior
/// nodes of each cycle edge, then the moments.
#[derive(Debug, Clone)]
pub struct FaceDofLayout {
    pub face: usize,
    pub degree: u32,
    pub skeletal: Vec<SkeletalDof>,
    /// Face-frame coordinates of the skeletal dofs.
    pub nodes: Vec<[f64; 2]>,
    pub num_vertices: usize,
    pub num_moments: usize,
}

impl FaceDofLayout {
    pub fn num_dofs(&self) -> usize {
        self.skeletal.len() + self.num_moments
    }

    pub fn num_skeletal(&self) -> usize {
        self.skeletal.len()
    }
}

/// Interior Gauss-Lobatto positions in `(0, 1)` for degree `p`, ascending.
pub fn edge_node_parameters(p: u32) -> Result<Vec<f64>> {
    let gl = gauss_lobatto_1d(p as usize + 1)?;
    Ok(gl.nodes[1..p as usize].iter().map(|t| 0.5 * (t + 1.0)).collect())
}

/// Physical coordinates of the interior nodes of an edge, from the lower vertex id.
pub fn edge_nodes(mesh: &PolyMesh, edge: usize, p: u32) -> Result<Vec<Point3>> {
    let [lo, hi] = mesh.edges()[edge];
    let (a, b) = (mesh.vertices()[lo], mesh.vertices()[hi]);
    Ok(edge_node_parameters(p)?
        .into_iter()
        .map(|t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])])
        .collect())
}

pub fn face_dof_layout(mesh: &PolyMesh, face: usize, p: u32) -> Result<FaceDofLayout> {
    if p < 1 {
        return Err(VemError::InvalidArgument("polynomial degree must be at least 1".into()));
    }
    let cyc = &mesh.faces()[face];
    let geom = mesh.face_geometry(face);
    let mut skeletal: Vec<SkeletalDof> = cyc.iter().map(|&v| SkeletalDof::Vertex(v)).collect();
    let mut nodes = geom.local_vertices.clone();
    let params = edge_node_parameters(p)?;
    for (k, &e) in mesh.face_edges(face).iter().enumerate() {
        let [lo, hi] = mesh.edges()[e];
        let (ia, ib) = (k, (k + 1) % cyc.len());
        let (pl, ph) = if cyc[ia] == lo {
            (geom.local_vertices[ia], geom.local_vertices[ib])
        } else {
            debug_assert_eq!(cyc[ib], lo);
            debug_assert_eq!(cyc[ia], hi);
            (geom.local_vertices[ib], geom.local_vertices[ia])
        };
        for (j, &t) in params.iter().enumerate() {
            skeletal.push(SkeletalDof::EdgeNode { edge: e, node: j });
            nodes.push([pl[0] + t * (ph[0] - pl[0]), pl[1] + t * (ph[1] - pl[1])]);
        }
    }
    Ok(FaceDofLayout {
        face,
        degree: p,
        skeletal,
        nodes,
        num_vertices: cyc.len(),
        num_moments: dim_poly(p as i32 - 2, 2),
    })
}

/// Polynomial basis used for the face moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceBasis {
    Monomial,
    Orthonormal,
}

/// Local matrices of a face. `d`, `g`, `g_tilde`, `b`, `h`, `c`, `pi_nabla`
/// and `pi_zero` are expressed in the moment basis `q = S·m` (`S = I` for
/// monomials); the `_mono` projectors give coefficients on the scaled monomials.
#[derive(Debug, Clone)]
pub struct FaceOperators {
    pub layout: FaceDofLayout,
    pub basis_kind: FaceBasis,
    pub basis: ScaledMonomialBasis,
    pub area: f64,
    /// `S`, rows are the moment basis polynomials in monomial coefficients.
    pub basis_change: DMatrix<f64>,
    /// Orthonormalizing coefficients of the monomials, for either basis kind.
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
}

fn lagrange_at(nodes: &[f64], j: usize, t: f64) -> f64 {
    let mut v = 1.0;
    for (m, &tm) in nodes.iter().enumerate() {
        if m != j {
            v *= (t - tm) / (nodes[j] - tm);
        }
    }
    v
}

pub fn face_operators(mesh: &PolyMesh, face: usize, p: u32, kind: FaceBasis) -> Result<FaceOperators> {
    let layout = face_dof_layout(mesh, face, p)?;
    let geom = mesh.face_geometry(face);
    let degenerate = |detail: String| VemError::degenerate(format!("face {face}"), detail);
    let basis = ScaledMonomialBasis::new(2, p, &[0.0, 0.0], geom.diameter)?;
    let np = basis.count();
    let nl = layout.num_moments;
    let ns = layout.num_skeletal();
    let ndof = layout.num_dofs();

    let rule = geom.rule(2 * p as usize)?;
    let area = rule.measure();
    let big = ScaledMonomialBasis::new(2, 2 * p, &[0.0, 0.0], geom.diameter)?;
    let moments = monomial_moments(&big, rule.points.iter().map(|x| &x[..]).zip(rule.weights.iter().copied()));
    let h_mono = mass_from_moments(&basis, &moments);
    let gt_mono = stiffness_from_moments(&basis, &moments);
    let gs = gram_schmidt(&h_mono).map_err(|e| degenerate(e.to_string()))?;
    let s = match kind {
        FaceBasis::Monomial => DMatrix::identity(np, np),
        FaceBasis::Orthonormal => gs.coefficients.clone(),
    };
    let s_low = s.view((0, 0), (nl, nl)).clone_owned();
    let s_low_inv = lower_inverse(&s_low);

    // dofs of the monomials
    let mut d_mono = DMatrix::zeros(ndof, np);
    for (i, x) in layout.nodes.iter().enumerate() {
        let vals = basis.eval(x);
        for a in 0..np {
            d_mono[(i, a)] = vals[a];
        }
    }
    if nl > 0 {
        let block = &s_low * h_mono.rows(0, nl) / area;
        d_mono.rows_mut(ns, nl).copy_from(&block);
    }

    // a(m_β, φ_i) by integration by parts
    let mut a_mono = DMatrix::zeros(np, ndof);
    let cyc = &mesh.faces()[face];
    let nv = cyc.len();
    let gl_nodes: Vec<f64> = {
        let mut t = vec![0.0];
        t.extend(edge_node_parameters(p)?);
        t.push(1.0);
        t
    };
    let gauss = gauss_1d(p as usize + 1);
    for (k, &e) in mesh.face_edges(face).iter().enumerate() {
        let (ia, ib) = (k, (k + 1) % nv);
        let (xa, xb) = (geom.local_vertices[ia], geom.local_vertices[ib]);
        let (dx, dy) = (xb[0] - xa[0], xb[1] - xa[1]);
        let len = (dx * dx + dy * dy).sqrt();
        let normal = [dy / len, -dx / len];
        let from_lo = cyc[ia] == mesh.edges()[e][0];
        let (pl, ph, il, ih) = if from_lo { (xa, xb, ia, ib) } else { (xb, xa, ib, ia) };
        let local_of = |j: usize| -> usize {
            if j == 0 {
                il
            } else if j == p as usize {
                ih
            } else {
                nv + k * (p as usize - 1) + j - 1
            }
        };
        for (gx, gw) in gauss.nodes.iter().zip(&gauss.weights) {
            let t = 0.5 * (gx + 1.0);
            let w = 0.5 * gw * len;
            let x = [pl[0] + t * (ph[0] - pl[0]), pl[1] + t * (ph[1] - pl[1])];
            let grad = basis.eval_gradient(&x);
            for j in 0..gl_nodes.len() {
                let phi = lagrange_at(&gl_nodes, j, t);
                let col = local_of(j);
                for b in 0..np {
                    a_mono[(b, col)] += w * phi * (grad[(b, 0)] * normal[0] + grad[(b, 1)] * normal[1]);
                }
            }
        }
    }
    // (m_low, v) = |F| S_low⁻¹ · moment dofs
    let m_low = &s_low_inv * area;
    if nl > 0 {
        let lap = laplacian_coefficients(&basis);
        let interior = -(&lap * &m_low);
        let mut view = a_mono.columns_mut(ns, nl);
        view += interior;
    }

    // P₀ condition
    let mean = kind == FaceBasis::Orthonormal;
    let mut p0_dofs = DVector::zeros(ndof);
    let mut p0_mono = DVector::zeros(np);
    if p == 1 {
        let wv = if mean { 1.0 / nv as f64 } else { 1.0 };
        for i in 0..nv {
            p0_dofs[i] = wv;
            for a in 0..np {
                p0_mono[a] += wv * d_mono[(i, a)];
            }
        }
    } else {
        let wm = if mean { 1.0 / area } else { 1.0 };
        for j in 0..nl {
            p0_dofs[ns + j] = wm * m_low[(0, j)];
        }
        for a in 0..np {
            p0_mono[a] = wm * h_mono[(0, a)];
        }
    }

    let g_tilde = &s * &gt_mono * s.transpose();
    let mut g = g_tilde.clone();
    g.row_mut(0).copy_from(&(&s * &p0_mono).transpose());
    let mut b = &s * &a_mono;
    b.row_mut(0).copy_from(&p0_dofs.transpose());
    let pi_nabla = solve_pivoted(&g, &b)
        .map_err(|(k, piv)| degenerate(format!("projection matrix singular at step {k} (pivot {piv:.3e})")))?;
    let pi_nabla_mono = s.transpose() * &pi_nabla;

    // L² projector: orthonormal coordinates from moments below p−1, from Π∇ above
    let gsc = &gs.coefficients;
    let mut pbar = gsc * &h_mono * &pi_nabla_mono;
    if nl > 0 {
        let low = gsc.view((0, 0), (nl, nl)) * &m_low;
        pbar.rows_mut(0, nl).fill(0.0);
        pbar.view_mut((0, ns), (nl, nl)).copy_from(&low);
    }
    let pi_zero_mono = gsc.transpose() * pbar;
    let st = s.transpose();
    let pi_zero = st
        .solve_upper_triangular(&pi_zero_mono)
        .ok_or_else(|| degenerate("singular moment basis".into()))?;
    let h = &s * &h_mono * s.transpose();
    let c = &h * &pi_zero;
    let d = &d_mono * s.transpose();

    Ok(FaceOperators {
        layout,
        basis_kind: kind,
        basis,
        area,
        basis_change: s,
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
    })
}

/// Coefficients of `Π∇v` in the face moment basis.
pub fn face_pi_nabla_apply(ops: &FaceOperators, dofs: &[f64]) -> Result<DVector<f64>> {
    if dofs.len() != ops.layout.num_dofs() {
        return Err(VemError::InvalidArgument(format!(
            "face {} expects {} dofs, got {}",
            ops.layout.face,
            ops.layout.num_dofs(),
            dofs.len()
        )));
    }
    Ok(&ops.pi_nabla * DVector::from_column_slice(dofs))
}

/// Face dofs of a function given in face-frame coordinates; moments use a
/// rule exact to `degree`.
pub fn face_interpolate(mesh: &PolyMesh, ops: &FaceOperators, f: impl Fn(&[f64; 2]) -> f64, degree: usize) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = ops.layout.nodes.iter().map(&f).collect();
    let nl = ops.layout.num_moments;
    if nl > 0 {
        let rule = mesh.face_geometry(ops.layout.face).rule(degree)?;
        let mut acc = DVector::zeros(ops.basis.count());
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(x);
            acc += DVector::from_vec(ops.basis.eval(x)) * (w * fx);
        }
        let mom = ops.basis_change.view((0, 0), (nl, nl)) * acc.rows(0, nl) / ops.area;
        out.extend(mom.iter());
    }
    Ok(out)
}
