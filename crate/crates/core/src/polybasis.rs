//! Scaled monomial bases on polygons and polyhedra.
//!
//! Monomials are ordered by total degree; inside a degree block the power of
//! the first coordinate decreases, then the second, so the 3D sequence starts
//! `1, x, y, z, x², xy, xz, y², yz, z², …` and the 2D one `1, x, y, x², xy, y², …`.
//! With this ordering the first `dim_poly(k, d)` members always span the
//! polynomials of degree `≤ k`.

use nalgebra::DMatrix;

use crate::error::{Result, VemError};

/// Dimension of the space of polynomials of degree `≤ p` in `dim` variables.
/// `p = -1` (and anything below) is the empty space.
pub fn dim_poly(p: i32, dim: usize) -> usize {
    if p < 0 {
        return 0;
    }
    let p = p as usize;
    match dim {
        1 => p + 1,
        2 => (p + 1) * (p + 2) / 2,
        3 => (p + 1) * (p + 2) * (p + 3) / 6,
        _ => panic!("unsupported ambient dimension {dim}"),
    }
}

/// Exponent tuple of a monomial. Unused trailing entries are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub exponents: [u32; 3],
    pub dim: usize,
}

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.exponents[..self.dim].iter().sum()
    }

    /// 1-based position in the graded ordering.
    pub fn linear_index(&self) -> usize {
        index_of(&self.exponents, self.dim) + 1
    }
}

/// Exponents of the `linear_index`-th monomial (1-based).
pub fn multi_index(linear_index: usize, dim: usize) -> MultiIndex {
    assert!(linear_index >= 1, "linear index is 1-based");
    let target = linear_index - 1;
    let mut degree = 0i32;
    while dim_poly(degree, dim) <= target {
        degree += 1;
    }
    let mut pos = target - dim_poly(degree - 1, dim);
    let d = degree as u32;
    let exponents = match dim {
        2 => [d - pos as u32, pos as u32, 0],
        3 => {
            let mut a1 = d;
            loop {
                let block = (d - a1 + 1) as usize;
                if pos < block {
                    let a2 = d - a1 - pos as u32;
                    break [a1, a2, d - a1 - a2];
                }
                pos -= block;
                a1 -= 1;
            }
        }
        _ => panic!("unsupported ambient dimension {dim}"),
    };
    MultiIndex { exponents, dim }
}

/// 0-based position of a monomial in the graded ordering.
pub fn index_of(exponents: &[u32; 3], dim: usize) -> usize {
    match dim {
        2 => {
            let d = exponents[0] + exponents[1];
            dim_poly(d as i32 - 1, 2) + exponents[1] as usize
        }
        3 => {
            let [a1, a2, a3] = *exponents;
            let d = a1 + a2 + a3;
            // blocks with a larger first exponent come first
            let before: u32 = ((a1 + 1)..=d).map(|b1| d - b1 + 1).sum();
            dim_poly(d as i32 - 1, 3) + (before + (d - a1 - a2)) as usize
        }
        _ => panic!("unsupported ambient dimension {dim}"),
    }
}

/// All exponent tuples of degree `≤ p` in graded order.
pub fn monomial_exponents(p: u32, dim: usize) -> Vec<[u32; 3]> {
    let n = dim_poly(p as i32, dim);
    (1..=n).map(|k| multi_index(k, dim).exponents).collect()
}

/// `((x - center) / scale)^α` for all `|α| ≤ degree`.
#[derive(Debug, Clone)]
pub struct ScaledMonomialBasis {
    pub dim: usize,
    pub degree: u32,
    pub center: [f64; 3],
    pub scale: f64,
    pub exponents: Vec<[u32; 3]>,
}

impl ScaledMonomialBasis {
    pub fn new(dim: usize, degree: u32, center: &[f64], scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(VemError::InvalidGeometry(format!(
                "monomial scale must be positive, got {scale}"
            )));
        }
        if center.len() != dim {
            return Err(VemError::InvalidArgument(format!(
                "center has {} coordinates, basis is {dim}D",
                center.len()
            )));
        }
        let mut c = [0.0; 3];
        c[..dim].copy_from_slice(center);
        Ok(Self {
            dim,
            degree,
            center: c,
            scale,
            exponents: monomial_exponents(degree, dim),
        })
    }

    pub fn count(&self) -> usize {
        self.exponents.len()
    }

    /// Powers of the scaled coordinates, `pow[d][k] = ((x_d - c_d)/h)^k`.
    fn powers(&self, point: &[f64]) -> [Vec<f64>; 3] {
        let mut pow: [Vec<f64>; 3] = Default::default();
        for d in 0..self.dim {
            let s = (point[d] - self.center[d]) / self.scale;
            let mut v = Vec::with_capacity(self.degree as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=self.degree {
                v.push(acc);
                acc *= s;
            }
            pow[d] = v;
        }
        pow
    }

    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        let pow = self.powers(point);
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            let mut v = 1.0;
            for d in 0..self.dim {
                v *= pow[d][e[d] as usize];
            }
            *o = v;
        }
    }

    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.count()];
        self.eval_into(point, &mut out);
        out
    }

    /// Row α holds ∇m_α at `point`; shape `count × dim`.
    pub fn eval_gradient(&self, point: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.count(), self.dim);
        let pow = self.powers(point);
        for (row, e) in self.exponents.iter().enumerate() {
            for d in 0..self.dim {
                if e[d] == 0 {
                    continue;
                }
                let mut v = e[d] as f64 / self.scale;
                for k in 0..self.dim {
                    let ek = if k == d { e[k] - 1 } else { e[k] };
                    v *= pow[k][ek as usize];
                }
                out[(row, d)] = v;
            }
        }
        out
    }
}

/// Mass matrix `(m_α, m_β)` assembled from the table of monomial moments
/// `moments[k] = ∫ m_k` of degree up to `2·degree`.
pub fn mass_from_moments(basis: &ScaledMonomialBasis, moments: &[f64]) -> DMatrix<f64> {
    let n = basis.count();
    DMatrix::from_fn(n, n, |a, b| {
        let ea = basis.exponents[a];
        let eb = basis.exponents[b];
        moments[index_of(&[ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], basis.dim)]
    })
}

/// Gradient Gram matrix `(∇m_α, ∇m_β)` from the same moment table.
pub fn stiffness_from_moments(basis: &ScaledMonomialBasis, moments: &[f64]) -> DMatrix<f64> {
    let n = basis.count();
    let h2 = basis.scale * basis.scale;
    DMatrix::from_fn(n, n, |a, b| {
        let ea = basis.exponents[a];
        let eb = basis.exponents[b];
        let mut v = 0.0;
        for d in 0..basis.dim {
            if ea[d] == 0 || eb[d] == 0 {
                continue;
            }
            let mut e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
            e[d] -= 2;
            v += (ea[d] * eb[d]) as f64 * moments[index_of(&e, basis.dim)];
        }
        v / h2
    })
}

/// Lower-triangular orthonormalizing coefficients: row `k` expresses the
/// k-th orthonormal polynomial in the monomials `1..=k`.
#[derive(Debug, Clone)]
pub struct GsMatrix {
    pub coefficients: DMatrix<f64>,
}

impl GsMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            coefficients: DMatrix::identity(n, n),
        }
    }
}

/// Dense Cholesky `A = L·Lᵀ` with a relative pivot floor. On failure the
/// 0-based row and the offending pivot are returned.
pub(crate) fn cholesky_lower(a: &DMatrix<f64>, rel_tol: f64) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let floor = rel_tol * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err((j, d));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for c in 0..n {
        inv[(c, c)] = 1.0 / l[(c, c)];
        for i in (c + 1)..n {
            let mut s = 0.0;
            for k in c..i {
                s += l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = -s / l[(i, i)];
        }
    }
    inv
}

const SPD_PIVOT_TOL: f64 = 1e-14;

/// L²-orthonormalization of a monomial family with mass matrix `mass`.
///
/// Cholesky-based, followed by one re-orthonormalization pass against the
/// recomputed mass.
pub fn gram_schmidt(mass: &DMatrix<f64>) -> Result<GsMatrix> {
    let first = cholesky_lower(mass, SPD_PIVOT_TOL).map_err(|(row, pivot)| {
        VemError::degenerate(
            "gram-schmidt",
            format!("mass matrix not positive definite at row {} (pivot {pivot:.3e})", row + 1),
        )
    })?;
    let gs1 = lower_inverse(&first);
    let mass2 = &gs1 * mass * gs1.transpose();
    let second = cholesky_lower(&mass2, SPD_PIVOT_TOL).map_err(|(row, pivot)| {
        VemError::degenerate(
            "gram-schmidt",
            format!("re-orthonormalization failed at row {} (pivot {pivot:.3e})", row + 1),
        )
    })?;
    let gs = lower_inverse(&second) * gs1;
    Ok(GsMatrix { coefficients: gs })
}

/// `L_{α,γ} = (-Δm_α, m_γ)` built from the monomial mass matrix of the same
/// domain (degree `p` basis, all `γ`).
pub fn laplacian_matrix(basis: &ScaledMonomialBasis, mass: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.count();
    let h2 = basis.scale * basis.scale;
    let mut l = DMatrix::zeros(n, mass.ncols());
    for (a, e) in basis.exponents.iter().enumerate() {
        for d in 0..basis.dim {
            if e[d] < 2 {
                continue;
            }
            let mut shifted = *e;
            shifted[d] -= 2;
            let row = index_of(&shifted, basis.dim);
            let coef = -((e[d] * (e[d] - 1)) as f64) / h2;
            for g in 0..mass.ncols() {
                l[(a, g)] += coef * mass[(row, g)];
            }
        }
    }
    l
}

/// Monomial coefficients of `Δm_α` against `m_1..m_{n_{p-2}}`; shape `n_p × n_{p-2}`.
pub fn laplacian_coefficients(basis: &ScaledMonomialBasis) -> DMatrix<f64> {
    let n = basis.count();
    let low = dim_poly(basis.degree as i32 - 2, basis.dim);
    let h2 = basis.scale * basis.scale;
    let mut c = DMatrix::zeros(n, low);
    for (a, e) in basis.exponents.iter().enumerate() {
        for d in 0..basis.dim {
            if e[d] < 2 {
                continue;
            }
            let mut shifted = *e;
            shifted[d] -= 2;
            c[(a, index_of(&shifted, basis.dim))] += (e[d] * (e[d] - 1)) as f64 / h2;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_of_the_bijections() {
        assert_eq!(multi_index(1, 3).exponents, [0, 0, 0]);
        assert_eq!(multi_index(2, 3).exponents, [1, 0, 0]);
        assert_eq!(multi_index(3, 3).exponents, [0, 1, 0]);
        assert_eq!(multi_index(4, 3).exponents, [0, 0, 1]);
        assert_eq!(multi_index(3, 2).exponents, [0, 1, 0]);
        assert_eq!(multi_index(5, 3).exponents, [2, 0, 0]);
        assert_eq!(multi_index(10, 3).exponents, [0, 0, 2]);
    }

    #[test]
    fn dimension_counts() {
        assert_eq!(dim_poly(-1, 3), 0);
        assert_eq!(dim_poly(-1, 2), 0);
        assert_eq!(dim_poly(1, 3), 4);
        assert_eq!(dim_poly(10, 3), 286);
        assert_eq!(dim_poly(10, 2), 66);
    }

    #[test]
    fn bijection_round_trip_up_to_degree_ten() {
        for dim in [2, 3] {
            for k in 1..=dim_poly(10, dim) {
                let mi = multi_index(k, dim);
                assert_eq!(mi.linear_index(), k, "dim {dim} index {k}");
            }
        }
    }

    #[test]
    fn degree_splitting() {
        for dim in [2, 3] {
            for p in 0..=10 {
                let low = dim_poly(p - 2, dim);
                for k in 1..=low {
                    assert!(multi_index(k, dim).degree() as i32 <= p - 2);
                }
                let mid = dim_poly(p - 1, dim);
                for k in (low + 1)..=mid {
                    assert_eq!(multi_index(k, dim).degree() as i32, p - 1);
                }
            }
        }
    }

    #[test]
    fn eval_at_center_and_unit_offset() {
        let b = ScaledMonomialBasis::new(3, 3, &[0.3, -0.2, 1.0], 0.7).unwrap();
        let v = b.eval(&[0.3, -0.2, 1.0]);
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x == 0.0));
        let v = b.eval(&[1.0, -0.2, 1.0]);
        let k = index_of(&[2, 0, 0], 3);
        assert!((v[k] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_nonpositive_scale() {
        assert!(ScaledMonomialBasis::new(3, 2, &[0.0; 3], 0.0).is_err());
        assert!(ScaledMonomialBasis::new(2, 2, &[0.0; 2], -1.0).is_err());
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let b = ScaledMonomialBasis::new(3, 2, &[0.0; 3], 0.5).unwrap();
        let g = b.eval_gradient(&[0.4, 0.1, -0.3]);
        assert_eq!(g.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0; 3]);
        assert!((g[(1, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(g[(1, 1)], 0.0);
        assert_eq!(g[(1, 2)], 0.0);
    }

    #[test]
    fn gram_schmidt_trivial_cases() {
        let gs = gram_schmidt(&DMatrix::identity(5, 5)).unwrap();
        assert!((gs.coefficients - DMatrix::<f64>::identity(5, 5)).amax() < 1e-15);
        let gs = gram_schmidt(&(DMatrix::identity(3, 3) * 4.0)).unwrap();
        assert!((gs.coefficients - DMatrix::<f64>::identity(3, 3) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn gram_schmidt_on_interval_reproduces_shifted_legendre() {
        // {1, x} on [0, 1]
        let mass = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0 / 3.0]);
        let gs = gram_schmidt(&mass).unwrap().coefficients;
        let r3 = 3f64.sqrt();
        // orthonormal: 1 and 2√3 (x - 1/2)
        assert!((gs[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(gs[(0, 1)].abs() < 1e-15);
        assert!((gs[(1, 0)] + r3).abs() < 1e-13);
        assert!((gs[(1, 1)] - 2.0 * r3).abs() < 1e-13);
        let check = &gs * &mass * gs.transpose();
        assert!((check - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn gram_schmidt_reports_failing_row() {
        let mass = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = gram_schmidt(&mass).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn laplacian_rows() {
        let b = ScaledMonomialBasis::new(3, 1, &[0.0; 3], 1.0).unwrap();
        let mass = DMatrix::identity(4, 4);
        assert_eq!(laplacian_matrix(&b, &mass).amax(), 0.0);

        let h = 0.8;
        let b = ScaledMonomialBasis::new(3, 2, &[0.0; 3], h).unwrap();
        let mass = DMatrix::from_fn(10, 10, |i, j| (i * 10 + j) as f64 + 1.0);
        let l = laplacian_matrix(&b, &mass);
        let a = index_of(&[2, 0, 0], 3);
        for g in 0..10 {
            assert!((l[(a, g)] + 2.0 / (h * h) * mass[(0, g)]).abs() < 1e-12);
        }
    }
}
