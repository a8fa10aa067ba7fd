//! Small dense helpers shared by the face and element factories.

use nalgebra::DMatrix;

use crate::polybasis::ScaledMonomialBasis;

/// Relative pivot floor for local factorizations.
pub(crate) const PIVOT_TOL: f64 = 1e-14;

/// Solves `A X = B` with full-pivot LU. Fails with the 0-based elimination
/// step and pivot when `|u_kk| ≤ PIVOT_TOL·|u_00|`.
pub(crate) fn solve_pivoted(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, (usize, f64)> {
    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let big = u[(0, 0)].abs();
    for k in 0..u.nrows() {
        let piv = u[(k, k)].abs();
        if !(piv > PIVOT_TOL * big) {
            return Err((k, piv));
        }
    }
    lu.solve(b).ok_or((0, 0.0))
}

/// Inverse of a lower-triangular matrix.
pub(crate) fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("triangular factor with zero diagonal")
}

/// Moments `∫ m_k` for all monomials of `basis` from point/weight pairs.
pub(crate) fn monomial_moments<'a>(basis: &ScaledMonomialBasis, points: impl Iterator<Item = (&'a [f64], f64)>) -> Vec<f64> {
    let n = basis.count();
    let mut out = vec![0.0; n];
    let mut vals = vec![0.0; n];
    for (x, w) in points {
        basis.eval_into(x, &mut vals);
        for (o, v) in out.iter_mut().zip(&vals) {
            *o += w * v;
        }
    }
    out
}

/// Symmetric eigenvalues in ascending order.
pub fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

