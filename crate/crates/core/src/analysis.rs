//! Error norms, convergence rates and spectral condition estimates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::Assembled;
use crate::error::{Result, VemError};
use crate::mesh::{Point3, PolyMesh};
use crate::problems::ExactSolution;
use crate::sparse::{dot, norm2, rcm_ordering, CscMatrix, EnvelopeCholesky};

#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    /// Broken `|u − Π∇u_h|_1`.
    pub h1_abs: f64,
    /// `‖u − Π⁰u_h‖_0`.
    pub l2_abs: f64,
    pub h1_rel: f64,
    pub l2_rel: f64,
}

/// Errors of a discrete solution, integrated cell by cell with rules exact
/// to degree `2p + 2`. Relative values divide by the norms of `u` (or are
/// left absolute when that norm vanishes).
pub fn compute_errors(mesh: &PolyMesh, assembled: &Assembled, values: &[f64], exact: ExactSolution) -> Result<ErrorReport> {
    compute_errors_with(mesh, assembled, values, |x| exact.value(x), |x| exact.gradient(x))
}

/// [`compute_errors`] against an arbitrary reference function and gradient.
pub fn compute_errors_with(
    mesh: &PolyMesh,
    assembled: &Assembled,
    values: &[f64],
    u: impl Fn(&Point3) -> f64,
    grad: impl Fn(&Point3) -> [f64; 3],
) -> Result<ErrorReport> {
    let p = assembled.dofmap.degree as usize;
    let (mut e1, mut e0, mut n1, mut n0) = (0.0, 0.0, 0.0, 0.0);
    for ops in &assembled.elements {
        let dofs = assembled.dofmap.element_dofs(ops);
        let local = DVector::from_iterator(dofs.len(), dofs.iter().map(|&g| values[g]));
        let cg = &ops.pi_nabla_mono * &local;
        let c0 = &ops.pi_zero_mono * &local;
        let rule = mesh.cell_rule(ops.layout.cell, 2 * p + 2)?;
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let gu = grad(x);
            let gh = ops.eval_gradient(&cg, x);
            let u = u(x);
            let uh = ops.eval(&c0, x);
            e1 += w * ((gu[0] - gh[0]).powi(2) + (gu[1] - gh[1]).powi(2) + (gu[2] - gh[2]).powi(2));
            n1 += w * (gu[0] * gu[0] + gu[1] * gu[1] + gu[2] * gu[2]);
            e0 += w * (u - uh).powi(2);
            n0 += w * u * u;
        }
    }
    let (h1, l2) = (e1.max(0.0).sqrt(), e0.max(0.0).sqrt());
    let rel = |e: f64, n: f64| if n > 0.0 { e / n.sqrt() } else { e };
    Ok(ErrorReport {
        h1_abs: h1,
        l2_abs: l2,
        h1_rel: rel(h1, n1),
        l2_rel: rel(l2, n0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Value(f64),
    /// Both errors are zero.
    Exact,
}

/// Observed orders `log(e_i/e_{i+1}) / log(h_i/h_{i+1})` between consecutive levels.
pub fn convergence_rates(h: &[f64], errors: &[f64]) -> Result<Vec<Rate>> {
    if h.len() != errors.len() {
        return Err(VemError::InvalidArgument(format!(
            "{} mesh sizes for {} errors",
            h.len(),
            errors.len()
        )));
    }
    Ok(h.windows(2)
        .zip(errors.windows(2))
        .map(|(hw, ew)| {
            if ew[0] == 0.0 && ew[1] == 0.0 {
                Rate::Exact
            } else {
                Rate::Value((ew[0] / ew[1]).ln() / (hw[0] / hw[1]).ln())
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    /// Set when the extremes come from a Lanczos run instead of power and
    /// inverse iteration.
    pub approximate: bool,
    pub iterations: usize,
}

const REL_CHANGE: f64 = 1e-6;
const MAX_ITER: usize = 20_000;
const SEED: u64 = 0x5eed_c0de;

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    x
}

/// Rayleigh-quotient iteration driver: repeatedly applies `step` to a unit
/// vector and returns the quotient `xᵀAx` once it settles.
fn iterate(a: &CscMatrix, mut step: impl FnMut(&[f64]) -> Vec<f64>) -> (f64, usize) {
    let mut x = start_vector(a.dim());
    let mut last = f64::NAN;
    for it in 1..=MAX_ITER {
        let mut y = step(&x);
        let s = norm2(&y);
        if s == 0.0 {
            return (0.0, it);
        }
        y.iter_mut().for_each(|v| *v /= s);
        let rq = dot(&y, &a.mul_vec(&y));
        x = y;
        if (rq - last).abs() <= REL_CHANGE * rq.abs() {
            return (rq, it);
        }
        last = rq;
    }
    (last, MAX_ITER)
}

/// Spectral condition number of a symmetric positive definite matrix.
/// Falls back to a Lanczos estimate when the Cholesky factorization breaks down.
pub fn estimate_condition(a: &CscMatrix) -> Result<ConditionEstimate> {
    let n = a.dim();
    if n == 0 {
        return Err(VemError::InvalidArgument("empty matrix".into()));
    }
    match EnvelopeCholesky::factor(a, &rcm_ordering(a)) {
        Ok(chol) => {
            let (lmax, it1) = iterate(a, |x| a.mul_vec(x));
            let (lmin, it2) = iterate(a, |x| chol.solve(x));
            Ok(ConditionEstimate {
                lambda_min: lmin,
                lambda_max: lmax,
                kappa: lmax / lmin,
                approximate: false,
                iterations: it1 + it2,
            })
        }
        Err(VemError::Factorization { .. }) => Ok(lanczos_extremes(a, 300)),
        Err(e) => Err(e),
    }
}

/// Extreme Ritz values after at most `steps` Lanczos steps with full
/// reorthogonalization.
pub fn lanczos_extremes(a: &CscMatrix, steps: usize) -> ConditionEstimate {
    let n = a.dim();
    let m = steps.min(n);
    let mut basis: Vec<Vec<f64>> = vec![start_vector(n)];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..m {
        let mut w = a.mul_vec(&basis[j]);
        alpha.push(dot(&w, &basis[j]));
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm2(&w);
        if j + 1 == m || b <= 1e-12 * alpha[j].abs().max(1e-300) {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let ev = crate::dense::sorted_eigenvalues(&t);
    let (lmin, lmax) = (ev[0], ev[k - 1]);
    ConditionEstimate {
        lambda_min: lmin,
        lambda_max: lmax,
        kappa: if lmin > 0.0 { lmax / lmin } else { f64::INFINITY },
        approximate: true,
        iterations: k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CscMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
            }
        }
        CscMatrix::from_triplets(n, t)
    }

    #[test]
    fn condition_of_1d_laplacian() {
        let n = 40;
        let a = laplacian_1d(n);
        let est = estimate_condition(&a).unwrap();
        let th = std::f64::consts::PI / (n as f64 + 1.0);
        let exact = (1.0 + th.cos()) / (1.0 - th.cos());
        assert!((est.kappa / exact - 1.0).abs() < 1e-2, "{} vs {exact}", est.kappa);
        assert!(!est.approximate);
        let lz = lanczos_extremes(&a, 300);
        assert!((lz.kappa / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rates() {
        let r = convergence_rates(&[1.0, 0.5, 0.25], &[1.0, 0.25, 0.0625]).unwrap();
        for v in r {
            match v {
                Rate::Value(x) => assert!((x - 2.0).abs() < 1e-12),
                Rate::Exact => panic!(),
            }
        }
        assert_eq!(convergence_rates(&[1.0, 0.5], &[0.0, 0.0]).unwrap(), vec![Rate::Exact]);
        assert!(convergence_rates(&[1.0], &[1.0, 2.0]).is_err());
    }
}
