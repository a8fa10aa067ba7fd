//! Symmetric sparse storage and the linear solvers used for the global system.

use std::collections::VecDeque;

use crate::error::{Result, VemError};

/// Symmetric matrix stored as the lower triangle in compressed columns.
/// Row indices within a column are ascending and the diagonal comes first.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from `(row, col, value)` triplets of the full matrix; entries
    /// above the diagonal are dropped and duplicates summed in sorted order.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().filter(|&(i, j, _)| i >= j).collect();
        t.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    /// Stored entries `(row, value)` of column `j` (rows ≥ j).
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[r.clone()].binary_search(&i) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.get(j, j)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> CscMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut t = Vec::new();
        for j in 0..self.n {
            if map[j] == usize::MAX {
                continue;
            }
            for (i, v) in self.column(j) {
                if map[i] != usize::MAX {
                    let (a, b) = (map[i], map[j]);
                    t.push((a.max(b), a.min(b), v));
                }
            }
        }
        CscMatrix::from_triplets(keep.len(), t)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for j in 0..self.n {
            for (i, _) in self.column(j) {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, mark: &mut [bool]) -> Vec<Vec<usize>> {
    let mut levels = vec![vec![start]];
    let mut seen = vec![start];
    mark[start] = true;
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if !mark[w] {
                    mark[w] = true;
                    seen.push(w);
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    for v in seen {
        mark[v] = false;
    }
    levels
}

/// Reverse Cuthill-McKee ordering; `perm[k]` is the original index placed at `k`.
pub fn rcm_ordering(a: &CscMatrix) -> Vec<usize> {
    let n = a.dim();
    let adj = a.adjacency();
    let mut placed = vec![false; n];
    let mut scratch = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for seed in 0..n {
        if placed[seed] {
            continue;
        }
        // pseudo-peripheral start: walk to a minimum-degree node of the last level
        let mut start = seed;
        let mut depth = bfs_levels(&adj, start, &mut scratch).len();
        loop {
            let levels = bfs_levels(&adj, start, &mut scratch);
            let cand = *levels.last().unwrap().iter().min_by_key(|&&v| (adj[v].len(), v)).unwrap();
            let d = bfs_levels(&adj, cand, &mut scratch).len();
            if d > depth {
                depth = d;
                start = cand;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([start]);
        placed[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            nb.sort_by_key(|&w| (adj[w].len(), w));
            for w in nb {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (profile) Cholesky factor of a permuted symmetric matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl EnvelopeCholesky {
    /// Factors `P A Pᵀ`, with `perm[k]` the original index at position `k`.
    /// A pivot not above `1e-14` times its original diagonal is a breakdown.
    pub fn factor(a: &CscMatrix, perm: &[usize]) -> Result<Self> {
        let n = a.dim();
        let mut inv = vec![0usize; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for j in 0..n {
            for (i, _) in a.column(j) {
                let (pi, pj) = (inv[i], inv[j]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                first[r] = first[r].min(c);
            }
        }
        let mut rows: Vec<Vec<f64>> = (0..n).map(|r| vec![0.0; r - first[r] + 1]).collect();
        for j in 0..n {
            for (i, v) in a.column(j) {
                let (pi, pj) = (inv[i], inv[j]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                rows[r][c - first[r]] = v;
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = rows.split_at_mut(i);
            let row = &mut rest[0];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let rj = &done[j];
                let mut s = row[j - fi];
                for k in start..j {
                    s -= row[k - fi] * rj[k - fj];
                }
                row[j - fi] = s / rj[j - fj];
            }
            let orig = row[i - fi];
            let mut d = orig;
            for k in fi..i {
                d -= row[k - fi] * row[k - fi];
            }
            if !(d > 1e-14 * orig.abs()) || !d.is_finite() {
                return Err(VemError::Factorization { column: perm[i], pivot: d });
            }
            row[i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky {
            perm: perm.to_vec(),
            first,
            rows,
        })
    }

    pub fn envelope_size(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients from a zero start. Stops at
/// relative residual `tol`; fails on breakdown or after `max_iter` steps.
pub fn conjugate_gradient(a: &CscMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let diag = a.diagonal();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let precond = |r: &[f64]| -> Vec<f64> {
        r.iter().zip(&diag).map(|(v, d)| if *d > 0.0 { v / d } else { *v }).collect()
    };
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(VemError::IterativeFailure {
                iterations: it,
                last: history.last().copied().unwrap_or(1.0),
                history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok((x, it));
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(VemError::IterativeFailure {
        iterations: max_iter,
        last: history.last().copied().unwrap_or(1.0),
        history,
    })
}
