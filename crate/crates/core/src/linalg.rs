//! Sparse symmetric matrices, a profile Cholesky factorization and MINRES.

use std::collections::VecDeque;

use crate::error::{Result, TodaError};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles an `n x n` matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == j {
                    acc += row[k].1;
                    k += 1;
                }
                col_idx.push(j);
                values.push(acc);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    /// Builds from raw CSR arrays, validating their shape.
    pub fn from_raw(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 || col_idx.len() != values.len() || row_ptr[n] != col_idx.len() {
            return Err(TodaError::Format("inconsistent CSR arrays".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) || col_idx.iter().any(|&j| j >= n) {
            return Err(TodaError::Format("CSR index out of range".into()));
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &xi) in x.iter().enumerate().take(self.n) {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[k] * y[self.col_idx[k]];
            }
            acc += xi * row;
        }
        acc
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol * (1.0 + v.abs())))
    }

    /// Returns `alpha * self + beta * diag(d)`.
    pub fn add_diagonal(&self, alpha: f64, beta: f64, d: &[f64]) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push((i, j, alpha * v));
            }
            trip.push((i, i, beta * d[i]));
        }
        CsrMatrix::from_triplets(self.n, &trip)
    }
}

/// Reverse Cuthill-McKee ordering. `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while order.len() < n {
        // Start each component from a minimum degree vertex.
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).unwrap();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| degree[j]);
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor stored in variable band (envelope) form under a
/// symmetric permutation.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix using an RCM ordering.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_perm(a, perm)
    }

    pub fn factor_with_perm(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn <= new {
                    data[start[new] + (jn - first[new])] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let sj = start[j];
                let k0 = fi.max(fj);
                let li = &data[si + (k0 - fi)..si + (j - fi)];
                let lj = &data[sj + (k0 - fj)..sj + (j - fj)];
                let dot: f64 = li.iter().zip(lj).map(|(a, b)| a * b).sum();
                let diag = data[sj + (j - fj)];
                let idx = si + (j - fi);
                data[idx] = (data[idx] - dot) / diag;
            }
            let row = &data[si..si + (i - fi)];
            let sq: f64 = row.iter().map(|v| v * v).sum();
            let d = data[si + (i - fi)] - sq;
            if !(d > 0.0) || !d.is_finite() {
                return Err(TodaError::Numerical(format!("matrix not positive definite at pivot {i}")));
            }
            data[si + (i - fi)] = d.sqrt();
        }
        Ok(Self { perm, first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn profile(&self) -> usize {
        self.data.len()
    }

    /// Solves `A x = b`.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let row = &self.data[si..si + (i - fi)];
            let dot: f64 = row.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - dot) / self.data[si + (i - fi)];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            y[i] /= self.data[si + (i - fi)];
            let yi = y[i];
            for (k, yk) in y[fi..i].iter_mut().enumerate() {
                *yk -= self.data[si + k] * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.solve_into(b, &mut x);
        x
    }
}

#[derive(Clone, Debug)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Preconditioned residual norm relative to that of `b`.
    pub rel_residual: f64,
    pub converged: bool,
}

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator with
/// a symmetric positive definite preconditioner `apply_pinv`.
pub fn minres<A, P>(apply_a: A, apply_pinv: P, b: &[f64], rtol: f64, max_iter: usize) -> Result<MinresOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    apply_pinv(&r1, &mut y);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(TodaError::Numerical("preconditioner is not positive definite".into()));
    }
    let beta1 = beta1_sq.sqrt();
    if beta1 == 0.0 {
        return Ok(MinresOutcome { x, iterations: 0, rel_residual: 0.0, converged: true });
    }
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut rel = 1.0;
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        apply_a(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        apply_pinv(&r2, &mut y);
        oldb = beta;
        let bsq = dot(&r2, &y);
        if bsq < 0.0 {
            return Err(TodaError::Numerical("preconditioner is not positive definite".into()));
        }
        beta = bsq.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        rel = phibar / beta1;
        if rel < rtol || beta == 0.0 {
            return Ok(MinresOutcome { x, iterations: itn, rel_residual: rel, converged: true });
        }
    }
    Ok(MinresOutcome { x, iterations: max_iter, rel_residual: rel, converged: false })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
