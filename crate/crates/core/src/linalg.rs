//! Column-major matrices, economy SVD and threshold truncation.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration run on whichever of
//! `M` or `M^T` is tall. It is slower than bidiagonalization on large inputs
//! but gives singular vectors that are orthonormal to working precision,
//! which the canonical-form checks downstream rely on.

use crate::error::{Error, Result};

/// Singular values at or below this fraction of the largest one are treated
/// as zero by the truncation rule.
pub const NUMERICAL_ZERO: f64 = 1e-13;

const MAX_SWEEPS: usize = 80;

/// Dense column-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + n * i] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix buffer length");
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix buffer length");
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i + rows * j] = data[j + cols * i];
            }
        }
        m
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i + n * i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + self.rows * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + self.rows * j] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[self.rows * j..self.rows * (j + 1)]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[self.rows * j..self.rows * (j + 1)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Reinterprets the column-major buffer with a new shape.
    pub fn reshape(self, rows: usize, cols: usize) -> Self {
        assert_eq!(rows * cols, self.data.len(), "reshape length");
        Self {
            rows,
            cols,
            data: self.data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[j + self.cols * i] = self.data[i + self.rows * j];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[self.rows * j..self.rows * (j + 1)];
            for k in 0..self.cols {
                let b = rhs.data[k + rhs.rows * j];
                if b == 0.0 {
                    continue;
                }
                let a = &self.data[self.rows * k..self.rows * (k + 1)];
                for (d, x) in dst.iter_mut().zip(a) {
                    *d += x * b;
                }
            }
        }
        out
    }

    /// `self^T * rhs` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "tr_matmul inner dimension");
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for j in 0..rhs.cols {
            let b = rhs.col(j);
            for i in 0..self.cols {
                out.data[i + self.cols * j] = dot(self.col(i), b);
            }
        }
        out
    }

    /// Scales column `j` by `s[j]`.
    pub fn scale_cols(mut self, s: &[f64]) -> Self {
        assert_eq!(s.len(), self.cols);
        for (j, &sj) in s.iter().enumerate() {
            for v in self.col_mut(j) {
                *v *= sj;
            }
        }
        self
    }

    /// Scales row `i` by `s[i]`.
    pub fn scale_rows(mut self, s: &[f64]) -> Self {
        assert_eq!(s.len(), self.rows);
        for j in 0..self.cols {
            for (v, &si) in self.col_mut(j).iter_mut().zip(s) {
                *v *= si;
            }
        }
        self
    }

    /// Leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> Matrix {
        Matrix::from_col_major(self.rows, k, self.data[..self.rows * k].to_vec())
    }

    /// Leading `k` rows.
    pub fn leading_rows(&self, k: usize) -> Matrix {
        let mut out = Matrix::zeros(k, self.cols);
        for j in 0..self.cols {
            out.col_mut(j).copy_from_slice(&self.col(j)[..k]);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How singular values are weighed by the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationCriterion {
    /// `sum_{j<=D} s_j / sum_j s_j >= eps` on first powers.
    #[default]
    Mass,
    /// Same ratio on squared singular values.
    Energy,
}

/// Economy (or truncated) SVD: `M ~ U diag(S) Vt`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(self, k: usize) -> SvdResult {
        let k = k.min(self.s.len());
        SvdResult {
            u: self.u.leading_cols(k),
            s: self.s[..k].to_vec(),
            vt: self.vt.leading_rows(k),
        }
    }

    pub fn reconstruct(&self) -> Matrix {
        self.u.clone().scale_cols(&self.s).matmul(&self.vt)
    }

    /// `U diag(S)`.
    pub fn us(&self) -> Matrix {
        self.u.clone().scale_cols(&self.s)
    }

    /// `diag(S) Vt`.
    pub fn svt(&self) -> Matrix {
        self.vt.clone().scale_rows(&self.s)
    }
}

/// Full economy SVD with `r = min(rows, cols)`.
///
/// Singular vectors are sign-normalized so that the largest-magnitude entry
/// of every left singular vector is positive (first such entry on ties),
/// with the compensating sign on the matching row of `Vt`.
pub fn svd_economy(m: &Matrix) -> Result<SvdResult> {
    if let Some(pos) = m.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    if m.rows == 0 || m.cols == 0 {
        return Ok(SvdResult {
            u: Matrix::zeros(m.rows, 0),
            s: Vec::new(),
            vt: Matrix::zeros(0, m.cols),
        });
    }
    let mut res = if m.rows >= m.cols {
        jacobi_tall(m.clone())?
    } else {
        // M^T = V S U^T
        let t = jacobi_tall(m.transpose())?;
        SvdResult {
            u: t.vt.transpose(),
            s: t.s,
            vt: t.u.transpose(),
        }
    };
    fix_signs(&mut res);
    Ok(res)
}

/// SVD truncated to the minimal rank meeting the mass threshold `eps`.
/// An all-zero matrix yields rank 0.
pub fn svd_truncate(m: &Matrix, eps: f64) -> Result<SvdResult> {
    svd_truncate_with(m, eps, TruncationCriterion::Mass)
}

pub fn svd_truncate_with(m: &Matrix, eps: f64, criterion: TruncationCriterion) -> Result<SvdResult> {
    check_eps(eps)?;
    let full = svd_economy(m)?;
    let k = truncation_rank(&full.s, eps, criterion)?;
    Ok(full.truncate(k))
}

pub fn check_eps(eps: f64) -> Result<()> {
    if eps.is_nan() || eps <= 0.0 || eps > 1.0 {
        return Err(Error::InvalidThreshold(eps));
    }
    Ok(())
}

/// Smallest `D` with `sum_{j<=D} w_j / sum_j w_j >= eps`, where `w_j` is
/// `s_j` or `s_j^2` and values at or below `NUMERICAL_ZERO * s_max` count as
/// zero. `s` must be sorted descending. Returns 0 when every value is zero.
pub fn truncation_rank(s: &[f64], eps: f64, criterion: TruncationCriterion) -> Result<usize> {
    check_eps(eps)?;
    let s_max = s.first().copied().unwrap_or(0.0);
    if s_max <= 0.0 {
        return Ok(0);
    }
    let cutoff = NUMERICAL_ZERO * s_max;
    let weights: Vec<f64> = s
        .iter()
        .take_while(|&&v| v > cutoff)
        .map(|&v| match criterion {
            TruncationCriterion::Mass => v,
            TruncationCriterion::Energy => v * v,
        })
        .collect();
    let mut prefix = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        prefix.push(acc);
    }
    let total = acc;
    for (d, &p) in prefix.iter().enumerate() {
        if p / total >= eps {
            return Ok(d + 1);
        }
    }
    Ok(weights.len())
}

/// One-sided Jacobi on a tall matrix (rows >= cols).
fn jacobi_tall(mut g: Matrix) -> Result<SvdResult> {
    let (m, n) = (g.rows, g.cols);
    debug_assert!(m >= n);
    let mut v = Matrix::identity(n);
    let tol = f64::EPSILON * (m as f64).sqrt();
    let mut norms: Vec<f64> = (0..n).map(|j| dot(g.col(j), g.col(j))).collect();
    // columns this small are rounding residue; rotating them never settles
    let floor = f64::EPSILON * f64::EPSILON * norms.iter().sum::<f64>();

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::SvdNoConvergence { sweeps });
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(g.col(p), g.col(q));
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut g, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                // Recompute rather than update: keeps norms honest over many sweeps.
                norms[p] = dot(g.col(p), g.col(p));
                norms[q] = dot(g.col(q), g.col(q));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigma: Vec<f64> = norms.iter().map(|v| v.sqrt()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let s_max = order.first().map(|&j| sigma[j]).unwrap_or(0.0);
    let mut u = Matrix::zeros(m, n);
    let mut vt = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let sj = sigma[j];
        s.push(sj);
        if sj > f64::EPSILON * s_max && sj > f64::MIN_POSITIVE {
            for (dst, src) in u.col_mut(k).iter_mut().zip(g.col(j)) {
                *dst = src / sj;
            }
        } else {
            deficient.push(k);
        }
        for i in 0..n {
            vt.set(k, i, v.get(i, j));
        }
    }
    complete_orthonormal(&mut u, &deficient);
    Ok(SvdResult { u, s, vt })
}

fn rotate(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = a.rows;
    let (lo, hi) = a.data.split_at_mut(rows * q);
    let cp = &mut lo[rows * p..rows * (p + 1)];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Replaces the listed columns of `u` with unit vectors orthogonal to every
/// other column, drawing candidates from the standard basis.
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.rows;
    let mut filled: Vec<usize> = (0..u.cols).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &k in missing {
        loop {
            assert!(candidate < m, "cannot complete orthonormal basis");
            let mut w = vec![0.0; m];
            w[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for &j in &filled {
                    let proj = dot(u.col(j), &w);
                    for (wi, ui) in w.iter_mut().zip(u.col(j)) {
                        *wi -= proj * ui;
                    }
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > 1e-6 {
                for (dst, wi) in u.col_mut(k).iter_mut().zip(&w) {
                    *dst = wi / norm;
                }
                filled.push(k);
                break;
            }
        }
    }
}

fn fix_signs(res: &mut SvdResult) {
    for k in 0..res.s.len() {
        let col = res.u.col(k);
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            for v in res.u.col_mut(k) {
                *v = -*v;
            }
            for j in 0..res.vt.cols {
                let x = res.vt.get(k, j);
                res.vt.set(k, j, -x);
            }
        }
    }
}

/// Solves `A X = B` for symmetric positive definite `A` by Cholesky.
/// Returns `None` when a pivot is not safely positive.
#[allow(clippy::needless_range_loop)]
pub fn cholesky_solve(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.rows, n);
    let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    let floor = max_diag * 1e-14;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d.is_nan() || d <= floor || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / d);
        }
    }
    let mut x = b.clone();
    for c in 0..x.cols {
        let col = x.col_mut(c);
        for i in 0..n {
            let mut v = col[i];
            for k in 0..i {
                v -= l.get(i, k) * col[k];
            }
            col[i] = v / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut v = col[i];
            for k in i + 1..n {
                v -= l.get(k, i) * col[k];
            }
            col[i] = v / l.get(i, i);
        }
    }
    Some(x)
}

/// Numerical rank: count of singular values above `NUMERICAL_ZERO * s_max`.
pub fn numerical_rank(m: &Matrix) -> Result<usize> {
    let s = svd_economy(m)?.s;
    let s_max = s.first().copied().unwrap_or(0.0);
    if s_max <= 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > NUMERICAL_ZERO * s_max).count())
}
