//! Dense symmetric linear algebra: eigendecomposition by cyclic Jacobi
//! rotations, shifted Cholesky with PD detection, and numeric rank.
//!
//! Everything here works at small scale (dim ≤ ~50) and favors robustness
//! over speed. Tolerances are relative to matrix scale with an absolute
//! floor of 1e-12.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix contains non-finite entries")]
    InvalidMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Outcome of a failed Cholesky attempt: the matrix is not positive
/// definite, detected at the given pivot (1-based, LAPACK convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPd {
    pub pivot: usize,
}

/// Dense real symmetric matrix. Construction always symmetrizes the input
/// as (A + Aᵀ)/2 so representation drift cannot accumulate.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    /// Builds from a full row-major `dim × dim` buffer, symmetrizing.
    ///
    /// Panics if `dim == 0` or the buffer length is not `dim * dim`.
    pub fn from_raw(dim: usize, raw: Vec<f64>) -> Self {
        assert!(dim >= 1, "SymMat requires dim >= 1");
        assert_eq!(raw.len(), dim * dim, "SymMat buffer length mismatch");
        let mut data = raw;
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        SymMat { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut raw = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "SymMat rows must be square");
            raw.extend_from_slice(r);
        }
        Self::from_raw(dim, raw)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        SymMat {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Rank-one outer product x xᵀ.
    pub fn outer(x: &[f64]) -> Self {
        let dim = x.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = x[i] * x[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets entry (i, j) and its mirror (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.set(i, j, self.get(i, j) + v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &SymMat) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Frobenius inner product ⟨A, B⟩ = Σᵢⱼ AᵢⱼBᵢⱼ.
    pub fn inner(&self, other: &SymMat) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.data[i * self.dim + j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Quadratic form xᵀ A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(&self.matvec(x), x)
    }

    /// Congruence Bᵀ A B for rectangular B with `B.rows == self.dim`.
    /// The result has dimension `B.cols` and is symmetric by construction.
    pub fn congruence(&self, b: &Mat) -> SymMat {
        assert_eq!(b.rows(), self.dim);
        let ab = Mat::from_fn(self.dim, b.cols(), |i, j| {
            (0..self.dim).map(|k| self.get(i, k) * b.get(k, j)).sum()
        });
        let mut out = SymMat::zeros(b.cols());
        for i in 0..b.cols() {
            for j in 0..=i {
                let mut acc = 0.0;
                for k in 0..self.dim {
                    acc += b.get(k, i) * ab.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// A ← A symmetrically congruenced by a symmetric W: W A W.
    pub fn sandwich(&self, w: &SymMat) -> SymMat {
        assert_eq!(self.dim, w.dim);
        let n = self.dim;
        // t = A W
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.get(i, k) * w.get(k, j);
                }
                t[i * n + j] = acc;
            }
        }
        // out = W t
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += w.get(i, k) * t[k * n + j];
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Symmetrized product (AB + BA)/2.
    pub fn jordan(&self, other: &SymMat) -> SymMat {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j) + other.get(i, k) * self.get(k, j);
                }
                out.set(i, j, 0.5 * acc);
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigSym {
    /// Eigenvalues sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column k pairs with `values[k]`.
    pub vectors: Mat,
}

impl EigSym {
    /// Reconstructs Q diag(λ) Qᵀ; used by tests and by matrix functions.
    pub fn reconstruct(&self) -> SymMat {
        let n = self.values.len();
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.values[k] * self.vectors.get(i, k) * self.vectors.get(j, k);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Applies f to the spectrum: Q diag(f(λ)) Qᵀ.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let n = self.values.len();
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += f(self.values[k]) * self.vectors.get(i, k) * self.vectors.get(j, k);
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending with matching orthonormal
/// eigenvector columns. Reconstruction error is far below the contract
/// bound 1e-10·(1+‖A‖_F) at the dimensions used here.
pub fn eig_sym(a: &SymMat) -> Result<EigSym, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::InvalidMatrix);
    }
    let n = a.dim;
    let mut m = a.clone();
    let mut q = SymMat::identity(n); // used as plain storage for Q
    let scale = 1.0 + a.frob_norm();
    let tol = 1e-15 * scale;
    const MAX_SWEEPS: usize = 60;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for r in (p + 1)..n {
                off += m.get(p, r).abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for r in (p + 1)..n {
                let apr = m.get(p, r);
                if apr.abs() <= 1e-300 {
                    continue;
                }
                let h = m.get(r, r) - m.get(p, p);
                let theta = 0.5 * h / apr;
                let t = if theta.is_finite() {
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                } else {
                    apr / h // theta overflowed; angle is negligible
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = m.get(p, p);
                let arr = m.get(r, r);
                m.set(p, p, app - t * apr);
                m.set(r, r, arr + t * apr);
                m.set(p, r, 0.0);
                for k in 0..n {
                    if k != p && k != r {
                        let akp = m.get(k, p);
                        let akr = m.get(k, r);
                        m.set(k, p, akp - s * (akr + tau * akp));
                        m.set(k, r, akr + s * (akp - tau * akr));
                    }
                }
                for k in 0..n {
                    let qkp = q.data[k * n + p];
                    let qkr = q.data[k * n + r];
                    q.data[k * n + p] = qkp - s * (qkr + tau * qkp);
                    q.data[k * n + r] = qkr + s * (qkp - tau * qkr);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .partial_cmp(&m.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&k| m.get(k, k)).collect();
    let vectors = Mat::from_fn(n, n, |i, j| q.data[i * n + order[j]]);
    Ok(EigSym { values, vectors })
}

/// Attempts the Cholesky factorization of A + shift·I.
///
/// On success returns the lower-triangular factor L with LLᵀ = A + shift·I.
/// A non-positive pivot is a signal (`NotPd` with the 1-based pivot index),
/// not a failure.
pub fn chol_psd(a: &SymMat, shift: f64) -> Result<Mat, NotPd> {
    debug_assert!(shift >= 0.0, "chol_psd expects a nonnegative shift");
    let n = a.dim;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j) + shift;
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(NotPd { pivot: j + 1 });
        }
        let dj = d.sqrt();
        l.set(j, j, dj);
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / dj);
        }
    }
    Ok(l)
}

/// Solves L Lᵀ x = b given the lower-triangular Cholesky factor L.
pub fn chol_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Counts eigenvalues above rel_tol · max(λ_max, 1e-12).
///
/// Intended for (numerically) positive semidefinite matrices.
pub fn numeric_rank(a: &SymMat, rel_tol: f64) -> usize {
    let eig = match eig_sym(a) {
        Ok(e) => e,
        Err(_) => return 0,
    };
    let lam_max = eig.values.first().copied().unwrap_or(0.0);
    let thresh = rel_tol * lam_max.max(1e-12);
    eig.values.iter().filter(|&&v| v > thresh).count()
}

/// Dense rectangular matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self.data[i * self.cols + j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Aᵀ x.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                y[j] += self.data[i * self.cols + j] * x[i];
            }
        }
        y
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
