//! Dense linear algebra used by the optimizer.
//!
//! Everything is row-major `f64`. Products go through `matrixmultiply`'s
//! strided dgemm so transposed operands never need to be materialized; the
//! symmetric solver is a plain Cholesky factorization sized for the l×l
//! systems the projection steps produce.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("matrix is not positive definite in step `{step}` (pivot {pivot} = {value:e})")]
    NotPositiveDefinite {
        step: &'static str,
        pivot: usize,
        value: f64,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericError> {
        if data.len() != rows * cols {
            return Err(NumericError::Shape {
                op: "from_vec",
                lhs: (rows, cols),
                rhs: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(NumericError::Shape {
                    op: "from_rows",
                    lhs: (rows.len(), cols),
                    rhs: (1, row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let cols = self.cols;
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Copy of rows `start..end`.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.rows, "row block out of range");
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Stacks `top` above `bottom`.
    pub fn vstack(top: &Self, bottom: &Self) -> Result<Self, NumericError> {
        if top.cols != bottom.cols {
            return Err(NumericError::Shape {
                op: "vstack",
                lhs: top.shape(),
                rhs: bottom.shape(),
            });
        }
        let mut data = Vec::with_capacity(top.data.len() + bottom.data.len());
        data.extend_from_slice(&top.data);
        data.extend_from_slice(&bottom.data);
        Ok(Self {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        })
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &Self) -> Result<(), NumericError> {
        if self.shape() != other.shape() {
            return Err(NumericError::Shape {
                op: "add_scaled",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub fn add_diagonal(&mut self, v: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Operand orientation for [`gemm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

fn op_shape(m: &DenseMatrix, op: Op) -> (usize, usize) {
    match op {
        Op::N => (m.rows, m.cols),
        Op::T => (m.cols, m.rows),
    }
}

fn op_strides(m: &DenseMatrix, op: Op) -> (isize, isize) {
    match op {
        Op::N => (m.cols as isize, 1),
        Op::T => (1, m.cols as isize),
    }
}

/// Output rows per parallel task; fixed so results do not depend on the
/// number of worker threads.
const GEMM_ROW_BLOCK: usize = 64;

/// `op(a) * op(b)`.
pub fn gemm(a: &DenseMatrix, opa: Op, b: &DenseMatrix, opb: Op) -> Result<DenseMatrix, NumericError> {
    let (m, k) = op_shape(a, opa);
    let (k2, n) = op_shape(b, opb);
    if k != k2 {
        return Err(NumericError::Shape {
            op: "gemm",
            lhs: (m, k),
            rhs: (k2, n),
        });
    }
    let mut out = DenseMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return Ok(out);
    }
    let (rsa, csa) = op_strides(a, opa);
    let (rsb, csb) = op_strides(b, opb);
    out.data
        .par_chunks_mut(GEMM_ROW_BLOCK * n)
        .enumerate()
        .for_each(|(blk, chunk)| {
            let row0 = blk * GEMM_ROW_BLOCK;
            let rows = chunk.len() / n;
            // SAFETY: pointers and strides describe in-bounds views of `a`,
            // `b`, and the disjoint output chunk.
            unsafe {
                let a_ptr = a.data.as_ptr().offset(row0 as isize * rsa);
                matrixmultiply::dgemm(
                    rows,
                    k,
                    n,
                    1.0,
                    a_ptr,
                    rsa,
                    csa,
                    b.data.as_ptr(),
                    rsb,
                    csb,
                    0.0,
                    chunk.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
        });
    Ok(out)
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericError> {
    gemm(a, Op::N, b, Op::N)
}

/// `aᵀ b`
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericError> {
    gemm(a, Op::T, b, Op::N)
}

/// `a bᵀ`
pub fn matmul_nt(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericError> {
    gemm(a, Op::N, b, Op::T)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Lower-triangular Cholesky factor `M = L Lᵀ`, kept for repeated solves.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle
    /// of `m` is read. `step` names the caller in the error.
    pub fn factor(m: &DenseMatrix, step: &'static str) -> Result<Self, NumericError> {
        if m.rows != m.cols {
            return Err(NumericError::Shape {
                op: "cholesky",
                lhs: m.shape(),
                rhs: m.shape(),
            });
        }
        if !m.is_finite() {
            return Err(NumericError::NonFinite(step));
        }
        let n = m.rows;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let v = m.data[i * n + j] - s;
                if i == j {
                    if v <= 0.0 || !v.is_finite() {
                        return Err(NumericError::NotPositiveDefinite {
                            step,
                            pivot: i,
                            value: v,
                        });
                    }
                    l[i * n + i] = v.sqrt();
                } else {
                    l[i * n + j] = v / l[j * n + j];
                }
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M Z = rhs` by forward then backward substitution.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, NumericError> {
        let n = self.n;
        if rhs.rows != n {
            return Err(NumericError::Shape {
                op: "cholesky_solve",
                lhs: (n, n),
                rhs: rhs.shape(),
            });
        }
        let k = rhs.cols;
        let mut z = rhs.clone();
        let l = &self.lower;
        // L y = rhs
        for i in 0..n {
            let (done, rest) = z.data.split_at_mut(i * k);
            let zi = &mut rest[..k];
            for j in 0..i {
                let lij = l[i * n + j];
                if lij != 0.0 {
                    let zj = &done[j * k..(j + 1) * k];
                    zi.iter_mut().zip(zj).for_each(|(a, b)| *a -= lij * b);
                }
            }
            let d = l[i * n + i];
            zi.iter_mut().for_each(|a| *a /= d);
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let (head, tail) = z.data.split_at_mut((i + 1) * k);
            let zi = &mut head[i * k..];
            for j in (i + 1)..n {
                let lji = l[j * n + i];
                if lji != 0.0 {
                    let zj = &tail[(j - i - 1) * k..(j - i) * k];
                    zi.iter_mut().zip(zj).for_each(|(a, b)| *a -= lji * b);
                }
            }
            let d = l[i * n + i];
            zi.iter_mut().for_each(|a| *a /= d);
        }
        Ok(z)
    }
}

/// Solves `M Z = rhs` for symmetric positive-definite `M`.
pub fn spd_solve(m: &DenseMatrix, rhs: &DenseMatrix, step: &'static str) -> Result<DenseMatrix, NumericError> {
    Cholesky::factor(m, step)?.solve(rhs)
}

/// Central-difference gradient of `f` at `x`.
pub fn finite_diff_grad(f: impl Fn(&DenseMatrix) -> f64, x: &DenseMatrix, h: f64) -> Result<DenseMatrix, NumericError> {
    let mut probe = x.clone();
    let mut grad = DenseMatrix::zeros(x.rows, x.cols);
    for idx in 0..x.data.len() {
        let orig = probe.data[idx];
        probe.data[idx] = orig + h;
        let fp = f(&probe);
        probe.data[idx] = orig - h;
        let fm = f(&probe);
        probe.data[idx] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(NumericError::NonFinite("finite_diff_grad"));
        }
        grad.data[idx] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}
