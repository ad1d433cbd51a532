//! Dense row-major matrix of f64 with exactly the arithmetic the model needs.
//!
//! Every multiply inside [`Matrix::matmul`] is recorded by the probe module,
//! and every allocation/drop updates the live-bytes accounting, so FLOP and
//! memory instrumentation come for free everywhere in the crate.

use crate::error::{Error, Result};
use crate::numkernel::probe;

/// Dense real matrix, row-major. Zero-sized dimensions are permitted so that
/// empty concatenations (e.g. a coefficient block with zero rows) stay
/// well-formed.
#[derive(Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        probe::record_alloc(data.len());
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        probe::record_alloc(rows * cols);
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        probe::record_alloc(rows * cols);
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Identity matrix.
    pub fn eye(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Data("ragged row lengths".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Matrix product. The inner loops run in i-k-j order so the innermost
    /// pass is over contiguous memory.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(self.shape_err("matmul", rhs));
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        probe::count_macs((m * k * n) as u64);
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let b_row = &rhs.data[p * n..(p + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(self.shape_err("add", rhs));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(self.shape_err("sub", rhs));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    pub fn add_scalar(&self, s: f64) -> Matrix {
        self.map(|v| v + s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Matrix::new(self.rows, self.cols, data).expect("shape preserved")
    }

    pub fn relu(&self) -> Matrix {
        self.map(|v| v.max(0.0))
    }

    /// Stack side by side: `[self | rhs]`.
    pub fn concat_cols(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(self.shape_err("concat_cols", rhs));
        }
        let cols = self.cols + rhs.cols;
        let mut out = Matrix::zeros(self.rows, cols);
        for r in 0..self.rows {
            out.data[r * cols..r * cols + self.cols]
                .copy_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
            out.data[r * cols + self.cols..(r + 1) * cols]
                .copy_from_slice(&rhs.data[r * rhs.cols..(r + 1) * rhs.cols]);
        }
        Ok(out)
    }

    /// Stack on top of each other: `[self / rhs]`.
    pub fn concat_rows(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(self.shape_err("concat_rows", rhs));
        }
        let mut data = Vec::with_capacity(self.data.len() + rhs.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&rhs.data);
        Matrix::new(self.rows + rhs.rows, self.cols, data)
    }

    /// Copy of columns `[start, end)`.
    pub fn slice_cols(&self, start: usize, end: usize) -> Matrix {
        debug_assert!(start <= end && end <= self.cols);
        let w = end - start;
        let mut out = Matrix::zeros(self.rows, w);
        for r in 0..self.rows {
            out.data[r * w..(r + 1) * w]
                .copy_from_slice(&self.data[r * self.cols + start..r * self.cols + end]);
        }
        out
    }

    /// Copy of rows `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix {
        debug_assert!(start <= end && end <= self.rows);
        Matrix::new(
            end - start,
            self.cols,
            self.data[start * self.cols..end * self.cols].to_vec(),
        )
        .expect("slice shape")
    }

    /// Column-wise softmax, stabilized by subtracting each column's maximum.
    /// Every output column sums to one.
    pub fn softmax_cols(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for c in 0..self.cols {
            let mut mx = f64::NEG_INFINITY;
            for r in 0..self.rows {
                mx = mx.max(self.get(r, c));
            }
            let mut sum = 0.0;
            for r in 0..self.rows {
                let e = (self.get(r, c) - mx).exp();
                out.set(r, c, e);
                sum += e;
            }
            for r in 0..self.rows {
                out.set(r, c, out.get(r, c) / sum);
            }
        }
        out
    }

    /// Row-wise softmax; every output row sums to one.
    pub fn softmax_rows(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            let mx = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let out_row = &mut out.data[r * self.cols..(r + 1) * self.cols];
            let mut sum = 0.0;
            for (o, &v) in out_row.iter_mut().zip(row) {
                *o = (v - mx).exp();
                sum += *o;
            }
            for o in out_row.iter_mut() {
                *o /= sum;
            }
        }
        out
    }

    /// Per-row normalization to zero mean and unit variance over the columns.
    /// `eps` sits inside the square root so an all-constant row maps to zeros
    /// instead of NaN.
    pub fn layer_norm_rows(&self, eps: f64) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        let n = self.cols as f64;
        for r in 0..self.rows {
            let row = self.row(r);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let s = (var + eps).sqrt();
            for c in 0..self.cols {
                out.set(r, c, (self.get(r, c) - mean) / s);
            }
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    fn shape_err(&self, op: &'static str, rhs: &Matrix) -> Error {
        Error::Shape {
            op,
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: rhs.rows,
            right_cols: rhs.cols,
        }
    }
}

impl Clone for Matrix {
    fn clone(&self) -> Self {
        probe::record_alloc(self.data.len());
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
    }
}

impl Drop for Matrix {
    fn drop(&mut self) {
        probe::record_dealloc(self.data.len());
    }
}

/// Compare entrywise with an absolute tolerance.
pub fn approx_eq(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    a.shape() == b.shape()
        && a.data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| (x - y).abs() <= tol)
}
