//! Exact permanent and determinant kernels over double-precision complex
//! matrices.
//!
//! There is no arbitrary-precision path: every kernel works in `Complex64`.
//! `permanent_naive` sums all n! permutation products and exists as the
//! reference for `permanent_ryser`, the inclusion–exclusion evaluation used
//! everywhere else.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest size accepted by [`permanent_naive`].
pub const NAIVE_PERMANENT_LIMIT: usize = 10;
/// Largest size accepted by [`permanent_ryser`].
pub const RYSER_PERMANENT_LIMIT: usize = 30;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Consistency(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / cols.max(1),
                col: idx % cols.max(1),
            });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Consistency("ragged rows".into()));
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(1.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Multiplies one row by `c` in place.
    pub fn scale_row(&mut self, row: usize, c: Complex64) {
        for j in 0..self.cols {
            self.data[row * self.cols + j] *= c;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Entry-wise complex conjugate of the transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        t.data.iter_mut().for_each(|z| *z = z.conj());
        t
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

/// Which permanent kernel to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermanentMethod {
    #[default]
    Ryser,
    Naive,
}

impl PermanentMethod {
    pub fn name(self) -> &'static str {
        match self {
            PermanentMethod::Ryser => "ryser",
            PermanentMethod::Naive => "naive",
        }
    }
}

pub fn permanent(m: &ComplexMatrix, method: PermanentMethod) -> Result<Complex64> {
    match method {
        PermanentMethod::Ryser => permanent_ryser(m),
        PermanentMethod::Naive => permanent_naive(m),
    }
}

/// Sum over all n! permutations of Π_i m[i, σ(i)].
pub fn permanent_naive(m: &ComplexMatrix) -> Result<Complex64> {
    let n = m.require_square()?;
    if n > NAIVE_PERMANENT_LIMIT {
        return Err(Error::SizeLimit {
            what: "naive permanent",
            size: n,
            limit: NAIVE_PERMANENT_LIMIT,
        });
    }

    fn walk(m: &ComplexMatrix, row: usize, used: u32, partial: Complex64, acc: &mut Complex64) {
        if row == m.rows() {
            *acc += partial;
            return;
        }
        for col in 0..m.cols() {
            if used & (1 << col) == 0 {
                walk(m, row + 1, used | (1 << col), partial * m.get(row, col), acc);
            }
        }
    }

    let mut acc = Complex64::new(0.0, 0.0);
    walk(m, 0, 0, Complex64::new(1.0, 0.0), &mut acc);
    Ok(acc)
}

/// Ryser's inclusion–exclusion formula,
/// perm(m) = (-1)^n Σ_{S ⊆ cols} (-1)^{|S|} Π_i Σ_{j ∈ S} m[i, j],
/// with subsets visited in Gray-code order so each step updates the row
/// sums by a single column: O(2^n · n).
pub fn permanent_ryser(m: &ComplexMatrix) -> Result<Complex64> {
    let n = m.require_square()?;
    if n > RYSER_PERMANENT_LIMIT {
        return Err(Error::SizeLimit {
            what: "Ryser permanent",
            size: n,
            limit: RYSER_PERMANENT_LIMIT,
        });
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }

    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let flip = k.trailing_zeros() as usize;
        gray ^= 1 << flip;
        let adding = gray & (1 << flip) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            let v = m.get(i, flip);
            if adding {
                *s += v;
            } else {
                *s -= v;
            }
        }
        let prod = row_sums.iter().fold(Complex64::new(1.0, 0.0), |p, &s| p * s);
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &ComplexMatrix) -> Result<Complex64> {
    let n = m.require_square()?;
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&x, &y| a.get(x, k).norm().total_cmp(&a.get(y, k).norm()))
            .unwrap_or(k);
        if a.get(pivot, k).norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if pivot != k {
            a.swap_rows(pivot, k);
            det = -det;
        }
        let p = a.get(k, k);
        det *= p;
        for i in (k + 1)..n {
            let factor = a.get(i, k) / p;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let v = a.get(i, j) - factor * a.get(k, j);
                a.set(i, j, v);
            }
        }
    }
    Ok(det)
}
