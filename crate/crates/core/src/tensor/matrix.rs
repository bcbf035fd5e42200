//! Dense complex matrices in column-major storage.
//!
//! Column-major linearization makes `vec` (column stacking) a plain copy of
//! the backing buffer, so the matrix/vector/tensor views of the same data
//! agree without reshuffling.

use num_complex::Complex64;
use std::fmt;

pub type C64 = Complex64;

/// Dense complex matrix, column-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.3e}{:+.3e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from its column-major buffer.
    pub fn from_data(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        assert!(!cols.is_empty(), "need at least one column");
        let rows = cols[0].len();
        let mut m = Matrix::zeros(rows, cols.len());
        for (c, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (r, &z) in col.iter().enumerate() {
                m[(r, c)] = z;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        assert!(c < self.cols);
        self.data[c * self.rows..(c + 1) * self.rows].to_vec()
    }

    pub fn row(&self, r: usize) -> Vec<C64> {
        assert!(r < self.rows);
        (0..self.cols).map(|c| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, col: &[C64]) {
        assert!(c < self.cols);
        assert_eq!(col.len(), self.rows);
        self.data[c * self.rows..(c + 1) * self.rows].copy_from_slice(col);
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "inner dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for c in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, c)];
                if b == C64::new(0.0, 0.0) {
                    continue;
                }
                let a_col = &self.data[k * self.rows..(k + 1) * self.rows];
                let o_col = &mut out.data[c * self.rows..(c + 1) * self.rows];
                for r in 0..self.rows {
                    o_col[r] += a_col[r] * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (k, &x) in v.iter().enumerate() {
            let col = &self.data[k * self.rows..(k + 1) * self.rows];
            for r in 0..self.rows {
                out[r] += col[r] * x;
            }
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Column-stacking vectorization. A plain copy under column-major storage.
    pub fn vec(&self) -> Vec<C64> {
        self.data.clone()
    }

    /// Inverse of `vec`: reshapes a stacked-columns vector into rows x cols.
    pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Matrix {
        assert_eq!(v.len(), rows * cols, "unvec length mismatch");
        Matrix::from_data(rows, cols, v.to_vec())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

/// Kronecker product. Block (i, j) of the result is `a[i][j] * B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ca in 0..a.cols() {
        for cb in 0..b.cols() {
            let c = ca * b.cols() + cb;
            for ra in 0..a.rows() {
                let s = a[(ra, ca)];
                for rb in 0..b.rows() {
                    out[(ra * b.rows() + rb, c)] = s * b[(rb, cb)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two vectors; the second index runs fastest.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Khatri-Rao (column-wise Kronecker) product. Column j is `a_j (x) b_j`.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(
        a.cols(),
        b.cols(),
        "Khatri-Rao column-count mismatch: {} vs {}",
        a.cols(),
        b.cols()
    );
    let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols());
    for c in 0..a.cols() {
        for ra in 0..a.rows() {
            let s = a[(ra, c)];
            for rb in 0..b.rows() {
                out[(ra * b.rows() + rb, c)] = s * b[(rb, c)];
            }
        }
    }
    out
}

/// Diagonal matrix from a vector.
pub fn diag(v: &[C64]) -> Matrix {
    let mut m = Matrix::zeros(v.len(), v.len());
    for (i, &z) in v.iter().enumerate() {
        m[(i, i)] = z;
    }
    m
}

/// Diagonal matrix built from row `j` of `b`.
pub fn diag_row(b: &Matrix, j: usize) -> Matrix {
    assert!(j < b.rows(), "diag_row index {} out of range", j);
    diag(&b.row(j))
}
