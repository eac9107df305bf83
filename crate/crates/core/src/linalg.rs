//! Small dense linear algebra: row-major matrices and Householder least squares.

use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<T>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn quad_form(&self, v: &[T]) -> T {
        let mv = self.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| *a * *b).sum()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative threshold on |R_jj| (after column scaling) below which a design is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Householder QR factorisation of a tall matrix, stored compactly.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    /// Householder vectors below the diagonal, R on and above it.
    qr: Matrix<T>,
    /// Diagonal of R.
    r_diag: Vec<T>,
    /// Column norms of the original matrix (used for the rank test).
    col_norms: Vec<T>,
}

impl<T: Real> Qr<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        let (m, n) = (a.rows, a.cols);
        let mut qr = a.clone();
        let mut r_diag = vec![T::zero(); n];
        let col_norms: Vec<T> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<T>().sqrt())
            .collect();
        for k in 0..n.min(m) {
            let mut nrm = T::zero();
            for i in k..m {
                nrm = nrm.hypot(qr[(i, k)]);
            }
            if nrm != T::zero() {
                if qr[(k, k)] < T::zero() {
                    nrm = -nrm;
                }
                for i in k..m {
                    qr[(i, k)] = qr[(i, k)] / nrm;
                }
                qr[(k, k)] = qr[(k, k)] + T::one();
                for j in (k + 1)..n {
                    let mut s = T::zero();
                    for i in k..m {
                        s = s + qr[(i, k)] * qr[(i, j)];
                    }
                    s = -s / qr[(k, k)];
                    for i in k..m {
                        qr[(i, j)] = qr[(i, j)] + s * qr[(i, k)];
                    }
                }
            }
            r_diag[k] = -nrm;
        }
        Self { qr, r_diag, col_norms }
    }

    /// Index of the first column that is (numerically) a combination of earlier ones.
    pub fn first_dependent_column(&self) -> Option<usize> {
        if self.qr.rows < self.qr.cols {
            return Some(self.qr.rows);
        }
        let tol = T::lit(RANK_TOLERANCE);
        (0..self.qr.cols).find(|&j| {
            let norm = self.col_norms[j];
            norm == T::zero() || (self.r_diag[j] / norm).abs() < tol
        })
    }

    /// Least squares solution of `A x ≈ b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (m, n) = (self.qr.rows, self.qr.cols);
        assert_eq!(b.len(), m);
        let mut y = b.to_vec();
        for k in 0..n {
            let mut s = T::zero();
            for i in k..m {
                s = s + self.qr[(i, k)] * y[i];
            }
            s = -s / self.qr[(k, k)];
            for i in k..m {
                y[i] = y[i] + s * self.qr[(i, k)];
            }
        }
        let mut x = vec![T::zero(); n];
        for k in (0..n).rev() {
            let mut v = y[k];
            for j in (k + 1)..n {
                v = v - self.qr[(k, j)] * x[j];
            }
            x[k] = v / self.r_diag[k];
        }
        x
    }

    fn r(&self, i: usize, j: usize) -> T {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.qr[(i, j)],
            std::cmp::Ordering::Equal => self.r_diag[i],
            std::cmp::Ordering::Greater => T::zero(),
        }
    }

    /// `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`.
    pub fn gram_inverse(&self) -> Matrix<T> {
        let n = self.qr.cols;
        // R⁻¹ by back substitution, column by column.
        let mut rinv = Matrix::zeros(n, n);
        for c in 0..n {
            for i in (0..=c).rev() {
                let mut v = if i == c { T::one() } else { T::zero() };
                for k in (i + 1)..=c {
                    v = v - self.r(i, k) * rinv[(k, c)];
                }
                rinv[(i, c)] = v / self.r(i, i);
            }
        }
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in i.max(j)..n {
                    s = s + rinv[(i, k)] * rinv[(j, k)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }
}
