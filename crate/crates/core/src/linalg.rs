//! Small dense complex matrices for per-subcarrier MIMO processing.

use num_complex::Complex;

use crate::Real;

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Copy with the listed columns only, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out[(r, j)] = self[(r, c)];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                for c in 0..rhs.cols {
                    out[(r, c)] = out[(r, c)] + a * rhs[(k, c)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, x.len(), "matvec dimensions");
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn add_diagonal(&mut self, v: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)].re = self[(i, i)].re + v;
        }
    }

    /// Solves `self · X = rhs` by Gauss-Jordan elimination with partial
    /// pivoting. `None` when a pivot magnitude falls below `tiny`.
    pub fn solve(&self, rhs: &Self, tiny: T) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "solve needs a square matrix");
        assert_eq!(self.rows, rhs.rows, "solve dimensions");
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| {
                a[(i, col)].norm_sqr().partial_cmp(&a[(j, col)].norm_sqr()).unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[(piv, col)].norm() <= tiny {
                return None;
            }
            if piv != col {
                a.swap_rows(piv, col);
                b.swap_rows(piv, col);
            }
            let inv = a[(col, col)].inv();
            for c in 0..n {
                a[(col, c)] = a[(col, c)] * inv;
            }
            for c in 0..b.cols {
                b[(col, c)] = b[(col, c)] * inv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f.norm_sqr() == T::zero() {
                    continue;
                }
                for c in 0..n {
                    a[(r, c)] = a[(r, c)] - f * a[(col, c)];
                }
                for c in 0..b.cols {
                    b[(r, c)] = b[(r, c)] - f * b[(col, c)];
                }
            }
        }
        Some(b)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_inverse() {
        let a = CMatrix::from_vec(
            3,
            3,
            vec![
                Complex::new(2.0, 1.0),
                Complex::new(0.0, -1.0),
                Complex::new(1.0, 0.0),
                Complex::new(0.5, 0.0),
                Complex::new(3.0, 0.0),
                Complex::new(0.0, 2.0),
                Complex::new(-1.0, 0.0),
                Complex::new(1.0, 1.0),
                Complex::new(4.0, -1.0),
            ],
        );
        let inv = a.solve(&CMatrix::identity(3), 1e-14).unwrap();
        let prod = a.matmul(&inv);
        for r in 0..3 {
            for c in 0..3 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((prod[(r, c)] - Complex::new(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_is_none() {
        let a = CMatrix::<f64>::from_vec(2, 2, vec![Complex::new(1.0, 0.0); 4]);
        assert!(a.solve(&CMatrix::identity(2), 1e-12).is_none());
    }

    #[test]
    fn adjoint_and_matvec() {
        let a = CMatrix::from_vec(1, 2, vec![Complex::new(1.0, 2.0), Complex::new(0.0, 1.0)]);
        let h = a.adjoint();
        assert_eq!(h[(0, 0)], Complex::new(1.0, -2.0));
        let y = a.matvec(&[Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]);
        assert_eq!(y[0], Complex::new(0.0, 2.0));
    }
}
