use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{LinalgError, Mat, math};

/// Real symmetric matrix in packed upper-triangle storage.
///
/// Symmetry is structural: `get(i, j)` and `get(j, i)` read the same slot.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    upper: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, upper: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut s = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            s.set(i, i, d);
        }
        s
    }

    pub fn scalar(x: f64) -> Self {
        Self { n: 1, upper: vec![x] }
    }

    /// Takes the symmetric part `(M + Mᵀ)/2` of a square matrix.
    pub fn from_dense(m: &Mat) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        let n = m.rows();
        let mut s = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                s.set(i, j, 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        Ok(s)
    }

    /// Packed upper triangle, row by row.
    pub fn from_packed(n: usize, upper: Vec<f64>) -> Result<Self, LinalgError> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(LinalgError::Dimension { expected: (n * (n + 1) / 2, 1), found: (upper.len(), 1) });
        }
        Ok(Self { n, upper })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = packed_index(self.n, i, j);
        self.upper[k] = v;
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        math::sqrt(s)
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, upper: self.upper.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, rhs: &SymMatrix) -> Self {
        assert_eq!(self.n, rhs.n);
        Self { n: self.n, upper: self.upper.iter().zip(&rhs.upper).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &SymMatrix) -> Self {
        assert_eq!(self.n, rhs.n);
        Self { n: self.n, upper: self.upper.iter().zip(&rhs.upper).map(|(a, b)| a - b).collect() }
    }

    pub fn max_abs_diff(&self, rhs: &SymMatrix) -> f64 {
        self.upper.iter().zip(&rhs.upper).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.to_dense())
    }
}
