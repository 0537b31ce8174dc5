//! Dense row-major square matrices.
//!
//! Patch counts in demographic applications are small (n up to ~100), so
//! everything here is plain dense double-precision storage with direct
//! O(n^3) algorithms.

use crate::error::{Error, Result};

/// Square matrix stored row-major in a flat `Vec<f64>`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row vectors, rejecting non-square input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::NonSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from a flat row-major slice of length n².
    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// A + c·I.
    pub fn plus_scaled_identity(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += c;
        }
        out
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.at(i, j)).sum()
    }

    /// Maximum absolute column sum (the induced 1-norm).
    pub fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Extracts the principal submatrix on the given (distinct) indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut out = Self::zeros(k);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                out.data[r * k + c] = self.at(i, j);
            }
        }
        out
    }

    /// Applies a symmetric permutation: out[r][c] = self[perm[r]][perm[c]].
    pub fn permuted(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[r * n + c] = self.at(perm[r], perm[c]);
            }
        }
        out
    }

    /// Solves A·X = B by LU factorization with partial pivoting.
    pub fn solve_matrix(&self, rhs: &Self) -> Result<Self> {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = rhs.data.clone();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return Err(Error::NoConvergence {
                    what: "linear solve (singular matrix)",
                    iterations: 0,
                });
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                    x.swap(k * n + j, piv * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                for j in 0..n {
                    x[i * n + j] -= f * x[k * n + j];
                }
            }
        }
        for k in (0..n).rev() {
            let pivot = a[k * n + k];
            for j in 0..n {
                let mut s = x[k * n + j];
                for c in k + 1..n {
                    s -= a[k * n + c] * x[c * n + j];
                }
                x[k * n + j] = s / pivot;
            }
        }
        Ok(Self { n, data: x })
    }

    /// Solves A·x = b with partial pivoting, replacing near-zero pivots by
    /// `pivot_floor`. Intended for inverse iteration, where the matrix is
    /// singular up to roundoff and the blow-up direction is the answer.
    pub fn solve_vector_regularized(&self, b: &[f64], pivot_floor: f64) -> Vec<f64> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                x.swap(k, piv);
            }
            if a[k * n + k].abs() < pivot_floor {
                a[k * n + k] = if a[k * n + k] < 0.0 {
                    -pivot_floor
                } else {
                    pivot_floor
                };
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..n {
                s -= a[k * n + c] * x[c];
            }
            x[k] = s / a[k * n + k];
        }
        x
    }

    /// Numerical rank by Gaussian elimination with full (row and column)
    /// pivoting; pivots with magnitude at most `tol` count as zero.
    pub fn rank(&self, tol: f64) -> usize {
        let n = self.n;
        let mut a = self.data.clone();
        let mut rank = 0;
        let mut cols: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut best = 0.0;
            let (mut pr, mut pc) = (k, k);
            for i in k..n {
                for cj in k..n {
                    let v = a[i * n + cols[cj]].abs();
                    if v > best {
                        best = v;
                        pr = i;
                        pc = cj;
                    }
                }
            }
            if best <= tol {
                break;
            }
            cols.swap(k, pc);
            if pr != k {
                for j in 0..n {
                    a.swap(k * n + j, pr * n + j);
                }
            }
            rank += 1;
            let pivot = a[k * n + cols[k]];
            for i in k + 1..n {
                let f = a[i * n + cols[k]] / pivot;
                if f == 0.0 {
                    continue;
                }
                for cj in k..n {
                    a[i * n + cols[cj]] -= f * a[k * n + cols[cj]];
                }
            }
        }
        rank
    }
}
