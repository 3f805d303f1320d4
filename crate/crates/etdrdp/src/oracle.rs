//! Dense complex linear algebra used only as a reference path in tests and
//! as a fallback for full-operator solves on small periodic systems.
//!
//! Everything here is O(n^2)/O(n^3) and guarded by the caller; the production
//! stepper never routes through dense code on split operators.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DenseError {
    #[error("matrix is singular to working precision at pivot {0}")]
    Singular(usize),
    #[error("dimension mismatch: matrix {n}, vector {got}")]
    SizeMismatch { n: usize, got: usize },
}

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseMat {
    pub fn zeros(n: usize) -> Self {
        DenseMat { n, data: vec![Complex64::ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::ZERO; self.n];
        for r in 0..self.n {
            let row = &self.data[r * self.n..(r + 1) * self.n];
            let mut acc = Complex64::ZERO;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[r] = acc;
        }
        y
    }

    pub fn matmul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DenseMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, a: Complex64) -> DenseMat {
        DenseMat { n: self.n, data: self.data.iter().map(|z| z * a).collect() }
    }

    pub fn add(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.n, other.n);
        DenseMat {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.n, other.n);
        DenseMat {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| {
                self.data[r * self.n..(r + 1) * self.n]
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseMat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// LU with partial pivoting.
    pub fn lu(&self) -> Result<DenseLu, DenseError> {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, mag) = (k..n)
                .map(|r| (r, a[(r, k)].norm()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if mag < f64::MIN_POSITIVE {
                return Err(DenseError::Singular(k));
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = a[(k, k)];
            for r in k + 1..n {
                let factor = a[(r, k)] / pivot;
                a[(r, k)] = factor;
                for j in k + 1..n {
                    let akj = a[(k, j)];
                    a[(r, j)] -= factor * akj;
                }
            }
        }
        Ok(DenseLu { lu: a, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, DenseError> {
        self.lu()?.solve(b)
    }

    /// Matrix exponential by scaling and squaring on the Taylor series.
    /// Reference implementation for the rational-approximation checks; sizes
    /// stay tiny, so a plain degree-16 series after scaling is plenty.
    pub fn expm(&self) -> DenseMat {
        let norm = self.norm_inf();
        let scale_pow = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let factor = Complex64::new(1.0 / (1u64 << scale_pow) as f64, 0.0);
        let scaled = self.scale(factor);
        let mut result = DenseMat::identity(self.n);
        let mut term = DenseMat::identity(self.n);
        for j in 1..=16u64 {
            term = term.matmul(&scaled).scale(Complex64::new(1.0 / j as f64, 0.0));
            result = result.add(&term);
        }
        for _ in 0..scale_pow {
            result = result.matmul(&result);
        }
        result
    }
}

impl Index<(usize, usize)> for DenseMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.n + c]
    }
}

/// Factored form of a dense matrix; reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMat,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, DenseError> {
        let n = self.lu.n;
        if b.len() != n {
            return Err(DenseError::SizeMismatch { n, got: b.len() });
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&i| b[i]).collect();
        for r in 1..n {
            for k in 0..r {
                let factor = self.lu[(r, k)];
                let xk = x[k];
                x[r] -= factor * xk;
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                let factor = self.lu[(r, k)];
                let xk = x[k];
                x[r] -= factor * xk;
            }
            x[r] /= self.lu[(r, r)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solve_recovers_known_vector() {
        let n = 7;
        let mut a = DenseMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = c(((i * 3 + j) as f64 * 0.71).sin(), ((i + j * 5) as f64 * 0.31).cos());
            }
            a[(i, i)] += c(4.0, 0.0);
        }
        let x_true: Vec<Complex64> = (0..n).map(|i| c(i as f64, -(i as f64) / 2.0)).collect();
        let b = a.matvec(&x_true);
        let x = a.solve(&b).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).norm() < 1e-11);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let mut a = DenseMat::zeros(2);
        a[(0, 1)] = Complex64::ONE;
        a[(1, 0)] = Complex64::ONE;
        let x = a.solve(&[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert!((x[0] - c(3.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DenseMat::zeros(3);
        assert!(matches!(a.lu(), Err(DenseError::Singular(_))));
    }

    #[test]
    fn expm_diagonal() {
        let mut a = DenseMat::zeros(2);
        a[(0, 0)] = c(-1.0, 0.0);
        a[(1, 1)] = c(0.0, 2.0);
        let e = a.expm();
        assert!((e[(0, 0)] - c((-1.0f64).exp(), 0.0)).norm() < 1e-13);
        assert!((e[(1, 1)] - Complex64::new(0.0, 2.0).exp()).norm() < 1e-13);
        assert!(e[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn expm_nilpotent() {
        // exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let mut a = DenseMat::zeros(2);
        a[(0, 1)] = Complex64::ONE;
        let e = a.expm();
        assert!((e[(0, 0)] - Complex64::ONE).norm() < 1e-14);
        assert!((e[(0, 1)] - Complex64::ONE).norm() < 1e-14);
        assert!(e[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn expm_additivity_on_commuting_pair() {
        let mut a = DenseMat::zeros(3);
        let mut b = DenseMat::zeros(3);
        for i in 0..3 {
            a[(i, i)] = c(-0.3 * i as f64, 0.1);
            b[(i, i)] = c(-0.7, 0.2 * i as f64);
        }
        let lhs = a.add(&b).expm();
        let rhs = a.expm().matmul(&b.expm());
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
