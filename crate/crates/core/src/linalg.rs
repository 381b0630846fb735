//! Small dense symmetric linear algebra: just enough Cholesky machinery for
//! normal-equation solves and Gaussian sampling in a few dozen dimensions.

// Triangular solves read clearer with explicit index ranges.
#![allow(clippy::needless_range_loop)]

#[allow(unused_imports)] // f64 methods come from the trait in no_std builds
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::Result;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// stored as a full row-major square for simplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor a symmetric positive definite matrix given row-major.
    /// `order` is only used to report which truncation order failed.
    pub fn factor(matrix: &[f64], dim: usize, order: usize) -> Result<Self> {
        debug_assert_eq!(matrix.len(), dim * dim);
        let mut l = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut sum = matrix[i * dim + j];
                for k in 0..j {
                    sum -= l[i * dim + k] * l[j * dim + k];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::SingularNormalMatrix { order });
                    }
                    l[i * dim + j] = sum.sqrt();
                } else {
                    l[i * dim + j] = sum / l[j * dim + j];
                }
            }
        }
        Ok(Cholesky { dim, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The factor of the leading `order`-by-`order` principal block is the
    /// leading block of the full factor, so prefix solves come for free.
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    /// Solve L y = b using only the leading `order` rows.
    pub fn solve_forward_prefix(&self, b: &[f64], order: usize) -> Vec<f64> {
        debug_assert!(order <= self.dim && b.len() >= order);
        let mut y = vec![0.0; order];
        for i in 0..order {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.at(i, k) * y[k];
            }
            y[i] = sum / self.at(i, i);
        }
        y
    }

    /// Solve Lᵀ x = y on the leading `order` block.
    pub fn solve_backward_prefix(&self, y: &[f64], order: usize) -> Vec<f64> {
        debug_assert!(order <= self.dim && y.len() >= order);
        let mut x = vec![0.0; order];
        for i in (0..order).rev() {
            let mut sum = y[i];
            for k in (i + 1)..order {
                sum -= self.at(k, i) * x[k];
            }
            x[i] = sum / self.at(i, i);
        }
        x
    }

    /// Solve (L Lᵀ) x = b on the leading block.
    pub fn solve_prefix(&self, b: &[f64], order: usize) -> Vec<f64> {
        let y = self.solve_forward_prefix(b, order);
        self.solve_backward_prefix(&y, order)
    }

    /// log |L Lᵀ| restricted to the leading block.
    pub fn log_det_prefix(&self, order: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..order {
            acc += self.at(i, i).ln();
        }
        2.0 * acc
    }

    /// Quadratic form xᵀ (L Lᵀ) x on the leading block.
    pub fn quad_form_prefix(&self, x: &[f64], order: usize) -> f64 {
        // ||Lᵀ x||²
        let mut acc = 0.0;
        for i in 0..order {
            let mut row = 0.0;
            for k in i..order {
                row += self.at(k, i) * x[k];
            }
            acc += row * row;
        }
        acc
    }
}

/// Row-major Gram matrix XᵀX of an n-by-p design given row-major.
pub fn gram(design: &[f64], n: usize, p: usize) -> Vec<f64> {
    debug_assert_eq!(design.len(), n * p);
    let mut g = vec![0.0; p * p];
    for row in design.chunks_exact(p) {
        for i in 0..p {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in 0..=i {
                g[i * p + j] += ri * row[j];
            }
        }
    }
    for i in 0..p {
        for j in (i + 1)..p {
            g[i * p + j] = g[j * p + i];
        }
    }
    g
}

/// Xᵀ y for a row-major n-by-p design.
pub fn design_t_vec(design: &[f64], y: &[f64], n: usize, p: usize) -> Vec<f64> {
    debug_assert_eq!(design.len(), n * p);
    debug_assert_eq!(y.len(), n);
    let mut out = vec![0.0; p];
    for (row, &yi) in design.chunks_exact(p).zip(y) {
        for j in 0..p {
            out[j] += row[j] * yi;
        }
    }
    out
}
