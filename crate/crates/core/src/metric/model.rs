use nalgebra::DMatrix;

use crate::error::{ReidError, Result};

/// Region-wise pair of `d x d` matrices: a Mahalanobis block (kept negative
/// semi-definite in the final model) and an unconstrained bilinear block.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBlock {
    pub w_m: DMatrix<f64>,
    pub w_b: DMatrix<f64>,
}

impl MetricBlock {
    pub fn zeros(d: usize) -> Self {
        MetricBlock {
            w_m: DMatrix::zeros(d, d),
            w_b: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_m.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricModel {
    pub blocks: Vec<MetricBlock>,
}

impl MetricModel {
    pub fn zeros(dims: &[usize]) -> Self {
        MetricModel {
            blocks: dims.iter().map(|&d| MetricBlock::zeros(d)).collect(),
        }
    }

    /// `W_M = -I`, `W_B = 0`: the score is the negated squared Euclidean
    /// distance summed over regions.
    pub fn negative_euclidean(dims: &[usize]) -> Self {
        MetricModel {
            blocks: dims
                .iter()
                .map(|&d| MetricBlock {
                    w_m: -DMatrix::identity(d, d),
                    w_b: DMatrix::zeros(d, d),
                })
                .collect(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(MetricBlock::dim).collect()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.dims())
    }

    pub fn same_shape(&self, other: &MetricModel) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_shape(&self, other: &MetricModel) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(ReidError::DimensionMismatch(format!(
                "model blocks {:?} vs {:?}",
                self.dims(),
                other.dims()
            )))
        }
    }

    /// Applies `f` to every matrix (both kinds) of every block.
    pub fn map(&self, mut f: impl FnMut(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        MetricModel {
            blocks: self
                .blocks
                .iter()
                .map(|b| MetricBlock {
                    w_m: f(&b.w_m),
                    w_b: f(&b.w_b),
                })
                .collect(),
        }
    }

    /// Elementwise combination of two equally shaped models.
    pub fn zip_map(
        &self,
        other: &MetricModel,
        mut f: impl FnMut(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> Self {
        debug_assert!(self.same_shape(other));
        MetricModel {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| MetricBlock {
                    w_m: f(&a.w_m, &b.w_m),
                    w_b: f(&a.w_b, &b.w_b),
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &MetricModel) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &MetricModel) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|a| a * s)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &MetricModel) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.w_m.zip_apply(&b.w_m, |x, y| *x += alpha * y);
            a.w_b.zip_apply(&b.w_b, |x, y| *x += alpha * y);
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.w_m.norm_squared() + b.w_b.norm_squared())
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            symmetrize_in_place(&mut b.w_m);
            symmetrize_in_place(&mut b.w_b);
        }
    }

    /// Largest asymmetry `|A_ij - A_ji|` over all matrices.
    pub fn max_asymmetry(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| [&b.w_m, &b.w_b])
            .map(|m| (m - m.transpose()).amax())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
