use nalgebra::{DMatrix, DVector};

use super::layout::RegionKind;
use crate::error::{ReidError, Result};

/// Linear projection onto the top principal directions of one region kind.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub kind: RegionKind,
    pub mean: DVector<f64>,
    /// `D x k`, orthonormal columns ordered by decreasing variance.
    pub basis: DMatrix<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    /// `basis^T (v - mean)`
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.input_dim() {
            return Err(ReidError::DimensionMismatch(format!(
                "PCA input has {} entries, model expects {}",
                v.len(),
                self.input_dim()
            )));
        }
        Ok(self.basis.tr_mul(&(v - &self.mean)))
    }
}

/// Fits a PCA model on log-transformed region descriptors.
///
/// The eigenproblem is solved on whichever of the `D x D` covariance or the
/// `n x n` Gram matrix is smaller; both give the same leading directions.
/// Each basis column is oriented so that its largest-magnitude entry is
/// positive.
pub fn fit_pca(samples: &[DVector<f64>], kind: RegionKind, k: usize) -> Result<PcaModel> {
    let n = samples.len();
    if n < 2 {
        return Err(ReidError::InsufficientSamples { found: n, needed: 2 });
    }
    let dim = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(ReidError::DimensionMismatch(format!(
            "PCA samples of length {dim} and {}",
            bad.len()
        )));
    }
    let max_k = dim.min(n - 1);
    if k == 0 || k > max_k {
        return Err(ReidError::DimensionTooLarge { k, max: max_k });
    }

    let mut mean = DVector::zeros(dim);
    for s in samples {
        mean += s;
    }
    mean /= n as f64;
    // D x n centered data
    let mut centered = DMatrix::zeros(dim, n);
    for (j, s) in samples.iter().enumerate() {
        centered.set_column(j, &(s - &mean));
    }
    let scale = 1.0 / (n - 1) as f64;

    let mut basis = if dim <= n {
        let cov = (&centered * centered.transpose()) * scale;
        let eig = cov.symmetric_eigen();
        let order = descending(eig.eigenvalues.as_slice());
        DMatrix::from_fn(dim, k, |r, c| eig.eigenvectors[(r, order[c])])
    } else {
        let gram = centered.tr_mul(&centered) * scale;
        let eig = gram.symmetric_eigen();
        let order = descending(eig.eigenvalues.as_slice());
        let top = eig.eigenvalues[order[0]].max(0.0);
        let mut basis = DMatrix::zeros(dim, k);
        for c in 0..k {
            let mu = eig.eigenvalues[order[c]];
            if !(mu > top * 1e-12) {
                return Err(ReidError::DimensionTooLarge { k, max: c });
            }
            let mut col = &centered * eig.eigenvectors.column(order[c]);
            col /= col.norm();
            basis.set_column(c, &col);
        }
        basis
    };

    for mut col in basis.column_iter_mut() {
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(PcaModel { kind, mean, basis })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}
