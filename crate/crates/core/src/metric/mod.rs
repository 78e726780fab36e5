//! Region-wise similarity, the two topology hinge losses, the row-sparsity
//! regularizer and their (sub)gradients.
//!
//! For regions `t` with descriptor vectors `a`, `b`:
//!
//! ```text
//! g(A, B) = sum_t (a - b)^T W_M (a - b) + a^T W_B b + b^T W_B a
//! ```
//!
//! Losses take descriptors `X_i` (probe view) and `Y_i` (gallery view) of the
//! same identity `i`:
//!
//! ```text
//! L1 = 1/N sum_i [a1 - g(X_i, Y_i) + 1/(N-1) sum_{j != i} g(X_i, Y_j)]_+
//! L2 = 1/N sum_i [a2 - g(X_i, Y_i) + mean_{j < k in S} g(Y_j, Y_k)]_+
//! ```
//!
//! where `S` is a fixed random subset of the gallery.

mod batch;
mod model;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use batch::{TrainBatch, MAX_SUBSET};
pub(crate) use batch::stack;
pub use model::{MetricBlock, MetricModel};
pub(crate) use model::symmetrize_in_place;

use crate::error::{ReidError, Result};
use crate::features::PersonDescriptor;

pub const DEFAULT_ALPHA1: f64 = 1.0;
pub const DEFAULT_ALPHA2: f64 = 1.1;
pub const DEFAULT_LAMBDA: f64 = 3e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Matched pair against the probe's mean mismatch score.
    L1,
    /// Matched pair against the mean inter-class gallery score.
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HingeLoss {
    pub value: f64,
    /// Identities whose hinge bracket is strictly positive.
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub l1: f64,
    pub l2: f64,
    pub regularizer: f64,
    pub total: f64,
}

pub fn similarity(fa: &PersonDescriptor, fb: &PersonDescriptor, model: &MetricModel) -> Result<f64> {
    let dims = model.dims();
    if fa.dims() != dims || fb.dims() != dims {
        return Err(ReidError::DimensionMismatch(format!(
            "descriptors {:?} / {:?} vs model {:?}",
            fa.dims(),
            fb.dims(),
            dims
        )));
    }
    let mut score = 0.0;
    for ((a, b), block) in fa.parts.iter().zip(&fb.parts).zip(&model.blocks) {
        let diff = a - b;
        score += diff.dot(&(&block.w_m * &diff));
        score += a.dot(&(&block.w_b * b)) + b.dot(&(&block.w_b * a));
    }
    Ok(score)
}

/// Scores of every column of `a` against every column of `b`, per region
/// stacks `d_t x n` and `d_t x m`. Blocks are combined in a fixed order.
pub(crate) fn pairwise_scores(a: &[DMatrix<f64>], b: &[DMatrix<f64>], model: &MetricModel) -> DMatrix<f64> {
    let (n, m) = (a[0].ncols(), b[0].ncols());
    let per_block: Vec<DMatrix<f64>> = model
        .blocks
        .par_iter()
        .zip(a.par_iter().zip(b.par_iter()))
        .map(|(block, (at, bt))| {
            let quad = |x: &DMatrix<f64>| -> DVector<f64> {
                let mx = &block.w_m * x;
                DVector::from_iterator(x.ncols(), x.column_iter().zip(mx.column_iter()).map(|(c, mc)| c.dot(&mc)))
            };
            let qa = quad(at);
            let qb = quad(bt);
            let cross = &block.w_b + block.w_b.transpose() - &block.w_m - block.w_m.transpose();
            let mut s = at.tr_mul(&(cross * bt));
            for i in 0..n {
                for j in 0..m {
                    s[(i, j)] += qa[i] + qb[j];
                }
            }
            s
        })
        .collect();
    per_block
        .into_iter()
        .fold(DMatrix::zeros(n, m), |acc, s| acc + s)
}

fn check_batch(model: &MetricModel, batch: &TrainBatch) -> Result<()> {
    if model.dims() != batch.dims() {
        return Err(ReidError::DimensionMismatch(format!(
            "model blocks {:?} vs descriptors {:?}",
            model.dims(),
            batch.dims()
        )));
    }
    Ok(())
}

/// Per-identity hinge brackets of L1.
fn l1_brackets(model: &MetricModel, batch: &TrainBatch, alpha1: f64) -> Result<Vec<f64>> {
    check_batch(model, batch)?;
    let n = batch.len();
    if n < 2 {
        return Err(ReidError::InsufficientSamples { found: n, needed: 2 });
    }
    let s = pairwise_scores(batch.probe_stacks(), batch.gallery_stacks(), model);
    Ok((0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| s[(i, j)]).sum();
            alpha1 - s[(i, i)] + off / (n - 1) as f64
        })
        .collect())
}

fn positive_scores(model: &MetricModel, batch: &TrainBatch) -> Vec<f64> {
    (0..batch.len())
        .map(|i| {
            model
                .blocks
                .iter()
                .enumerate()
                .map(|(t, block)| {
                    let x = batch.probe_stacks()[t].column(i);
                    let y = batch.gallery_stacks()[t].column(i);
                    let diff = x - y;
                    diff.dot(&(&block.w_m * &diff)) + x.dot(&(&block.w_b * y)) + y.dot(&(&block.w_b * x))
                })
                .sum()
        })
        .collect()
}

/// Mean score over unordered pairs of the gallery subset.
fn inter_class_mean(model: &MetricModel, batch: &TrainBatch) -> Result<f64> {
    let m = batch.gallery_subset.len();
    if m < 2 {
        return Err(ReidError::InsufficientSamples { found: m, needed: 2 });
    }
    let s = pairwise_scores(batch.subset_stacks(), batch.subset_stacks(), model);
    let mut sum = 0.0;
    for j in 0..m {
        for k in j + 1..m {
            sum += s[(j, k)];
        }
    }
    Ok(sum * 2.0 / (m * (m - 1)) as f64)
}

fn l2_brackets(model: &MetricModel, batch: &TrainBatch, alpha2: f64) -> Result<Vec<f64>> {
    check_batch(model, batch)?;
    let inter = inter_class_mean(model, batch)?;
    Ok(positive_scores(model, batch)
        .into_iter()
        .map(|g| alpha2 - g + inter)
        .collect())
}

fn hinge(brackets: &[f64]) -> HingeLoss {
    let n = brackets.len() as f64;
    let active: Vec<usize> = (0..brackets.len()).filter(|&i| brackets[i] > 0.0).collect();
    // Mean taken relative to the first term, so equal brackets (e.g. every
    // margin at the zero model) average to exactly that value.
    let clipped: Vec<f64> = brackets.iter().map(|&b| b.max(0.0)).collect();
    let reference = clipped.first().copied().unwrap_or(0.0);
    let value = reference + clipped.iter().map(|&v| v - reference).sum::<f64>() / n;
    HingeLoss { value, active }
}

pub fn loss_l1(model: &MetricModel, batch: &TrainBatch, alpha1: f64) -> Result<HingeLoss> {
    Ok(hinge(&l1_brackets(model, batch, alpha1)?))
}

pub fn loss_l2(model: &MetricModel, batch: &TrainBatch, alpha2: f64) -> Result<HingeLoss> {
    Ok(hinge(&l2_brackets(model, batch, alpha2)?))
}

pub fn loss(model: &MetricModel, batch: &TrainBatch, kind: LossKind, alpha: f64) -> Result<HingeLoss> {
    match kind {
        LossKind::L1 => loss_l1(model, batch, alpha),
        LossKind::L2 => loss_l2(model, batch, alpha),
    }
}

/// Sum of row norms of one matrix.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).sum()
}

pub fn l21_regularizer(model: &MetricModel) -> f64 {
    model
        .blocks
        .iter()
        .map(|b| l21_norm(&b.w_m) + l21_norm(&b.w_b))
        .sum()
}

pub fn objective(
    model: &MetricModel,
    batch: &TrainBatch,
    alpha1: f64,
    alpha2: f64,
    lambda: f64,
) -> Result<Objective> {
    let l1 = loss_l1(model, batch, alpha1)?.value;
    let l2 = loss_l2(model, batch, alpha2)?.value;
    let regularizer = l21_regularizer(model);
    Ok(Objective {
        l1,
        l2,
        regularizer,
        total: l1 + l2 + lambda * regularizer,
    })
}

/// `sum_{i,j} c_ij phi(a_i, b_j)` for both feature maps, where
/// `phi_M(a, b) = (a - b)(a - b)^T` and `phi_B(a, b) = a b^T + b a^T`.
fn weighted_phi(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let row_sums = c.column_sum();
    let col_sums = c.row_sum().transpose();
    let p = a * c * b.transpose();
    let pt = p.transpose();
    let weighted = |x: &DMatrix<f64>, w: &DVector<f64>| {
        let mut xw = x.clone();
        for (mut col, &s) in xw.column_iter_mut().zip(w.iter()) {
            col *= s;
        }
        xw * x.transpose()
    };
    let g_m = weighted(a, &row_sums) + weighted(b, &col_sums) - &p - &pt;
    let g_b = p + pt;
    (g_m, g_b)
}

/// Subgradient of one hinge loss with respect to every block. Inactive
/// hinges (bracket `<= 0`, including the kink) contribute nothing.
pub fn loss_gradient(
    model: &MetricModel,
    batch: &TrainBatch,
    kind: LossKind,
    alpha: f64,
) -> Result<(HingeLoss, MetricModel)> {
    let n = batch.len();
    let (brackets, coef, subset_weight) = match kind {
        LossKind::L1 => {
            let br = l1_brackets(model, batch, alpha)?;
            let mut c = DMatrix::zeros(n, n);
            let off = 1.0 / (n as f64 * (n - 1) as f64);
            for i in (0..n).filter(|&i| br[i] > 0.0) {
                for j in 0..n {
                    c[(i, j)] = if i == j { -1.0 / n as f64 } else { off };
                }
            }
            (br, c, 0.0)
        }
        LossKind::L2 => {
            let br = l2_brackets(model, batch, alpha)?;
            let mut c = DMatrix::zeros(n, n);
            let mut active = 0usize;
            for i in (0..n).filter(|&i| br[i] > 0.0) {
                c[(i, i)] = -1.0 / n as f64;
                active += 1;
            }
            let m = batch.gallery_subset.len();
            let w = active as f64 / n as f64 * 2.0 / (m * (m - 1)) as f64;
            (br, c, w)
        }
    };
    let m = batch.gallery_subset.len();
    let upper = (subset_weight != 0.0).then(|| {
        DMatrix::from_fn(m, m, |j, k| if j < k { subset_weight } else { 0.0 })
    });
    let blocks = (0..model.blocks.len())
        .into_par_iter()
        .map(|t| {
            let (mut g_m, mut g_b) = weighted_phi(&batch.probe_stacks()[t], &batch.gallery_stacks()[t], &coef);
            if let Some(u) = &upper {
                let s = &batch.subset_stacks()[t];
                let (sm, sb) = weighted_phi(s, s, u);
                g_m += sm;
                g_b += sb;
            }
            MetricBlock { w_m: g_m, w_b: g_b }
        })
        .collect();
    Ok((hinge(&brackets), MetricModel { blocks }))
}

/// Gradients of both losses.
#[derive(Debug, Clone)]
pub struct LossGradients {
    pub l1: MetricModel,
    pub l2: MetricModel,
}

pub fn loss_gradients(
    model: &MetricModel,
    batch: &TrainBatch,
    alpha1: f64,
    alpha2: f64,
) -> Result<LossGradients> {
    Ok(LossGradients {
        l1: loss_gradient(model, batch, LossKind::L1, alpha1)?.1,
        l2: loss_gradient(model, batch, LossKind::L2, alpha2)?.1,
    })
}
