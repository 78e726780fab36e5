//! Gallery ranking and Cumulative Matching Characteristic curves.

mod report;

use rayon::prelude::*;

use crate::error::{ReidError, Result};
use crate::features::PersonDescriptor;
use crate::metric::{pairwise_scores, stack, MetricModel};

pub use report::{cmc_to_csv, emit_report, Report};

/// A descriptor tagged with its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDescriptor {
    pub person_id: u32,
    pub descriptor: PersonDescriptor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    pub probe_id: u32,
    /// Gallery indices, most similar first.
    pub ordering: Vec<usize>,
    /// 1-based position of the first gallery entry sharing `probe_id`.
    pub correct_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    /// `rates[k - 1]`: fraction of probes matched within the top `k`.
    pub rates: Vec<f64>,
}

impl CmcCurve {
    pub fn rank1(&self) -> f64 {
        self.rates.first().copied().unwrap_or(0.0)
    }

    /// Rate at 1-based `rank`, saturating at the last entry.
    pub fn at(&self, rank: usize) -> f64 {
        assert!(rank >= 1, "ranks are 1-based");
        self.rates[(rank - 1).min(self.rates.len() - 1)]
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.rates.windows(2).all(|w| w[0] <= w[1])
    }
}

fn check_dims(gallery: &[LabeledDescriptor], model: &MetricModel) -> Result<()> {
    let dims = model.dims();
    if let Some(bad) = gallery.iter().find(|g| g.descriptor.dims() != dims) {
        return Err(ReidError::DimensionMismatch(format!(
            "descriptor {:?} vs model {:?}",
            bad.descriptor.dims(),
            dims
        )));
    }
    Ok(())
}

fn score_matrix(
    probes: &[LabeledDescriptor],
    gallery: &[LabeledDescriptor],
    model: &MetricModel,
) -> Result<nalgebra::DMatrix<f64>> {
    check_dims(probes, model)?;
    check_dims(gallery, model)?;
    let dims = model.dims();
    let p: Vec<PersonDescriptor> = probes.iter().map(|x| x.descriptor.clone()).collect();
    let g: Vec<PersonDescriptor> = gallery.iter().map(|x| x.descriptor.clone()).collect();
    Ok(pairwise_scores(
        &stack(&p, &dims, 0..p.len()),
        &stack(&g, &dims, 0..g.len()),
        model,
    ))
}

/// Indices by descending score; the stable sort keeps ascending index among
/// equal scores.
fn order(scores: &[f64]) -> Vec<usize> {
    let mut ordering: Vec<usize> = (0..scores.len()).collect();
    ordering.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    ordering
}

fn rank_row(probe_id: u32, scores: &[f64], gallery: &[LabeledDescriptor]) -> Result<RankedList> {
    let ordering = order(scores);
    let correct_rank = ordering
        .iter()
        .position(|&j| gallery[j].person_id == probe_id)
        .ok_or(ReidError::NoGalleryMatch(probe_id))?
        + 1;
    Ok(RankedList {
        probe_id,
        ordering,
        correct_rank,
    })
}

/// Orders the gallery by descending similarity to `probe`; ties go to the
/// lower gallery index.
pub fn rank_gallery(
    probe: &LabeledDescriptor,
    gallery: &[LabeledDescriptor],
    model: &MetricModel,
) -> Result<RankedList> {
    Ok(rank_all(std::slice::from_ref(probe), gallery, model)?.remove(0))
}

/// `(gallery index, score)` pairs of an unlabeled probe, best first.
pub fn ranked_scores(
    probe: &PersonDescriptor,
    gallery: &[PersonDescriptor],
    model: &MetricModel,
) -> Result<Vec<(usize, f64)>> {
    if gallery.is_empty() {
        return Err(ReidError::InvalidArgument("gallery is empty".into()));
    }
    let wrap = |d: &PersonDescriptor| LabeledDescriptor {
        person_id: 0,
        descriptor: d.clone(),
    };
    let g: Vec<LabeledDescriptor> = gallery.iter().map(wrap).collect();
    let s = score_matrix(&[wrap(probe)], &g, model)?;
    let row: Vec<f64> = s.row(0).iter().copied().collect();
    Ok(order(&row).into_iter().map(|j| (j, row[j])).collect())
}

/// Ranked lists for every probe.
pub fn rank_all(
    probes: &[LabeledDescriptor],
    gallery: &[LabeledDescriptor],
    model: &MetricModel,
) -> Result<Vec<RankedList>> {
    if gallery.is_empty() {
        return Err(ReidError::InvalidArgument("gallery is empty".into()));
    }
    let s = score_matrix(probes, gallery, model)?;
    probes
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let row: Vec<f64> = s.row(i).iter().copied().collect();
            rank_row(p.person_id, &row, gallery)
        })
        .collect()
}

/// Curve of length `|gallery|` from per-probe correct ranks.
pub fn cmc_from_ranks(ranks: &[usize], gallery_len: usize) -> Result<CmcCurve> {
    if ranks.is_empty() {
        return Err(ReidError::InsufficientSamples { found: 0, needed: 1 });
    }
    let mut hits = vec![0usize; gallery_len];
    for &r in ranks {
        if r == 0 || r > gallery_len {
            return Err(ReidError::InvalidArgument(format!("rank {r} outside 1..={gallery_len}")));
        }
        hits[r - 1] += 1;
    }
    let n = ranks.len() as f64;
    let mut acc = 0usize;
    Ok(CmcCurve {
        rates: hits
            .into_iter()
            .map(|h| {
                acc += h;
                acc as f64 / n
            })
            .collect(),
    })
}

pub fn compute_cmc(
    probes: &[LabeledDescriptor],
    gallery: &[LabeledDescriptor],
    model: &MetricModel,
) -> Result<CmcCurve> {
    let ranks: Vec<usize> = rank_all(probes, gallery, model)?
        .into_iter()
        .map(|r| r.correct_rank)
        .collect();
    cmc_from_ranks(&ranks, gallery.len())
}

/// Elementwise mean of equally long curves.
pub fn average_trials(curves: &[CmcCurve]) -> Result<CmcCurve> {
    let first = curves
        .first()
        .ok_or(ReidError::InsufficientSamples { found: 0, needed: 1 })?;
    if let Some(c) = curves.iter().find(|c| c.len() != first.len()) {
        return Err(ReidError::DimensionMismatch(format!(
            "curves of length {} and {}",
            first.len(),
            c.len()
        )));
    }
    let n = curves.len() as f64;
    let rates = (0..first.len())
        .map(|k| curves.iter().map(|c| c.rates[k]).sum::<f64>() / n)
        .collect();
    Ok(CmcCurve { rates })
}
