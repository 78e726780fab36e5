//! Glue between the stages: raw region features for a manifest, per-split
//! PCA fitting, training and CMC evaluation.

use std::collections::BTreeSet;

use log::{info, warn};
use rayon::prelude::*;

use crate::dataset::{fallback_part_layout, load_and_scale_image, Manifest, SplitSpec};
use crate::error::{ReidError, Result};
use crate::eval::{compute_cmc, CmcCurve, LabeledDescriptor};
use crate::features::{
    build_region_layout, fit_pca_models, project_regions, raw_region_features, PcaModels, PersonDescriptor,
    PreparedImage, RawRegionDescriptor, RegionKind, RegionLayout, WindowParams, PARTS, STRIPES,
};
use crate::metric::MetricModel;
use crate::solver::{train_on_pairs, SolverConfig, TraceEntry};

/// Everything needed to turn an image into the descriptor a metric expects.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutConfig {
    pub image_height: u32,
    pub image_width: u32,
    pub window: WindowParams,
    pub parts: usize,
    pub stripes: usize,
    /// Region kind of each of the `T` regions, in layout order.
    pub kinds: Vec<RegionKind>,
    /// Reduced dimension of each region, in layout order.
    pub dims: Vec<usize>,
}

impl LayoutConfig {
    pub fn new(image_height: u32, image_width: u32, window: WindowParams, pca: &PcaModels) -> Result<Self> {
        let kinds = RegionLayout::canonical_kinds().to_vec();
        let dims = pca.dims_for(kinds.iter().copied())?;
        Ok(LayoutConfig {
            image_height,
            image_width,
            window,
            parts: PARTS,
            stripes: STRIPES,
            kinds,
            dims,
        })
    }
}

/// A learned metric together with the feature pipeline it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub layout: LayoutConfig,
    pub pca: PcaModels,
    pub metric: MetricModel,
}

impl TrainedModel {
    pub fn describe(&self, raw: &[RawRegionDescriptor]) -> Result<PersonDescriptor> {
        project_regions(raw, &self.pca)
    }
}

/// Log-transformed region descriptors of one image at `height x width`,
/// using its part boxes or the proportional fallback.
pub fn raw_features_for_image(
    image: &image::RgbImage,
    part_boxes: Option<&crate::dataset::PartBoxes>,
    window: &WindowParams,
) -> Result<Vec<RawRegionDescriptor>> {
    let (w, h) = image.dimensions();
    let boxes = match part_boxes {
        Some(b) => *b,
        None => fallback_part_layout(h, w)?,
    };
    let layout = build_region_layout(h, w, &boxes)?;
    raw_region_features(&PreparedImage::new(image), &layout, window)
}

/// Raw region features of every record, index-aligned with
/// `manifest.records`. Images are processed in parallel; results do not
/// depend on the thread count.
pub fn extract_raw_features(manifest: &Manifest, window: &WindowParams) -> Result<Vec<Vec<RawRegionDescriptor>>> {
    let (h, w) = (manifest.image_height, manifest.image_width);
    manifest
        .records
        .par_iter()
        .map(|rec| {
            let scaled = load_and_scale_image(rec, h, w)?;
            raw_features_for_image(&scaled.image, scaled.part_boxes.as_ref(), window)
        })
        .collect()
}

/// Fits PCA on the given images, lowering any requested dimension that
/// exceeds what the sample count supports.
pub fn fit_pca_clamped(images: &[Vec<RawRegionDescriptor>], dims: [usize; 3]) -> Result<PcaModels> {
    let mut eff = dims;
    for kind in RegionKind::ALL {
        let n: usize = images
            .iter()
            .map(|regions| regions.iter().filter(|r| r.kind == kind).count())
            .sum();
        let input = images
            .iter()
            .flat_map(|r| r.iter())
            .find(|r| r.kind == kind)
            .map(|r| r.values.len())
            .unwrap_or(0);
        let max = input.min(n.saturating_sub(1));
        let i = kind.index();
        if eff[i] > max {
            warn!(
                "{} PCA dimension {} exceeds the {} supported by {n} samples; using {max}",
                kind.as_str(),
                eff[i],
                max
            );
            eff[i] = max;
        }
    }
    fit_pca_models(images, eff)
}

/// Probe/gallery record indices for identities in `ids`, ascending by id.
fn pairs(manifest: &Manifest, ids: &BTreeSet<u32>) -> Result<Vec<(u32, usize, usize)>> {
    ids.iter()
        .map(|&id| {
            manifest
                .view_pair(id)
                .map(|(p, g)| (id, p, g))
                .ok_or_else(|| ReidError::InvalidArgument(format!("identity {id} has no cross-view pair")))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model: TrainedModel,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

/// Fits PCA on every image of the training identities, then learns the
/// metric on their cross-view pairs.
pub fn train_split(
    manifest: &Manifest,
    raw: &[Vec<RawRegionDescriptor>],
    train_ids: &BTreeSet<u32>,
    window: WindowParams,
    pca_dims: [usize; 3],
    solver: &SolverConfig,
) -> Result<TrainResult> {
    let train_images: Vec<Vec<RawRegionDescriptor>> = manifest
        .records
        .iter()
        .zip(raw)
        .filter(|(rec, _)| train_ids.contains(&rec.person_id))
        .map(|(_, r)| r.clone())
        .collect();
    let pca = fit_pca_clamped(&train_images, pca_dims)?;
    let layout = LayoutConfig::new(manifest.image_height, manifest.image_width, window, &pca)?;
    let pairs = pairs(manifest, train_ids)?;
    let mut probes = Vec::with_capacity(pairs.len());
    let mut gallery = Vec::with_capacity(pairs.len());
    for &(_, p, g) in &pairs {
        probes.push(project_regions(&raw[p], &pca)?);
        gallery.push(project_regions(&raw[g], &pca)?);
    }
    info!("training on {} identities, region dims {:?}", pairs.len(), layout.dims);
    let out = train_on_pairs(probes, gallery, solver)?;
    Ok(TrainResult {
        model: TrainedModel {
            layout,
            pca,
            metric: out.model,
        },
        trace: out.trace,
        converged: out.converged,
    })
}

/// Labeled probe and gallery descriptors of a test split. Records of
/// identities that have no cross-view pair join the gallery as distractors.
pub fn test_sets(
    manifest: &Manifest,
    raw: &[Vec<RawRegionDescriptor>],
    test_ids: &BTreeSet<u32>,
    pca: &PcaModels,
) -> Result<(Vec<LabeledDescriptor>, Vec<LabeledDescriptor>)> {
    let mut probes = Vec::new();
    let mut gallery = Vec::new();
    for (id, p, g) in pairs(manifest, test_ids)? {
        probes.push(LabeledDescriptor {
            person_id: id,
            descriptor: project_regions(&raw[p], pca)?,
        });
        gallery.push(LabeledDescriptor {
            person_id: id,
            descriptor: project_regions(&raw[g], pca)?,
        });
    }
    let paired: BTreeSet<u32> = manifest.paired_identities().into_iter().collect();
    for (rec, r) in manifest.records.iter().zip(raw) {
        if !paired.contains(&rec.person_id) {
            gallery.push(LabeledDescriptor {
                person_id: rec.person_id,
                descriptor: project_regions(r, pca)?,
            });
        }
    }
    Ok((probes, gallery))
}

pub fn evaluate_split(
    manifest: &Manifest,
    raw: &[Vec<RawRegionDescriptor>],
    test_ids: &BTreeSet<u32>,
    model: &TrainedModel,
) -> Result<CmcCurve> {
    let (probes, gallery) = test_sets(manifest, raw, test_ids, &model.pca)?;
    compute_cmc(&probes, &gallery, &model.metric)
}

/// Outcome of one train/test trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub split: SplitSpec,
    pub curve: CmcCurve,
    /// Same split ranked by negative squared Euclidean distance on the
    /// reduced descriptors.
    pub baseline: CmcCurve,
    pub train: TrainResult,
}

pub fn run_trial(
    manifest: &Manifest,
    raw: &[Vec<RawRegionDescriptor>],
    split: &SplitSpec,
    window: WindowParams,
    pca_dims: [usize; 3],
    solver: &SolverConfig,
) -> Result<TrialOutcome> {
    let train = train_split(manifest, raw, &split.train_ids, window, pca_dims, solver)?;
    let curve = evaluate_split(manifest, raw, &split.test_ids, &train.model)?;
    let euclid = TrainedModel {
        metric: MetricModel::negative_euclidean(&train.model.layout.dims),
        ..train.model.clone()
    };
    let baseline = evaluate_split(manifest, raw, &split.test_ids, &euclid)?;
    info!(
        "trial {}: rank-1 {:.4} (euclidean {:.4})",
        split.trial_index,
        curve.rank1(),
        baseline.rank1()
    );
    Ok(TrialOutcome {
        split: split.clone(),
        curve,
        baseline,
        train,
    })
}
