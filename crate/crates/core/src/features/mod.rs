//! Semantic region representation: body parts, horizontal stripes and the
//! whole image, each described by pooled color/texture histograms, log
//! transformed and reduced by a PCA fitted per region kind.

mod cache;
mod layout;
mod pca;
mod region;
mod window;

use image::RgbImage;
use nalgebra::DVector;

pub use cache::{read_feature_cache, write_feature_cache, CacheEntry};
pub use layout::{build_region_layout, Rect, Region, RegionKind, RegionLayout, PARTS, REGIONS, STRIPES};
pub use pca::{fit_pca, PcaModel};
pub use region::{log_transform, region_descriptor, RawRegionDescriptor, WindowParams};
pub use window::{window_descriptor, PreparedImage, HISTOGRAM_BLOCKS, SILTP_TAU, WINDOW_DIM};

use crate::error::{ReidError, Result};

/// Reduced per-region vectors of one image, ordered like the region layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonDescriptor {
    pub parts: Vec<DVector<f64>>,
}

impl PersonDescriptor {
    pub fn new(parts: Vec<DVector<f64>>) -> Self {
        PersonDescriptor { parts }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.len()).collect()
    }
}

/// One PCA model per region kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PcaModels {
    models: Vec<PcaModel>,
}

impl PcaModels {
    pub fn new(models: Vec<PcaModel>) -> Self {
        PcaModels { models }
    }

    pub fn get(&self, kind: RegionKind) -> Result<&PcaModel> {
        self.models
            .iter()
            .find(|m| m.kind == kind)
            .ok_or_else(|| ReidError::InvalidArgument(format!("no PCA model for {} regions", kind.as_str())))
    }

    pub fn iter(&self) -> impl Iterator<Item = &PcaModel> {
        self.models.iter()
    }

    /// Reduced dimension of each region in `kinds` order.
    pub fn dims_for(&self, kinds: impl IntoIterator<Item = RegionKind>) -> Result<Vec<usize>> {
        kinds.into_iter().map(|k| self.get(k).map(PcaModel::k)).collect()
    }
}

/// Log-transformed pooled descriptors for every region of `layout`.
pub fn raw_region_features(
    image: &PreparedImage,
    layout: &RegionLayout,
    params: &WindowParams,
) -> Result<Vec<RawRegionDescriptor>> {
    layout
        .regions
        .iter()
        .map(|r| {
            let raw = region_descriptor(image, r, params)?;
            Ok(RawRegionDescriptor {
                kind: raw.kind,
                values: log_transform(&raw.values)?,
            })
        })
        .collect()
}

/// Projects log-transformed region descriptors with the PCA of their kind.
pub fn project_regions(regions: &[RawRegionDescriptor], pca: &PcaModels) -> Result<PersonDescriptor> {
    let parts = regions
        .iter()
        .map(|r| pca.get(r.kind)?.project(&r.values))
        .collect::<Result<Vec<_>>>()?;
    Ok(PersonDescriptor { parts })
}

/// Full pipeline for one image: pooled histograms, log transform and PCA.
pub fn extract_descriptor(
    image: &RgbImage,
    layout: &RegionLayout,
    pca: &PcaModels,
    params: &WindowParams,
) -> Result<PersonDescriptor> {
    for kind in RegionKind::ALL {
        if layout.kinds().any(|k| k == kind) {
            pca.get(kind)?;
        }
    }
    let prepared = PreparedImage::new(image);
    project_regions(&raw_region_features(&prepared, layout, params)?, pca)
}

/// Fits one PCA per kind on the pooled regions of many images. `dims` is
/// indexed by `RegionKind::index`.
pub fn fit_pca_models(images: &[Vec<RawRegionDescriptor>], dims: [usize; 3]) -> Result<PcaModels> {
    let models = RegionKind::ALL
        .iter()
        .map(|&kind| {
            let samples: Vec<DVector<f64>> = images
                .iter()
                .flat_map(|regions| regions.iter().filter(|r| r.kind == kind).map(|r| r.values.clone()))
                .collect();
            fit_pca(&samples, kind, dims[kind.index()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PcaModels { models })
}
