use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ReidError, Result};
use crate::features::PersonDescriptor;

/// Largest gallery subset used for the inter-class average.
pub const MAX_SUBSET: usize = 50;

/// Index-aligned probe/gallery descriptors of the training identities.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub probes: Vec<PersonDescriptor>,
    pub gallery: Vec<PersonDescriptor>,
    pub gallery_subset: Vec<usize>,
    // per region: d_t x N column stacks
    probe_stacks: Vec<DMatrix<f64>>,
    gallery_stacks: Vec<DMatrix<f64>>,
    subset_stacks: Vec<DMatrix<f64>>,
}

impl TrainBatch {
    pub fn new(
        probes: Vec<PersonDescriptor>,
        gallery: Vec<PersonDescriptor>,
        gallery_subset: Vec<usize>,
    ) -> Result<Self> {
        if probes.is_empty() {
            return Err(ReidError::InsufficientSamples { found: 0, needed: 1 });
        }
        if probes.len() != gallery.len() {
            return Err(ReidError::DimensionMismatch(format!(
                "{} probes but {} gallery descriptors",
                probes.len(),
                gallery.len()
            )));
        }
        let dims = probes[0].dims();
        if probes.iter().chain(&gallery).any(|d| d.dims() != dims) {
            return Err(ReidError::DimensionMismatch(
                "descriptors in a batch must share region dimensions".into(),
            ));
        }
        let mut seen = vec![false; gallery.len()];
        for &j in &gallery_subset {
            if j >= gallery.len() || std::mem::replace(&mut seen[j], true) {
                return Err(ReidError::InvalidArgument(format!(
                    "gallery subset index {j} is out of range or repeated"
                )));
            }
        }
        let probe_stacks = stack(&probes, &dims, 0..probes.len());
        let gallery_stacks = stack(&gallery, &dims, 0..gallery.len());
        let subset_stacks = stack(&gallery, &dims, gallery_subset.iter().copied());
        Ok(TrainBatch {
            probes,
            gallery,
            gallery_subset,
            probe_stacks,
            gallery_stacks,
            subset_stacks,
        })
    }

    /// Draws `min(subset_size, N)` distinct gallery indices with `seed`.
    pub fn with_random_subset(
        probes: Vec<PersonDescriptor>,
        gallery: Vec<PersonDescriptor>,
        subset_size: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = gallery.len();
        let m = subset_size.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut subset = rand::seq::index::sample(&mut rng, n, m).into_vec();
        subset.sort_unstable();
        Self::new(probes, gallery, subset)
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.probes[0].dims()
    }

    pub(crate) fn probe_stacks(&self) -> &[DMatrix<f64>] {
        &self.probe_stacks
    }

    pub(crate) fn gallery_stacks(&self) -> &[DMatrix<f64>] {
        &self.gallery_stacks
    }

    pub(crate) fn subset_stacks(&self) -> &[DMatrix<f64>] {
        &self.subset_stacks
    }
}

pub(crate) fn stack(
    descs: &[PersonDescriptor],
    dims: &[usize],
    indices: impl Iterator<Item = usize> + Clone,
) -> Vec<DMatrix<f64>> {
    let cols = indices.clone().count();
    dims.iter()
        .enumerate()
        .map(|(t, &d)| {
            let mut m = DMatrix::zeros(d, cols);
            for (c, i) in indices.clone().enumerate() {
                m.set_column(c, &descs[i].parts[t]);
            }
            m
        })
        .collect()
}
