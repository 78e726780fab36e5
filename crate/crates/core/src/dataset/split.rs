use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Manifest;
use crate::error::{ReidError, Result};

/// One train/test partition of the paired identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub trial_index: usize,
    pub seed: u64,
    pub train_ids: BTreeSet<u32>,
    pub test_ids: BTreeSet<u32>,
}

/// Shuffles the paired identities once per trial. Trial `t` draws from
/// stream `t` of a ChaCha generator keyed by `seed`, so trials are
/// independent of each other and of the trial count.
pub fn make_splits(
    manifest: &Manifest,
    train_fraction: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<SplitSpec>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ReidError::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if trials == 0 {
        return Err(ReidError::InvalidArgument("trials must be at least 1".into()));
    }
    let ids = manifest.paired_identities();
    if ids.len() < 2 {
        return Err(ReidError::InsufficientSamples {
            found: ids.len(),
            needed: 2,
        });
    }
    // both halves keep at least one identity
    let n_train = ((train_fraction * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);

    let splits = (0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut shuffled = ids.clone();
            shuffled.shuffle(&mut rng);
            SplitSpec {
                trial_index: t,
                seed,
                train_ids: shuffled[..n_train].iter().copied().collect(),
                test_ids: shuffled[n_train..].iter().copied().collect(),
            }
        })
        .collect();
    Ok(splits)
}
