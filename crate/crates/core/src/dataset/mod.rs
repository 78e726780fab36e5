//! Image collections with identity/view labels, part boxes, seeded splits
//! and a synthetic dataset generator.

mod image_io;
mod manifest;
mod split;
mod synth;

pub use image_io::{fallback_part_layout, load_and_scale_image, resize_bilinear, ScaledImage};
pub(crate) use image_io::scale_image;
pub use manifest::{
    load_manifest, sidecar_path, ImageRecord, LoadedManifest, Manifest, PartBox, PartBoxes,
    PartLabel,
};
pub use split::{make_splits, SplitSpec};
pub use synth::{generate_synthetic, generate_synthetic_with, SynthParams};

/// Canonical image size (rows, columns) used across the pipeline.
pub const CANONICAL_HEIGHT: u32 = 128;
pub const CANONICAL_WIDTH: u32 = 48;
