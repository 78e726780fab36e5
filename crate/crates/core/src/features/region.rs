use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::layout::{Rect, Region, RegionKind};
use super::window::{PreparedImage, WINDOW_DIM};
use crate::error::{ReidError, Result};

/// Sliding-window geometry. Steps are given along each axis; the defaults
/// give 50% overlap in both directions for a 16x8 window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowParams {
    pub height: u32,
    pub width: u32,
    pub step_y: u32,
    pub step_x: u32,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            height: 16,
            width: 8,
            step_y: 8,
            step_x: 4,
        }
    }
}

impl WindowParams {
    /// Windows fully inside `rect`, row-major. A region narrower or shorter
    /// than one window yields a single window covering the region.
    pub fn tile(&self, rect: Rect) -> Vec<Rect> {
        if rect.h < self.height || rect.w < self.width {
            return vec![rect];
        }
        let rows = (rect.h - self.height) / self.step_y + 1;
        let cols = (rect.w - self.width) / self.step_x + 1;
        let mut out = Vec::with_capacity((rows * cols) as usize);
        for r in 0..rows {
            for c in 0..cols {
                out.push(Rect::new(
                    rect.x + c * self.step_x,
                    rect.y + r * self.step_y,
                    self.width,
                    self.height,
                ));
            }
        }
        out
    }
}

/// Mean-pooled window histograms of one region, before the log transform.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRegionDescriptor {
    pub kind: RegionKind,
    pub values: DVector<f64>,
}

pub fn region_descriptor(
    image: &PreparedImage,
    region: &Region,
    params: &WindowParams,
) -> Result<RawRegionDescriptor> {
    let rect = region.rect;
    if rect.is_empty() {
        return Err(ReidError::EmptyRegion);
    }
    if rect.right() > image.width() || rect.bottom() > image.height() {
        return Err(ReidError::InvalidArgument(format!(
            "region {rect:?} outside {}x{} image",
            image.height(),
            image.width()
        )));
    }
    let windows = params.tile(rect);
    let mut acc = vec![0.0; WINDOW_DIM];
    for w in &windows {
        image.accumulate_window(*w, &mut acc);
    }
    let n = windows.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    Ok(RawRegionDescriptor {
        kind: region.kind,
        values: DVector::from_vec(acc),
    })
}

/// `ln(1 + v)` elementwise, then L2 normalization. A zero vector stays zero.
pub fn log_transform(v: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
        return Err(ReidError::NegativeEntry { index, value });
    }
    let mut out = v.map(f64::ln_1p);
    let norm = out.norm();
    if norm > 0.0 {
        out /= norm;
    }
    Ok(out)
}
