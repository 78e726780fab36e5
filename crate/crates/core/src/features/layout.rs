use serde::{Deserialize, Serialize};

use crate::dataset::{PartBoxes, PartLabel};
use crate::error::{ReidError, Result};

/// Number of body parts, horizontal stripes and regions in total.
pub const PARTS: usize = 4;
pub const STRIPES: usize = 4;
pub const REGIONS: usize = PARTS + STRIPES + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Part,
    Local,
    Global,
}

impl RegionKind {
    pub const ALL: [RegionKind; 3] = [RegionKind::Part, RegionKind::Local, RegionKind::Global];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Part => "part",
            RegionKind::Local => "local",
            RegionKind::Global => "global",
        }
    }
}

/// Axis-aligned rectangle `(x, y, w, h)` in pixels, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub rect: Rect,
}

/// Parts (head, torso, left leg, right leg), then stripes top to bottom,
/// then the whole image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionLayout {
    pub regions: Vec<Region>,
}

impl RegionLayout {
    pub fn kinds(&self) -> impl Iterator<Item = RegionKind> + '_ {
        self.regions.iter().map(|r| r.kind)
    }

    /// Region kinds of the canonical layout, in order.
    pub fn canonical_kinds() -> [RegionKind; REGIONS] {
        let mut kinds = [RegionKind::Part; REGIONS];
        kinds[PARTS..PARTS + STRIPES].fill(RegionKind::Local);
        kinds[REGIONS - 1] = RegionKind::Global;
        kinds
    }
}

pub fn build_region_layout(height: u32, width: u32, parts: &PartBoxes) -> Result<RegionLayout> {
    if height < 16 || width < 8 {
        return Err(ReidError::ImageTooSmall { height, width });
    }
    let mut regions = Vec::with_capacity(REGIONS);
    for label in PartLabel::ALL {
        let b = parts.get(label);
        if !b.fits_in(height, width) {
            return Err(ReidError::MalformedRecord(format!(
                "{} box outside {height}x{width} image",
                label.as_str()
            )));
        }
        regions.push(Region {
            kind: RegionKind::Part,
            rect: Rect::new(b.x, b.y, b.w, b.h),
        });
    }
    // band boundaries at floor(i * h / C); equal heights whenever C divides h
    let stripes = STRIPES as u32;
    for i in 0..stripes {
        let y0 = i * height / stripes;
        let y1 = (i + 1) * height / stripes;
        regions.push(Region {
            kind: RegionKind::Local,
            rect: Rect::new(0, y0, width, y1 - y0),
        });
    }
    regions.push(Region {
        kind: RegionKind::Global,
        rect: Rect::new(0, 0, width, height),
    });
    Ok(RegionLayout { regions })
}
