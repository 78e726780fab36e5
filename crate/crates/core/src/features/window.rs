//! Per-window color and texture histograms.
//!
//! Layout of a window descriptor (1210 entries, each block L1-normalized on
//! its own):
//!
//! | block            | bins |
//! |------------------|------|
//! | HSV H, S, V      | 3x16 |
//! | HSV joint        | 512  |
//! | LAB L, a, b      | 3x16 |
//! | LAB joint        | 512  |
//! | SILTP            | 81   |
//! | HOG              | 9    |

use image::RgbImage;
use nalgebra::DVector;

use super::layout::Rect;

pub const CHANNEL_BINS: usize = 16;
pub const JOINT_BINS_PER_AXIS: usize = 8;
pub const JOINT_BINS: usize = JOINT_BINS_PER_AXIS * JOINT_BINS_PER_AXIS * JOINT_BINS_PER_AXIS;
pub const SILTP_BINS: usize = 81;
pub const HOG_BINS: usize = 9;
/// Scale factor of the ternary pattern tolerance band.
pub const SILTP_TAU: f64 = 0.3;

const COLOR_SPACE_DIM: usize = 3 * CHANNEL_BINS + JOINT_BINS;
pub const WINDOW_DIM: usize = 2 * COLOR_SPACE_DIM + SILTP_BINS + HOG_BINS;

const HSV_OFFSET: usize = 0;
const LAB_OFFSET: usize = COLOR_SPACE_DIM;
const SILTP_OFFSET: usize = 2 * COLOR_SPACE_DIM;
const HOG_OFFSET: usize = SILTP_OFFSET + SILTP_BINS;

/// `(start, len)` of every independently normalized histogram.
pub const HISTOGRAM_BLOCKS: [(usize, usize); 10] = [
    (HSV_OFFSET, CHANNEL_BINS),
    (HSV_OFFSET + CHANNEL_BINS, CHANNEL_BINS),
    (HSV_OFFSET + 2 * CHANNEL_BINS, CHANNEL_BINS),
    (HSV_OFFSET + 3 * CHANNEL_BINS, JOINT_BINS),
    (LAB_OFFSET, CHANNEL_BINS),
    (LAB_OFFSET + CHANNEL_BINS, CHANNEL_BINS),
    (LAB_OFFSET + 2 * CHANNEL_BINS, CHANNEL_BINS),
    (LAB_OFFSET + 3 * CHANNEL_BINS, JOINT_BINS),
    (SILTP_OFFSET, SILTP_BINS),
    (HOG_OFFSET, HOG_BINS),
];

/// Histogram bin indices of one color space: three channel bins and the
/// joint bin.
#[derive(Debug, Clone, Copy)]
struct ColorBins {
    channel: [u16; 3],
    joint: u16,
}

impl ColorBins {
    /// `unit` holds the three channels scaled to `[0, 1]`.
    fn from_unit(unit: [f64; 3]) -> Self {
        let bin = |x: f64, n: usize| ((x * n as f64).floor().max(0.0) as usize).min(n - 1);
        let channel = unit.map(|x| bin(x, CHANNEL_BINS) as u16);
        let j = unit.map(|x| bin(x, JOINT_BINS_PER_AXIS));
        let joint = (j[0] * JOINT_BINS_PER_AXIS + j[1]) * JOINT_BINS_PER_AXIS + j[2];
        ColorBins {
            channel,
            joint: joint as u16,
        }
    }
}

/// An image with per-pixel color bins and luminance computed once, so that
/// overlapping windows share the conversion work.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    width: u32,
    height: u32,
    hsv: Vec<ColorBins>,
    lab: Vec<ColorBins>,
    luma: Vec<f64>,
}

impl PreparedImage {
    pub fn new(img: &RgbImage) -> Self {
        let (width, height) = img.dimensions();
        let n = (width * height) as usize;
        let mut hsv = Vec::with_capacity(n);
        let mut lab = Vec::with_capacity(n);
        let mut luma = Vec::with_capacity(n);
        for p in img.pixels() {
            let [r, g, b] = p.0;
            hsv.push(ColorBins::from_unit(hsv_unit(r, g, b)));
            lab.push(ColorBins::from_unit(lab_unit(r, g, b)));
            luma.push(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64);
        }
        PreparedImage {
            width,
            height,
            hsv,
            lab,
            luma,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    /// Adds the descriptor of `rect` into `acc` (length `WINDOW_DIM`).
    /// Texture operators only look at pixels inside `rect`.
    pub(crate) fn accumulate_window(&self, rect: Rect, acc: &mut [f64]) {
        debug_assert_eq!(acc.len(), WINDOW_DIM);
        debug_assert!(rect.right() <= self.width && rect.bottom() <= self.height);
        let mut hist = [0.0f64; WINDOW_DIM];

        for y in rect.y..rect.bottom() {
            for x in rect.x..rect.right() {
                let i = self.idx(x, y);
                for (offset, bins) in [(HSV_OFFSET, &self.hsv[i]), (LAB_OFFSET, &self.lab[i])] {
                    for (c, &b) in bins.channel.iter().enumerate() {
                        hist[offset + c * CHANNEL_BINS + b as usize] += 1.0;
                    }
                    hist[offset + 3 * CHANNEL_BINS + bins.joint as usize] += 1.0;
                }
            }
        }
        self.siltp(rect, &mut hist[SILTP_OFFSET..SILTP_OFFSET + SILTP_BINS]);
        self.hog(rect, &mut hist[HOG_OFFSET..HOG_OFFSET + HOG_BINS]);

        for &(start, len) in HISTOGRAM_BLOCKS.iter() {
            let block = &mut hist[start..start + len];
            let total: f64 = block.iter().sum();
            if total > 0.0 {
                block.iter_mut().for_each(|v| *v /= total);
            }
        }
        acc.iter_mut().zip(hist.iter()).for_each(|(a, h)| *a += h);
    }

    /// Ternary pattern over the 4-neighborhood at radius 1; code digit is 1
    /// when the neighbor exceeds `(1 + tau) * center`, 2 when it is below
    /// `(1 - tau) * center`, 0 otherwise.
    fn siltp(&self, rect: Rect, out: &mut [f64]) {
        if rect.w < 3 || rect.h < 3 {
            return;
        }
        for y in rect.y + 1..rect.bottom() - 1 {
            for x in rect.x + 1..rect.right() - 1 {
                let c = self.luma[self.idx(x, y)];
                let hi = (1.0 + SILTP_TAU) * c;
                let lo = (1.0 - SILTP_TAU) * c;
                let neighbors = [(x + 1, y), (x, y - 1), (x - 1, y), (x, y + 1)];
                let mut code = 0usize;
                let mut weight = 1usize;
                for (nx, ny) in neighbors {
                    let v = self.luma[self.idx(nx, ny)];
                    let digit = if v > hi {
                        1
                    } else if v < lo {
                        2
                    } else {
                        0
                    };
                    code += digit * weight;
                    weight *= 3;
                }
                out[code] += 1.0;
            }
        }
    }

    /// Unsigned orientation histogram of central-difference gradients,
    /// weighted by magnitude. Differences are clamped at the window border.
    fn hog(&self, rect: Rect, out: &mut [f64]) {
        let (x0, x1) = (rect.x, rect.right() - 1);
        let (y0, y1) = (rect.y, rect.bottom() - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let gx = self.luma[self.idx((x + 1).min(x1), y)]
                    - self.luma[self.idx(x.saturating_sub(1).max(x0), y)];
                let gy = self.luma[self.idx(x, (y + 1).min(y1))]
                    - self.luma[self.idx(x, y.saturating_sub(1).max(y0))];
                let mag = gx.hypot(gy);
                if mag == 0.0 {
                    continue;
                }
                let mut theta = gy.atan2(gx);
                if theta < 0.0 {
                    theta += std::f64::consts::PI;
                }
                if theta >= std::f64::consts::PI {
                    theta -= std::f64::consts::PI;
                }
                let bin = ((theta / std::f64::consts::PI * HOG_BINS as f64) as usize).min(HOG_BINS - 1);
                out[bin] += mag;
            }
        }
    }
}

/// Descriptor of a whole pixel block treated as a single window.
pub fn window_descriptor(window: &RgbImage) -> DVector<f64> {
    let prepared = PreparedImage::new(window);
    let mut acc = vec![0.0; WINDOW_DIM];
    let (w, h) = window.dimensions();
    if w > 0 && h > 0 {
        prepared.accumulate_window(Rect::new(0, 0, w, h), &mut acc);
    }
    DVector::from_vec(acc)
}

fn hsv_unit(r: u8, g: u8, b: u8) -> [f64; 3] {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let sat = if max <= 0.0 { 0.0 } else { delta / max };
    [hue / 6.0, sat, max]
}

/// CIE L*a*b* (D65) of an sRGB pixel, rescaled to `[0, 1]` per channel with
/// a and b mapped from `[-128, 128)`.
fn lab_unit(r: u8, g: u8, b: u8) -> [f64; 3] {
    fn linear(c: u8) -> f64 {
        let c = c as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    }
    fn f(t: f64) -> f64 {
        const DELTA: f64 = 6.0 / 29.0;
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    }
    let (r, g, b) = (linear(r), linear(g), linear(b));
    let x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    let (fx, fy, fz) = (f(x), f(y), f(z));
    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let bb = 200.0 * (fy - fz);
    [
        (l / 100.0).clamp(0.0, 1.0),
        ((a + 128.0) / 256.0).clamp(0.0, 1.0),
        ((bb + 128.0) / 256.0).clamp(0.0, 1.0),
    ]
}
