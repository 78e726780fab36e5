use image::{Rgb, RgbImage};

use super::{ImageRecord, PartBox, PartBoxes, PartLabel};
use crate::error::{ReidError, Result};

#[derive(Debug, Clone)]
pub struct ScaledImage {
    pub image: RgbImage,
    pub part_boxes: Option<PartBoxes>,
}

/// Proportional body layout used when no part boxes are supplied.
///
/// Rows: head `[0, h/6)`, torso `[h/6, 11h/20)`, legs `[11h/20, h)`.
/// Columns: head spans the middle half, torso the central 70%, and the legs
/// split the central 80% at the vertical center line. Horizontal margins are
/// symmetric so the two legs mirror each other.
pub fn fallback_part_layout(height: u32, width: u32) -> Result<PartBoxes> {
    if height < 16 || width < 8 {
        return Err(ReidError::ImageTooSmall { height, width });
    }
    let head_end = height / 6;
    let torso_end = 11 * height / 20;
    let margin = |frac: f64| (frac * width as f64).round() as u32;
    let band = |label, m: u32, y0: u32, y1: u32| PartBox {
        label,
        x: m,
        y: y0,
        w: width - 2 * m,
        h: y1 - y0,
    };
    let head = band(PartLabel::Head, margin(0.25), 0, head_end);
    let torso = band(PartLabel::Torso, margin(0.15), head_end, torso_end);
    let leg_margin = margin(0.10);
    let half = width / 2;
    let left = PartBox {
        label: PartLabel::LeftLeg,
        x: leg_margin,
        y: torso_end,
        w: half - leg_margin,
        h: height - torso_end,
    };
    let right = PartBox {
        label: PartLabel::RightLeg,
        x: width - half,
        ..left
    };
    PartBoxes::from_boxes(&[head, torso, left, right])
}

/// Bilinear resampling with pixel-center alignment; same-size input is
/// returned unchanged.
pub fn resize_bilinear(src: &RgbImage, height: u32, width: u32) -> RgbImage {
    let (sw, sh) = src.dimensions();
    if sw == width && sh == height {
        return src.clone();
    }
    let sy = sh as f64 / height as f64;
    let sx = sw as f64 / width as f64;
    let sample_axis = |dst: u32, scale: f64, len: u32| {
        let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = pos.floor() as u32;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, pos - i0 as f64)
    };
    let cols: Vec<_> = (0..width).map(|x| sample_axis(x, sx, sw)).collect();
    let mut out = RgbImage::new(width, height);
    for y in 0..height {
        let (y0, y1, fy) = sample_axis(y, sy, sh);
        for (x, &(x0, x1, fx)) in cols.iter().enumerate() {
            let p00 = src.get_pixel(x0, y0);
            let p01 = src.get_pixel(x1, y0);
            let p10 = src.get_pixel(x0, y1);
            let p11 = src.get_pixel(x1, y1);
            let mut px = [0u8; 3];
            for c in 0..3 {
                let top = p00[c] as f64 * (1.0 - fx) + p01[c] as f64 * fx;
                let bot = p10[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                px[c] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
            }
            out.put_pixel(x as u32, y, Rgb(px));
        }
    }
    out
}

/// Scales a box by per-axis ratios, then clamps it into `height x width`
/// keeping at least one pixel of extent.
pub(crate) fn rescale_box(b: &PartBox, sy: f64, sx: f64, height: u32, width: u32) -> PartBox {
    let axis = |start: u32, len: u32, scale: f64, limit: u32| {
        let lo = ((start as f64 * scale).round() as u32).min(limit - 1);
        let hi = (((start + len) as f64 * scale).round() as u32).clamp(lo + 1, limit);
        (lo, hi - lo)
    };
    let (x, w) = axis(b.x, b.w, sx, width);
    let (y, h) = axis(b.y, b.h, sy, height);
    PartBox { label: b.label, x, y, w, h }
}

/// Decodes a record's image, resamples it to `height x width` and rescales
/// its part boxes by the same ratios.
pub fn load_and_scale_image(record: &ImageRecord, height: u32, width: u32) -> Result<ScaledImage> {
    let img = image::open(&record.path)
        .map_err(|source| ReidError::Image {
            path: record.path.clone(),
            source,
        })?
        .to_rgb8();
    scale_image(img, record.part_boxes.as_ref(), height, width)
}

pub(crate) fn scale_image(
    img: RgbImage,
    boxes: Option<&PartBoxes>,
    height: u32,
    width: u32,
) -> Result<ScaledImage> {
    let (sw, sh) = img.dimensions();
    if sw == 0 || sh == 0 || height == 0 || width == 0 {
        return Err(ReidError::InvalidArgument("zero-dimension image".into()));
    }
    let part_boxes = match boxes {
        None => None,
        Some(pb) => {
            if !pb.fit_in(sh, sw) {
                return Err(ReidError::MalformedRecord(format!(
                    "part box outside {sh}x{sw} image"
                )));
            }
            let sy = height as f64 / sh as f64;
            let sx = width as f64 / sw as f64;
            let scaled: Vec<PartBox> = pb
                .iter()
                .map(|b| rescale_box(b, sy, sx, height, width))
                .collect();
            Some(PartBoxes::from_boxes(&scaled)?)
        }
    };
    Ok(ScaledImage {
        image: resize_bilinear(&img, height, width),
        part_boxes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gradient_image(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| Rgb([(x * 5) as u8, (y * 2) as u8, ((x + y) % 256) as u8]))
    }

    #[test]
    fn fallback_layout_viper_size() {
        let pb = fallback_part_layout(128, 48).unwrap();
        let head = pb.get(PartLabel::Head);
        assert_eq!((head.y, head.h), (0, 21));
        assert_eq!((head.x, head.w), (12, 24));
        let torso = pb.get(PartLabel::Torso);
        assert_eq!((torso.y, torso.bottom()), (21, 70));
        let (l, r) = (pb.get(PartLabel::LeftLeg), pb.get(PartLabel::RightLeg));
        assert_eq!(l.x, 48 - r.right());
        assert_eq!(l.w, r.w);
        assert_eq!(l.right(), r.x);
        assert_eq!(l.bottom(), 128);
    }

    #[test]
    fn fallback_layout_too_small() {
        let err = fallback_part_layout(12, 4).unwrap_err();
        assert!(err.to_string().contains("image too small"));
    }

    #[test]
    fn fallback_layout_odd_width_mirrors() {
        let pb = fallback_part_layout(40, 9).unwrap();
        let (l, r) = (pb.get(PartLabel::LeftLeg), pb.get(PartLabel::RightLeg));
        assert_eq!(l.x, 9 - r.right());
        assert_eq!(l.w, r.w);
    }

    #[test]
    fn identity_scale_is_pixel_identical() {
        let img = gradient_image(48, 128);
        let out = scale_image(img.clone(), None, 128, 48).unwrap();
        assert_eq!(out.image, img);
    }

    #[test]
    fn halving_halves_boxes() {
        let img = gradient_image(96, 256);
        let pb = fallback_part_layout(256, 96).unwrap();
        let out = scale_image(img, Some(&pb), 128, 48).unwrap();
        let scaled = out.part_boxes.unwrap();
        for (a, b) in pb.iter().zip(scaled.iter()) {
            assert_eq!((b.x, b.y, b.w, b.h), (a.x / 2, a.y / 2, a.w / 2, a.h / 2));
        }
        assert_eq!(out.image.dimensions(), (48, 128));
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = RgbImage::from_pixel(24, 64, Rgb([13, 200, 77]));
        let out = scale_image(img, None, 128, 48).unwrap();
        assert!(out.image.pixels().all(|p| *p == Rgb([13, 200, 77])));
    }

    #[test]
    fn out_of_bounds_box_rejected() {
        let img = gradient_image(48, 128);
        let mut boxes = *fallback_part_layout(128, 48).unwrap().as_slice().first().unwrap();
        boxes.x = 40;
        let mut all = fallback_part_layout(128, 48).unwrap().as_slice().to_vec();
        all[0] = boxes;
        let pb = PartBoxes::from_boxes(&all).unwrap();
        assert!(scale_image(img, Some(&pb), 128, 48).is_err());
    }

    #[test]
    fn undecodable_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        std::fs::write(&p, b"not an image").unwrap();
        let rec = ImageRecord { path: p, person_id: 0, camera_id: 0, part_boxes: None };
        assert!(matches!(load_and_scale_image(&rec, 128, 48), Err(ReidError::Image { .. })));
    }

    proptest! {
        #[test]
        fn rescaled_boxes_stay_in_bounds(
            sh in 1u32..400, sw in 1u32..200,
            th in 1u32..300, tw in 1u32..150,
            fy in 0.0f64..1.0, fx in 0.0f64..1.0, fh in 0.0f64..1.0, fw in 0.0f64..1.0,
        ) {
            let y = ((sh - 1) as f64 * fy) as u32;
            let x = ((sw - 1) as f64 * fx) as u32;
            let h = 1 + ((sh - y - 1) as f64 * fh) as u32;
            let w = 1 + ((sw - x - 1) as f64 * fw) as u32;
            let b = PartBox { label: PartLabel::Torso, x, y, w, h };
            prop_assert!(b.fits_in(sh, sw));
            let r = rescale_box(&b, th as f64 / sh as f64, tw as f64 / sw as f64, th, tw);
            prop_assert!(r.fits_in(th, tw), "{:?} escapes {}x{}", r, th, tw);
        }

        #[test]
        fn fallback_bands_do_not_overlap(h in 16u32..600, w in 8u32..300) {
            let pb = fallback_part_layout(h, w).unwrap();
            prop_assert!(pb.fit_in(h, w));
            let head = pb.get(PartLabel::Head);
            let torso = pb.get(PartLabel::Torso);
            let leg = pb.get(PartLabel::LeftLeg);
            prop_assert!(head.bottom() <= torso.y);
            prop_assert!(torso.bottom() <= leg.y);
            prop_assert!(pb.get(PartLabel::LeftLeg).right() <= pb.get(PartLabel::RightLeg).x);
        }
    }
}
