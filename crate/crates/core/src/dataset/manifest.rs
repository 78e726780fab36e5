use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ReidError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartLabel {
    Head,
    Torso,
    LeftLeg,
    RightLeg,
}

impl PartLabel {
    pub const ALL: [PartLabel; 4] = [
        PartLabel::Head,
        PartLabel::Torso,
        PartLabel::LeftLeg,
        PartLabel::RightLeg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PartLabel::Head => "head",
            PartLabel::Torso => "torso",
            PartLabel::LeftLeg => "left_leg",
            PartLabel::RightLeg => "right_leg",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// A labeled rectangle in pixel units, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartBox {
    pub label: PartLabel,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl PartBox {
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn fits_in(&self, height: u32, width: u32) -> bool {
        self.w > 0 && self.h > 0 && self.right() <= width && self.bottom() <= height
    }
}

/// Exactly one box per body part, stored in `PartLabel::ALL` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartBoxes([PartBox; 4]);

impl PartBoxes {
    pub fn from_boxes(boxes: &[PartBox]) -> Result<Self> {
        let mut slots: [Option<PartBox>; 4] = [None; 4];
        for b in boxes {
            if b.w == 0 || b.h == 0 {
                return Err(ReidError::MalformedRecord(format!(
                    "{} box has zero area",
                    b.label.as_str()
                )));
            }
            let slot = &mut slots[b.label.index()];
            if slot.is_some() {
                return Err(ReidError::MalformedRecord(format!(
                    "{} box given twice",
                    b.label.as_str()
                )));
            }
            *slot = Some(*b);
        }
        let mut out = Vec::with_capacity(4);
        for label in PartLabel::ALL {
            out.push(slots[label.index()].ok_or(ReidError::MissingPart(label.as_str()))?);
        }
        Ok(PartBoxes(out.try_into().expect("four labels")))
    }

    pub fn get(&self, label: PartLabel) -> &PartBox {
        &self.0[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PartBox> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[PartBox] {
        &self.0
    }

    pub fn fit_in(&self, height: u32, width: u32) -> bool {
        self.0.iter().all(|b| b.fits_in(height, width))
    }
}

impl Serialize for PartBoxes {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PartBoxes {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let boxes = Vec::<PartBox>::deserialize(d)?;
        PartBoxes::from_boxes(&boxes).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub path: PathBuf,
    pub person_id: u32,
    pub camera_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part_boxes: Option<PartBoxes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub image_height: u32,
    pub image_width: u32,
    pub records: Vec<ImageRecord>,
}

#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    /// Non-fatal findings, e.g. identities seen from a single camera.
    pub warnings: Vec<String>,
}

/// Path of the part-box sidecar belonging to an image.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    let mut s = image_path.as_os_str().to_owned();
    s.push(".parts.json");
    PathBuf::from(s)
}

/// Reads a manifest, resolving record paths relative to the manifest's
/// directory and picking up `.parts.json` sidecars for records without
/// inline boxes.
pub fn load_manifest(path: &Path) -> Result<LoadedManifest> {
    let text = fs::read_to_string(path).map_err(|e| ReidError::io(path, e))?;
    let mut manifest: Manifest = serde_json::from_str(&text).map_err(|source| ReidError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for rec in &mut manifest.records {
        if rec.path.is_relative() {
            rec.path = base.join(&rec.path);
        }
        if rec.part_boxes.is_none() {
            let side = sidecar_path(&rec.path);
            if side.exists() {
                let text = fs::read_to_string(&side).map_err(|e| ReidError::io(&side, e))?;
                let boxes: PartBoxes =
                    serde_json::from_str(&text).map_err(|source| ReidError::Json {
                        path: side.clone(),
                        source,
                    })?;
                rec.part_boxes = Some(boxes);
            }
        }
    }
    let warnings = manifest.validate()?;
    Ok(LoadedManifest { manifest, warnings })
}

impl Manifest {
    /// Checks structural invariants. Identities without a cross-view
    /// partner are reported, not rejected.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.image_height < 16 || self.image_width < 8 {
            return Err(ReidError::ImageTooSmall {
                height: self.image_height,
                width: self.image_width,
            });
        }
        let mut seen = HashSet::new();
        for rec in &self.records {
            if !seen.insert(rec.path.as_path()) {
                return Err(ReidError::DuplicateRecord(rec.path.clone()));
            }
        }
        let mut warnings = Vec::new();
        for (id, cams) in self.cameras_by_identity() {
            if cams.len() < 2 {
                warnings.push(format!(
                    "identity {id} appears in a single camera view and cannot be paired"
                ));
            }
        }
        Ok(warnings)
    }

    fn cameras_by_identity(&self) -> BTreeMap<u32, BTreeSet<u32>> {
        let mut map: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for rec in &self.records {
            map.entry(rec.person_id).or_default().insert(rec.camera_id);
        }
        map
    }

    /// Identities seen from at least two cameras, ascending.
    pub fn paired_identities(&self) -> Vec<u32> {
        self.cameras_by_identity()
            .into_iter()
            .filter(|(_, cams)| cams.len() >= 2)
            .map(|(id, _)| id)
            .collect()
    }

    /// Record indices `(probe, gallery)` for an identity: the first image
    /// from its lowest camera id and the first image from its second-lowest.
    pub fn view_pair(&self, person_id: u32) -> Option<(usize, usize)> {
        let mut first_by_cam: BTreeMap<u32, usize> = BTreeMap::new();
        for (i, rec) in self.records.iter().enumerate() {
            if rec.person_id == person_id {
                first_by_cam.entry(rec.camera_id).or_insert(i);
            }
        }
        let mut it = first_by_cam.values();
        Some((*it.next()?, *it.next()?))
    }

    /// Writes the manifest as JSON with record paths made relative to the
    /// manifest's directory when possible.
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut out = self.clone();
        for rec in &mut out.records {
            if let Ok(rel) = rec.path.strip_prefix(base) {
                rec.path = rel.to_path_buf();
            }
        }
        let text = serde_json::to_string_pretty(&out).expect("manifest serializes");
        fs::write(path, text).map_err(|e| ReidError::io(path, e))
    }
}
