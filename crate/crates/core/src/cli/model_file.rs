//! Binary model file: magic `MSTC`, format version, region layout, PCA
//! models, metric blocks and a trailing SHA-256 of everything before it.
//! All integers and floats are little-endian; matrices are row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{ReidError, Result};
use crate::features::{PcaModel, PcaModels, RegionKind, WindowParams};
use crate::io::Reader;
use crate::metric::{MetricBlock, MetricModel};
use crate::pipeline::{LayoutConfig, TrainedModel};
use crate::solver::max_eigenvalue;

pub const MAGIC: &[u8; 4] = b"MSTC";
pub const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;
/// Largest eigenvalue of a loaded `W_M` block that is still accepted
/// without a warning.
pub const NSD_TOLERANCE: f64 = 1e-8;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("dimension fits in u32").to_le_bytes());
}

fn put_matrix(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
}

fn read_matrix(r: &mut Reader, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let n = rows.checked_mul(cols).ok_or(ReidError::UnexpectedEof)?;
    Ok(DMatrix::from_row_slice(rows, cols, &r.f64s(n)?))
}

/// Serialized bytes of a model, checksum included.
pub fn encode_model(model: &TrainedModel) -> Result<Vec<u8>> {
    let layout = &model.layout;
    let t = layout.kinds.len();
    if layout.dims.len() != t || model.metric.blocks.len() != t {
        return Err(ReidError::DimensionMismatch(format!(
            "{} region kinds, {} dims, {} metric blocks",
            t,
            layout.dims.len(),
            model.metric.blocks.len()
        )));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [layout.image_height, layout.image_width] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let w = layout.window;
    for v in [w.height, w.width, w.step_y, w.step_x] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    put_u32(&mut out, layout.parts);
    put_u32(&mut out, layout.stripes);
    put_u32(&mut out, t);
    out.extend(layout.kinds.iter().map(|k| k.index() as u8));
    for &d in &layout.dims {
        put_u32(&mut out, d);
    }
    let pcas: Vec<&PcaModel> = model.pca.iter().collect();
    put_u32(&mut out, pcas.len());
    for p in pcas {
        out.push(p.kind.index() as u8);
        put_u32(&mut out, p.input_dim());
        put_u32(&mut out, p.k());
        for v in p.mean.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        put_matrix(&mut out, &p.basis);
    }
    for b in &model.metric.blocks {
        put_matrix(&mut out, &b.w_m);
        put_matrix(&mut out, &b.w_b);
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

fn kind(byte: u8) -> Result<RegionKind> {
    RegionKind::from_index(byte as usize)
        .ok_or_else(|| ReidError::MalformedRecord(format!("unknown region kind {byte}")))
}

fn count(r: &mut Reader, what: &str, max: usize) -> Result<usize> {
    let v = r.u32()? as usize;
    if v > max {
        return Err(ReidError::MalformedRecord(format!("{what} {v} exceeds {max}")));
    }
    Ok(v)
}

/// Parses and validates model bytes.
pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = Reader::new(bytes);
    if r.take(MAGIC.len()).map_err(|_| ReidError::NotAModelFile)? != MAGIC {
        return Err(ReidError::NotAModelFile);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ReidError::VersionMismatch(version));
    }
    let image_height = r.u32()?;
    let image_width = r.u32()?;
    let window = WindowParams {
        height: r.u32()?,
        width: r.u32()?,
        step_y: r.u32()?,
        step_x: r.u32()?,
    };
    // Counts are bounded by what the remaining bytes could possibly hold so
    // a corrupted header cannot trigger huge allocations.
    let limit = r.remaining();
    let parts = count(&mut r, "part count", limit)?;
    let stripes = count(&mut r, "stripe count", limit)?;
    let t = count(&mut r, "region count", limit)?;
    let kinds = (0..t).map(|_| kind(r.u8()?)).collect::<Result<Vec<_>>>()?;
    let dims = (0..t)
        .map(|_| count(&mut r, "region dimension", limit))
        .collect::<Result<Vec<_>>>()?;
    let n_pca = count(&mut r, "PCA model count", RegionKind::ALL.len())?;
    let mut pcas = Vec::with_capacity(n_pca);
    for _ in 0..n_pca {
        let kind = kind(r.u8()?)?;
        let input = count(&mut r, "PCA input dimension", limit)?;
        let k = count(&mut r, "PCA output dimension", limit)?;
        let mean = DVector::from_vec(r.f64s(input)?);
        let basis = read_matrix(&mut r, input, k)?;
        pcas.push(PcaModel { kind, mean, basis });
    }
    let blocks = dims
        .iter()
        .map(|&d| {
            Ok(MetricBlock {
                w_m: read_matrix(&mut r, d, d)?,
                w_b: read_matrix(&mut r, d, d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let body_len = bytes.len() - r.remaining();
    let stored = r.take(CHECKSUM_LEN)?;
    if r.remaining() != 0 {
        return Err(ReidError::MalformedRecord(format!(
            "{} trailing bytes after checksum",
            r.remaining()
        )));
    }
    if Sha256::digest(&bytes[..body_len]).as_slice() != stored {
        return Err(ReidError::ChecksumMismatch);
    }

    if parts + stripes + 1 != t {
        return Err(ReidError::MalformedRecord(format!(
            "{parts} parts and {stripes} stripes do not make {t} regions"
        )));
    }
    let pca = PcaModels::new(pcas);
    for (i, (&k, &d)) in kinds.iter().zip(&dims).enumerate() {
        let model = pca.get(k)?;
        if model.k() != d {
            return Err(ReidError::DimensionMismatch(format!(
                "region {i} has dimension {d} but its {} PCA yields {}",
                k.as_str(),
                model.k()
            )));
        }
    }
    let metric = MetricModel { blocks };
    for i in nsd_violations(&metric, NSD_TOLERANCE) {
        warn!(
            "loaded W_M block {i} has a positive eigenvalue {:.3e}; using it as stored",
            max_eigenvalue(&metric.blocks[i].w_m)
        );
    }
    Ok(TrainedModel {
        layout: LayoutConfig {
            image_height,
            image_width,
            window,
            parts,
            stripes,
            kinds,
            dims,
        },
        pca,
        metric,
    })
}

/// Indices of blocks whose `W_M` has an eigenvalue above `tol`.
pub fn nsd_violations(metric: &MetricModel, tol: f64) -> Vec<usize> {
    metric
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| max_eigenvalue(&b.w_m) > tol)
        .map(|(i, _)| i)
        .collect()
}

/// Writes the model next to `path` and renames it into place, so an
/// interrupted write never leaves a partial file at `path`.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let bytes = encode_model(model)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| ReidError::io(dir, e))?;
    tmp.write_all(&bytes).map_err(|e| ReidError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| ReidError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| ReidError::io(path, e.error))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| ReidError::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::PersonDescriptor;
    use crate::metric::similarity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_model(rng: &mut ChaCha8Rng, zero: bool) -> TrainedModel {
        let dims_by_kind = [3usize, 2, 4];
        let pca = PcaModels::new(
            RegionKind::ALL
                .iter()
                .map(|&kind| {
                    let k = dims_by_kind[kind.index()];
                    PcaModel {
                        kind,
                        mean: DVector::from_fn(6, |_, _| rng.random()),
                        basis: DMatrix::from_fn(6, k, |_, _| rng.random()),
                    }
                })
                .collect(),
        );
        let layout = LayoutConfig::new(128, 48, WindowParams::default(), &pca).unwrap();
        let metric = if zero {
            MetricModel::zeros(&layout.dims)
        } else {
            let mut m = MetricModel::zeros(&layout.dims);
            for b in &mut m.blocks {
                let d = b.dim();
                let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                b.w_m = -(&a * a.transpose());
                b.w_b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            }
            m.symmetrize();
            m
        };
        TrainedModel { layout, pca, metric }
    }

    #[test]
    fn zero_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = sample_model(&mut rng, true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mstc");
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn scores_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = sample_model(&mut rng, false);
        let back = decode_model(&encode_model(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        for _ in 0..100 {
            let d = |rng: &mut ChaCha8Rng| {
                PersonDescriptor::new(m.layout.dims.iter().map(|&d| DVector::from_fn(d, |_, _| rng.random())).collect())
            };
            let (a, b) = (d(&mut rng), d(&mut rng));
            let s0 = similarity(&a, &b, &m.metric).unwrap();
            let s1 = similarity(&a, &b, &back.metric).unwrap();
            assert_eq!(s0.to_bits(), s1.to_bits());
        }
    }

    #[test]
    fn rejects_damage() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bytes = encode_model(&sample_model(&mut rng, false)).unwrap();

        let mut bad_sum = bytes.clone();
        *bad_sum.last_mut().unwrap() ^= 1;
        assert_eq!(decode_model(&bad_sum).unwrap_err().to_string(), "checksum mismatch");

        let mut flipped = bytes.clone();
        let mid = bytes.len() - 100;
        flipped[mid] ^= 0x10;
        assert!(matches!(decode_model(&flipped), Err(ReidError::ChecksumMismatch)));

        for cut in [5, 40, bytes.len() / 2, bytes.len() - 1] {
            assert_eq!(decode_model(&bytes[..cut]).unwrap_err().to_string(), "unexpected end of file");
        }

        let mut magic = bytes.clone();
        magic[..4].copy_from_slice(b"PNG\0");
        assert_eq!(decode_model(&magic).unwrap_err().to_string(), "not a model file");
        assert!(matches!(decode_model(b"MS"), Err(ReidError::NotAModelFile)));

        let mut version = bytes.clone();
        version[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(decode_model(&version), Err(ReidError::VersionMismatch(7))));

        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_model(&long).is_err());
    }

    #[test]
    fn nsd_check_flags_positive_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = sample_model(&mut rng, false);
        assert!(nsd_violations(&m.metric, NSD_TOLERANCE).is_empty());
        m.metric.blocks[2].w_m[(0, 0)] += 100.0;
        assert_eq!(nsd_violations(&m.metric, NSD_TOLERANCE), vec![2]);
        // still loads, unchanged
        let back = decode_model(&encode_model(&m).unwrap()).unwrap();
        assert_eq!(back.metric, m.metric);
    }

    #[test]
    fn failed_save_leaves_no_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = sample_model(&mut rng, true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("m.mstc");
        assert!(save_model(&m, &path).is_err());
        assert!(!path.exists());
    }
}
