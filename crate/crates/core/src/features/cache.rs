//! Binary feature cache.
//!
//! ```text
//! "SRRF" | version: u32 | count: u64 |
//!   count x ( id: u64 | T: u32 | T x ( len: u32 | len x f64 ) )
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{ReidError, Result};

const MAGIC: &[u8; 4] = b"SRRF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub id: u64,
    pub vectors: Vec<DVector<f64>>,
}

pub fn write_feature_cache(path: &Path, entries: &[CacheEntry]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for e in entries {
        buf.extend_from_slice(&e.id.to_le_bytes());
        buf.extend_from_slice(&(e.vectors.len() as u32).to_le_bytes());
        for v in &e.vectors {
            buf.extend_from_slice(&(v.len() as u32).to_le_bytes());
            for x in v.iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    fs::write(path, buf).map_err(|e| ReidError::io(path, e))
}

pub fn read_feature_cache(path: &Path) -> Result<Vec<CacheEntry>> {
    let bytes = fs::read(path).map_err(|e| ReidError::io(path, e))?;
    let mut r = crate::io::Reader::new(&bytes);
    if r.take(4)? != MAGIC {
        return Err(ReidError::InvalidArgument("not a feature cache".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ReidError::VersionMismatch(version));
    }
    let count = r.u64()?;
    let mut entries = Vec::new();
    for _ in 0..count {
        let id = r.u64()?;
        let t = r.u32()?;
        let mut vectors = Vec::new();
        for _ in 0..t {
            let len = r.u32()? as usize;
            vectors.push(DVector::from_vec(r.f64s(len)?));
        }
        entries.push(CacheEntry { id, vectors });
    }
    Ok(entries)
}
