//! Binary TSDF grid format.
//!
//! Layout, all multi-byte values little-endian:
//!
//! ```text
//! "TSDF"  u8 version=1
//! u32 W  u32 H  u32 D
//! f32 origin.x  f32 origin.y  f32 origin.z
//! f32 voxel_size  f32 truncation
//! f32 values[W*H*D]   (x fastest, then y, then z)
//! ```

use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::tsdf::TsdfGrid;

use super::bytes::{put_f32_le, put_u32_le, ByteReader};
use super::read_file;

pub const TSDF_MAGIC: &[u8; 4] = b"TSDF";
pub const TSDF_VERSION: u8 = 1;

pub fn encode_tsdf_grid(grid: &TsdfGrid) -> Vec<u8> {
    let dims = grid.dims();
    let mut out = Vec::with_capacity(29 + 4 * grid.len());
    out.extend_from_slice(TSDF_MAGIC);
    out.push(TSDF_VERSION);
    for d in dims {
        put_u32_le(&mut out, d as u32);
    }
    for c in grid.origin().coords.iter() {
        put_f32_le(&mut out, *c as f32);
    }
    put_f32_le(&mut out, grid.voxel_size() as f32);
    put_f32_le(&mut out, grid.truncation() as f32);
    for v in grid.values() {
        put_f32_le(&mut out, *v as f32);
    }
    out
}

pub fn decode_tsdf_grid(bytes: &[u8]) -> Result<TsdfGrid> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(TSDF_MAGIC)?;
    let version_at = r.pos();
    let version = r.u8("version")?;
    if version != TSDF_VERSION {
        return Err(Error::format(
            version_at,
            format!("unsupported version {version}, expected {TSDF_VERSION}"),
        ));
    }
    let dims_at = r.pos();
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = r.u32_le("grid dimension")? as usize;
    }
    if dims.contains(&0) {
        return Err(Error::format(dims_at, format!("zero grid dimension in {dims:?}")));
    }
    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or_else(|| Error::format(dims_at, format!("grid dims {dims:?} overflow")))?;

    let mut origin = [0.0f64; 3];
    for c in &mut origin {
        *c = read_finite_f32(&mut r, "origin coordinate")?;
    }
    let voxel_at = r.pos();
    let voxel_size = read_finite_f32(&mut r, "voxel_size")?;
    if voxel_size <= 0.0 {
        return Err(Error::format(voxel_at, format!("voxel_size {voxel_size} must be positive")));
    }
    let trunc_at = r.pos();
    let truncation = read_finite_f32(&mut r, "truncation")?;
    if truncation <= 0.0 {
        return Err(Error::format(trunc_at, format!("truncation {truncation} must be positive")));
    }

    let payload_at = r.pos();
    let need = count
        .checked_mul(4)
        .ok_or_else(|| Error::format(dims_at, "value payload size overflow"))?;
    if r.remaining() != need {
        return Err(Error::format(
            payload_at,
            format!("expected {need} value bytes for {count} voxels, have {}", r.remaining()),
        ));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos();
        let v = r.f32_le("tsdf value")? as f64;
        if !v.is_finite() {
            return Err(Error::format(at, "non-finite tsdf value"));
        }
        if v.abs() > truncation {
            return Err(Error::format(
                at,
                format!("tsdf value {v} outside truncation band +-{truncation}"),
            ));
        }
        values.push(v);
    }
    r.expect_end()?;
    TsdfGrid::new(
        dims,
        Point3::new(origin[0], origin[1], origin[2]),
        voxel_size,
        truncation,
        values,
    )
    .map_err(|e| Error::format(payload_at, e.to_string()))
}

fn read_finite_f32(r: &mut ByteReader, what: &str) -> Result<f64> {
    let at = r.pos();
    let v = r.f32_le(what)? as f64;
    if !v.is_finite() {
        return Err(Error::format(at, format!("non-finite {what}")));
    }
    Ok(v)
}

pub fn read_tsdf_grid(path: &Path) -> Result<TsdfGrid> {
    decode_tsdf_grid(&read_file(path)?)
}

pub fn write_tsdf_grid(path: &Path, grid: &TsdfGrid) -> Result<()> {
    std::fs::write(path, encode_tsdf_grid(grid))
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
