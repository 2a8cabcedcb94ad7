//! Binary feature map format.
//!
//! Layout, all multi-byte values little-endian:
//!
//! ```text
//! "FMAP"  u8 version=1
//! u32 height  u32 width  u32 channels
//! f32 data[height*width*channels]   (channels fastest, then width, then height)
//! ```

use std::path::Path;

use crate::camera::FeatureMap;
use crate::error::{Error, Result};

use super::bytes::{put_f32_le, put_u32_le, ByteReader};
use super::read_file;

pub const FMAP_MAGIC: &[u8; 4] = b"FMAP";
pub const FMAP_VERSION: u8 = 1;

pub fn encode_feature_map(map: &FeatureMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(17 + 4 * map.data.len());
    out.extend_from_slice(FMAP_MAGIC);
    out.push(FMAP_VERSION);
    put_u32_le(&mut out, map.height);
    put_u32_le(&mut out, map.width);
    put_u32_le(&mut out, map.channels);
    for v in &map.data {
        put_f32_le(&mut out, *v as f32);
    }
    out
}

pub fn decode_feature_map(bytes: &[u8]) -> Result<FeatureMap> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(FMAP_MAGIC)?;
    let version_at = r.pos();
    let version = r.u8("version")?;
    if version != FMAP_VERSION {
        return Err(Error::format(
            version_at,
            format!("unsupported version {version}, expected {FMAP_VERSION}"),
        ));
    }
    let dims_at = r.pos();
    let height = r.u32_le("height")?;
    let width = r.u32_le("width")?;
    let channels = r.u32_le("channels")?;
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::format(
            dims_at,
            format!("zero dimension in {height}x{width}x{channels}"),
        ));
    }
    let count = (height as usize)
        .checked_mul(width as usize)
        .and_then(|v| v.checked_mul(channels as usize))
        .ok_or_else(|| Error::format(dims_at, "feature map dims overflow"))?;
    let payload_at = r.pos();
    let need = count
        .checked_mul(4)
        .ok_or_else(|| Error::format(dims_at, "payload size overflow"))?;
    if r.remaining() != need {
        return Err(Error::format(
            payload_at,
            format!("expected {need} data bytes for {count} values, have {}", r.remaining()),
        ));
    }
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos();
        let v = r.f32_le("feature value")? as f64;
        if !v.is_finite() {
            return Err(Error::format(at, "non-finite feature value"));
        }
        data.push(v);
    }
    r.expect_end()?;
    FeatureMap::new(height, width, channels, data)
        .map_err(|e| Error::format(payload_at, e.to_string()))
}

pub fn read_feature_map(path: &Path) -> Result<FeatureMap> {
    decode_feature_map(&read_file(path)?)
}

pub fn write_feature_map(path: &Path, map: &FeatureMap) -> Result<()> {
    std::fs::write(path, encode_feature_map(map))
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_round_trip() {
        let map = FeatureMap::new(2, 2, 1, vec![0.5, -1.25, 3.0, 0.0]).unwrap();
        let bytes = encode_feature_map(&map);
        let back = decode_feature_map(&bytes).unwrap();
        assert_eq!(back, map);
        assert_eq!(encode_feature_map(&back), bytes);
    }

    #[test]
    fn nan_payload_rejected() {
        let map = FeatureMap::constant(2, 2, 2, 1.0).unwrap();
        let mut bytes = encode_feature_map(&map);
        bytes[17..21].copy_from_slice(&f32::INFINITY.to_le_bytes());
        match decode_feature_map(&bytes).unwrap_err() {
            Error::Format { offset, .. } => assert_eq!(offset, 17),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let map = FeatureMap::constant(2, 3, 1, 0.0).unwrap();
        let bytes = encode_feature_map(&map);
        assert!(decode_feature_map(&bytes[..bytes.len() - 4]).is_err());
    }

    #[test]
    fn bad_magic_is_offset_zero() {
        let bytes = b"XMAP\x01".to_vec();
        assert!(matches!(
            decode_feature_map(&bytes),
            Err(Error::Format { offset: 0, .. })
        ));
    }
}
