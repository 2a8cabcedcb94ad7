//! Binary little-endian PLY for feature point clouds.
//!
//! One `vertex` element with float properties `x y z weight f_0 .. f_{C-1}`.
//! The reader accepts exactly this schema (plus `comment` lines) so a
//! write/read/write cycle is byte-identical.

use std::path::Path;

use nalgebra::Point3;

use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};

use super::bytes::{put_f32_le, ByteReader};
use super::read_file;

pub fn encode_ply(cloud: &FeaturePointCloud) -> Vec<u8> {
    let channels = cloud.channels();
    let mut header = String::new();
    header.push_str("ply\n");
    header.push_str("format binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    for name in ["x", "y", "z", "weight"] {
        header.push_str(&format!("property float {name}\n"));
    }
    for c in 0..channels {
        header.push_str(&format!("property float f_{c}\n"));
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    out.reserve(cloud.len() * (4 + channels) * 4);
    for i in 0..cloud.len() {
        let p = cloud.points()[i];
        put_f32_le(&mut out, p.x as f32);
        put_f32_le(&mut out, p.y as f32);
        put_f32_le(&mut out, p.z as f32);
        put_f32_le(&mut out, cloud.weights()[i] as f32);
        for f in cloud.feature(i) {
            put_f32_le(&mut out, *f as f32);
        }
    }
    out
}

pub fn decode_ply(bytes: &[u8]) -> Result<FeaturePointCloud> {
    let mut pos = 0usize;
    let mut line_at;
    let mut lines: Vec<(usize, String)> = Vec::new();
    // Header is ASCII lines up to and including "end_header".
    loop {
        let Some(rel) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(Error::format(pos, "header has no end_header line"));
        };
        let line = &bytes[pos..pos + rel];
        let text = std::str::from_utf8(line)
            .map_err(|_| Error::format(pos, "header line is not ASCII"))?
            .to_string();
        line_at = pos;
        pos += rel + 1;
        let done = text == "end_header";
        lines.push((line_at, text));
        if done {
            break;
        }
        if lines.len() > 4096 {
            return Err(Error::format(pos, "unreasonably long header"));
        }
    }

    let mut iter = lines.into_iter();
    let expect_line = |got: Option<(usize, String)>, want: &str| -> Result<()> {
        match got {
            Some((_, line)) if line == want => Ok(()),
            Some((at, line)) => Err(Error::format(at, format!("expected {want:?}, got {line:?}"))),
            None => Err(Error::format(0, format!("missing {want:?} line"))),
        }
    };
    expect_line(iter.next(), "ply")?;
    expect_line(iter.next(), "format binary_little_endian 1.0")?;

    let mut count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    for (at, line) in iter {
        if line == "end_header" {
            break;
        }
        if line.starts_with("comment ") || line == "comment" {
            continue;
        }
        if let Some(rest) = line.strip_prefix("element vertex ") {
            if count.is_some() {
                return Err(Error::format(at, "duplicate vertex element"));
            }
            count = Some(
                rest.parse::<usize>()
                    .map_err(|_| Error::format(at, format!("invalid vertex count {rest:?}")))?,
            );
        } else if let Some(rest) = line.strip_prefix("property float ") {
            if count.is_none() {
                return Err(Error::format(at, "property before vertex element"));
            }
            properties.push(rest.to_string());
        } else {
            return Err(Error::format(at, format!("unsupported header line {line:?}")));
        }
    }
    let count = count.ok_or_else(|| Error::format(line_at, "missing vertex element"))?;
    if properties.len() < 4 || properties[..4] != ["x", "y", "z", "weight"] {
        return Err(Error::format(
            line_at,
            "vertex properties must start with x, y, z, weight",
        ));
    }
    let channels = properties.len() - 4;
    for (c, name) in properties[4..].iter().enumerate() {
        if name != &format!("f_{c}") {
            return Err(Error::format(line_at, format!("unexpected property {name:?}")));
        }
    }

    let mut r = ByteReader::new(&bytes[pos..]);
    let stride = 4 + channels;
    let need = count
        .checked_mul(stride)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::format(pos, "vertex payload size overflow"))?;
    if r.remaining() != need {
        return Err(Error::format(
            pos,
            format!(
                "expected {need} payload bytes for {count} vertices, have {}",
                r.remaining()
            ),
        ));
    }
    let mut points = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut features = Vec::with_capacity(count * channels);
    for _ in 0..count {
        let at = pos + r.pos();
        let x = r.f32_le("x")? as f64;
        let y = r.f32_le("y")? as f64;
        let z = r.f32_le("z")? as f64;
        let w = r.f32_le("weight")? as f64;
        if ![x, y, z].iter().all(|v| v.is_finite()) {
            return Err(Error::format(at, "non-finite vertex position"));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::format(at, format!("vertex weight {w} must be positive")));
        }
        points.push(Point3::new(x, y, z));
        weights.push(w);
        for _ in 0..channels {
            let fat = pos + r.pos();
            let f = r.f32_le("feature")? as f64;
            if !f.is_finite() {
                return Err(Error::format(fat, "non-finite feature value"));
            }
            features.push(f);
        }
    }
    FeaturePointCloud::from_parts(channels, points, weights, features, None)
        .map_err(|e| Error::format(pos, e.to_string()))
}

pub fn read_ply(path: &Path) -> Result<FeaturePointCloud> {
    decode_ply(&read_file(path)?)
}

pub fn write_ply(path: &Path, cloud: &FeaturePointCloud) -> Result<()> {
    std::fs::write(path, encode_ply(cloud))
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
