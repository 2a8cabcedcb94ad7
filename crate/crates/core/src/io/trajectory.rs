//! Camera trajectory text format.
//!
//! One record per view, whitespace-separated, `#` starts a comment that runs
//! to the end of the line:
//!
//! ```text
//! fx fy cx cy width height  r00 r01 r02 tx  r10 r11 r12 ty  r20 r21 r22 tz
//! ```
//!
//! The 3x4 block is the camera-to-world matrix in row-major order. Rotations
//! must be orthonormal within 1e-4; small drift (beyond the pose type's 1e-6
//! tolerance) is re-orthonormalized on load.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::camera::{rotation_error, CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};

/// Loose orthonormality bound accepted from files.
pub const TRAJECTORY_ROTATION_TOLERANCE: f64 = 1e-4;

const TOKENS_PER_RECORD: usize = 18;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEntry {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
}

pub fn parse_trajectory(text: &str) -> Result<Vec<TrajectoryEntry>> {
    // Tokenize with byte offsets so errors can point at the culprit.
    let mut tokens: Vec<(&str, usize)> = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let mut offset = line_start;
        for piece in content.split_whitespace() {
            // split_whitespace does not expose indices; recover them.
            let found = content[offset - line_start..]
                .find(piece)
                .expect("token present")
                + offset;
            tokens.push((piece, found));
            offset = found + piece.len();
        }
        line_start += line.len();
    }

    if !tokens.len().is_multiple_of(TOKENS_PER_RECORD) {
        let (_, at) = tokens[tokens.len() - (tokens.len() % TOKENS_PER_RECORD)];
        return Err(Error::format(
            at,
            format!(
                "trajectory has {} values, not a multiple of {TOKENS_PER_RECORD} per record",
                tokens.len()
            ),
        ));
    }

    let mut entries = Vec::with_capacity(tokens.len() / TOKENS_PER_RECORD);
    for record in tokens.chunks(TOKENS_PER_RECORD) {
        let num = |i: usize| -> Result<f64> {
            let (tok, at) = record[i];
            tok.parse::<f64>()
                .map_err(|_| Error::format(at, format!("invalid number {tok:?}")))
        };
        let int = |i: usize| -> Result<u32> {
            let (tok, at) = record[i];
            tok.parse::<u32>()
                .map_err(|_| Error::format(at, format!("invalid integer {tok:?}")))
        };
        let record_at = record[0].1;
        let intrinsics =
            CameraIntrinsics::new(num(0)?, num(1)?, num(2)?, num(3)?, int(4)?, int(5)?)
                .map_err(|e| Error::format(record_at, e.to_string()))?;

        let mut m = [0.0f64; 12];
        for (slot, value) in m.iter_mut().enumerate() {
            *value = num(6 + slot)?;
        }
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);

        let err = rotation_error(&rotation);
        if err > TRAJECTORY_ROTATION_TOLERANCE || rotation.determinant() <= 0.0 {
            return Err(Error::format(
                record[6].1,
                format!("rotation is not orthonormal (max |R^T R - I| = {err:.3e})"),
            ));
        }
        let rotation = if err > crate::camera::ROTATION_TOLERANCE {
            orthonormalize(&rotation)
        } else {
            rotation
        };
        let pose = CameraPose::new(rotation, translation)
            .map_err(|e| Error::format(record[6].1, e.to_string()))?;
        entries.push(TrajectoryEntry { intrinsics, pose });
    }
    Ok(entries)
}

/// Gram-Schmidt on the columns; only applied to near-orthonormal input.
fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = r.column(0).normalize();
    let mut c1 = r.column(1) - c0 * c0.dot(&r.column(1));
    c1.normalize_mut();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

pub fn format_trajectory(entries: &[TrajectoryEntry]) -> String {
    let mut out = String::from(
        "# fx fy cx cy width height  r00 r01 r02 tx  r10 r11 r12 ty  r20 r21 r22 tz\n",
    );
    for e in entries {
        let i = &e.intrinsics;
        out.push_str(&format!(
            "{} {} {} {} {} {}",
            i.fx, i.fy, i.cx, i.cy, i.width, i.height
        ));
        let r = e.pose.rotation;
        let t = e.pose.translation;
        for row in 0..3 {
            out.push_str(&format!(
                "  {} {} {} {}",
                r[(row, 0)],
                r[(row, 1)],
                r[(row, 2)],
                t[row]
            ));
        }
        out.push('\n');
    }
    out
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryEntry>> {
    let bytes = super::read_file(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::format(e.utf8_error().valid_up_to(), "trajectory is not UTF-8"))?;
    parse_trajectory(&text)
}

pub fn write_trajectory(path: &Path, entries: &[TrajectoryEntry]) -> Result<()> {
    std::fs::write(path, format_trajectory(entries))
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY_RECORD: &str = "100 100 32 32 64 64  1 0 0 0.5  0 1 0 -0.25  0 0 1 2\n";

    #[test]
    fn identity_record_loads() {
        let entries = parse_trajectory(IDENTITY_RECORD).unwrap();
        assert_eq!(entries.len(), 1);
        let e = &entries[0];
        assert_eq!(e.intrinsics.width, 64);
        assert_eq!(e.pose.rotation, Matrix3::identity());
        assert_eq!(e.pose.translation, Vector3::new(0.5, -0.25, 2.0));
    }

    #[test]
    fn comment_only_file_is_empty() {
        let entries = parse_trajectory("# nothing here\n  # and here\n").unwrap();
        assert!(entries.is_empty());
    }

    #[test]
    fn column_major_confusion_is_caught() {
        // Writing the 3x4 block column-major shifts translation components
        // into rotation slots, which the orthonormality check rejects.
        let rot = nalgebra::Rotation3::from_euler_angles(0.7, 0.2, -0.5).into_inner();
        let t = Vector3::new(1.5, -0.75, 2.0);
        let mut text = String::from("100 100 32 32 64 64");
        for col in 0..3 {
            for row in 0..3 {
                text.push_str(&format!(" {}", rot[(row, col)]));
            }
        }
        text.push_str(&format!(" {} {} {}\n", t.x, t.y, t.z));
        let err = parse_trajectory(&text).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err:?}");
    }

    #[test]
    fn rotated_records_round_trip() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.4, -1.1, 0.2).into_inner();
        let entries = vec![TrajectoryEntry {
            intrinsics: CameraIntrinsics::new(80.0, 82.0, 31.5, 30.0, 64, 60).unwrap(),
            pose: CameraPose::new(rot, Vector3::new(1.0, 2.0, 3.0)).unwrap(),
        }];
        let text = format_trajectory(&entries);
        let back = parse_trajectory(&text).unwrap();
        assert_eq!(back, entries);
    }

    #[test]
    fn mild_drift_is_reorthonormalized() {
        // Perturb well inside the 1e-4 acceptance bound but beyond the pose
        // tolerance.
        let mut rot = nalgebra::Rotation3::from_euler_angles(0.3, 0.1, -0.4).into_inner();
        rot[(0, 0)] += 2e-5;
        let entries = vec![TrajectoryEntry {
            intrinsics: CameraIntrinsics::new(80.0, 80.0, 32.0, 32.0, 64, 64).unwrap(),
            pose: CameraPose {
                rotation: rot,
                translation: Vector3::zeros(),
            },
        }];
        let back = parse_trajectory(&format_trajectory(&entries)).unwrap();
        assert!(rotation_error(&back[0].pose.rotation) <= crate::camera::ROTATION_TOLERANCE);
    }

    #[test]
    fn leftover_tokens_are_an_error() {
        let text = format!("{IDENTITY_RECORD} 42.0");
        assert!(parse_trajectory(&text).is_err());
    }

    #[test]
    fn bad_number_is_positioned() {
        let bad = IDENTITY_RECORD.replace("-0.25", "oops");
        match parse_trajectory(&bad).unwrap_err() {
            Error::Format { message, .. } => assert!(message.contains("oops")),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
