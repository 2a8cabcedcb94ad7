//! Serialization: binary grid and feature map formats, camera trajectories,
//! scene manifests, and PLY point cloud output.
//!
//! All binary formats are little-endian and validated on load with byte
//! offsets in errors; writer/reader pairs round-trip bit-exactly.

mod bytes;
mod fmap_bin;
mod manifest;
mod ply;
mod trajectory;
mod tsdf_bin;

pub use fmap_bin::{
    decode_feature_map, encode_feature_map, read_feature_map, write_feature_map, FMAP_MAGIC,
    FMAP_VERSION,
};
pub use manifest::{
    load_manifest, load_scene_inputs, parse_manifest, Manifest, SceneFiles, VaConfig,
    MANIFEST_SCHEMA_VERSION,
};
pub use ply::{decode_ply, encode_ply, read_ply, write_ply};
pub use trajectory::{
    format_trajectory, parse_trajectory, read_trajectory, write_trajectory, TrajectoryEntry,
    TRAJECTORY_ROTATION_TOLERANCE,
};
pub use tsdf_bin::{
    decode_tsdf_grid, encode_tsdf_grid, read_tsdf_grid, write_tsdf_grid, TSDF_MAGIC, TSDF_VERSION,
};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
