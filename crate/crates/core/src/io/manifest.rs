//! Scene manifest: a TOML document tying together the grid, trajectory, and
//! per-view feature maps, plus aggregation configuration blocks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::{DaConfig, RmaConfig};
use crate::camera::CameraView;
use crate::error::{Error, Result};
use crate::synth::ScenePreset;
use crate::tsdf::TsdfGrid;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Volume-aggregation options; the volume itself reuses the grid lattice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaConfig {
    /// Surface band in meters for converting the feature volume to a cloud;
    /// `None` means the grid truncation (every observed voxel).
    pub band: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneFiles {
    /// Path to the binary TSDF grid, relative to the manifest.
    pub tsdf: String,
    /// Path to the camera trajectory text file.
    pub trajectory: String,
    /// One binary feature map per trajectory record, in order.
    pub feature_maps: Vec<String>,
    /// Analytic preset the scene was synthesized from, when known; enables
    /// oracle-based evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<ScenePreset>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub scene: SceneFiles,
    #[serde(default)]
    pub rma: RmaConfig,
    #[serde(default)]
    pub da: DaConfig,
    #[serde(default)]
    pub va: VaConfig,
    /// Default output path for aggregated clouds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Parses and validates a manifest document (no filesystem access).
pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let manifest: Manifest = toml::from_str(text).map_err(|e| {
        let offset = e.span().map(|s| s.start).unwrap_or(0);
        Error::format(offset, e.message().to_string())
    })?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::domain(format!(
            "unsupported manifest schema_version {}, expected {MANIFEST_SCHEMA_VERSION}",
            manifest.schema_version
        )));
    }
    if manifest.scene.feature_maps.is_empty() {
        return Err(Error::domain("manifest must list at least one view"));
    }
    Ok(manifest)
}

/// Loads a manifest and checks that every referenced file exists. Returns
/// the manifest and the directory paths are resolved against.
pub fn load_manifest(path: &Path) -> Result<(Manifest, PathBuf)> {
    let bytes = super::read_file(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::format(e.utf8_error().valid_up_to(), "manifest is not UTF-8"))?;
    let manifest = parse_manifest(&text)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut referenced = vec![&manifest.scene.tsdf, &manifest.scene.trajectory];
    referenced.extend(manifest.scene.feature_maps.iter());
    for rel in referenced {
        let full = base.join(rel);
        if !full.is_file() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("manifest references missing file {}", full.display()),
            )));
        }
    }
    Ok((manifest, base))
}

/// Reads the grid and assembles the camera views listed by a manifest.
pub fn load_scene_inputs(manifest: &Manifest, base: &Path) -> Result<(TsdfGrid, Vec<CameraView>)> {
    let grid = super::read_tsdf_grid(&base.join(&manifest.scene.tsdf))?;
    let trajectory = super::read_trajectory(&base.join(&manifest.scene.trajectory))?;
    if trajectory.len() != manifest.scene.feature_maps.len() {
        return Err(Error::domain(format!(
            "trajectory has {} records but manifest lists {} feature maps",
            trajectory.len(),
            manifest.scene.feature_maps.len()
        )));
    }
    let mut views = Vec::with_capacity(trajectory.len());
    for (entry, rel) in trajectory.into_iter().zip(&manifest.scene.feature_maps) {
        let map = super::read_feature_map(&base.join(rel))?;
        let view = CameraView::new(entry.intrinsics, entry.pose, map)
            .map_err(|e| Error::domain(format!("{rel}: {e}")))?;
        views.push(view);
    }
    Ok((grid, views))
}
