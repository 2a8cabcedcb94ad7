//! Synthetic test scenes: analytic presets, deterministic camera rigs, and
//! seeded smooth random feature maps.
//!
//! Presets are pure functions of the grid bounding box, so a preset name in
//! a manifest is enough to reconstruct the exact analytic scene for
//! oracle-based evaluation. Randomness (camera jitter, feature fields) is
//! driven entirely by the seed.

use std::str::FromStr;

use nalgebra::{Point3, Rotation3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, CameraPose, CameraView, FeatureMap};
use crate::defaults;
use crate::error::{Error, Result};
use crate::scene::AnalyticScene;
use crate::tsdf::{bake, TsdfGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenePreset {
    /// Single slightly tilted wall seen head-on.
    Plane,
    /// Two thick parallel walls; the first fully occludes the second.
    TwoWalls,
    /// Solid everywhere outside an interior room box.
    BoxRoom,
    /// Floor plane with a fixed arrangement of spheres.
    SphereClutter,
}

impl ScenePreset {
    pub const ALL: [ScenePreset; 4] = [
        ScenePreset::Plane,
        ScenePreset::TwoWalls,
        ScenePreset::BoxRoom,
        ScenePreset::SphereClutter,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenePreset::Plane => "plane",
            ScenePreset::TwoWalls => "two-walls",
            ScenePreset::BoxRoom => "box-room",
            ScenePreset::SphereClutter => "sphere-clutter",
        }
    }
}

impl FromStr for ScenePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenePreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::domain(format!(
                    "unknown preset {s:?}; expected one of plane, two-walls, box-room, sphere-clutter"
                ))
            })
    }
}

impl std::fmt::Display for ScenePreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters for one synthetic scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub preset: ScenePreset,
    pub views: usize,
    pub dims: [usize; 3],
    pub voxel_size: f64,
    pub truncation: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub channels: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            preset: ScenePreset::Plane,
            views: 8,
            dims: [64, 64, 32],
            voxel_size: defaults::AGGREGATION_VOXEL_SIZE,
            truncation: defaults::TRUNCATION,
            image_width: 64,
            image_height: 64,
            channels: 8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.views == 0 {
            return Err(Error::domain("at least one view is required"));
        }
        if self.dims.contains(&0) {
            return Err(Error::domain(format!("dims {:?} must all be >= 1", self.dims)));
        }
        if self.voxel_size.is_nan() || self.voxel_size <= 0.0 {
            return Err(Error::domain(format!("voxel size {} must be positive", self.voxel_size)));
        }
        if self.truncation.is_nan() || self.truncation <= 0.0 {
            return Err(Error::domain(format!("truncation {} must be positive", self.truncation)));
        }
        if self.image_width == 0 || self.image_height == 0 || self.channels == 0 {
            return Err(Error::domain("image size and channels must be >= 1"));
        }
        Ok(())
    }

    /// Grid origin centering the bounding box on the world origin.
    pub fn grid_origin(&self) -> Point3<f64> {
        Point3::new(
            -self.voxel_size * (self.dims[0] as f64 - 1.0) * 0.5,
            -self.voxel_size * (self.dims[1] as f64 - 1.0) * 0.5,
            -self.voxel_size * (self.dims[2] as f64 - 1.0) * 0.5,
        )
    }
}

/// A fully assembled synthetic scene.
#[derive(Clone, Debug)]
pub struct SynthScene {
    pub scene: AnalyticScene,
    pub grid: TsdfGrid,
    pub views: Vec<CameraView>,
}

/// Builds the analytic scene of a preset for a grid bounding box.
pub fn build_scene(preset: ScenePreset, lo: Point3<f64>, hi: Point3<f64>) -> AnalyticScene {
    let span = hi - lo;
    let big = span.norm() + 10.0;
    match preset {
        ScenePreset::Plane => {
            let anchor = Point3::new(
                (lo.x + hi.x) * 0.5,
                (lo.y + hi.y) * 0.5,
                lo.z + 0.55 * span.z,
            );
            // Slight tilt decorrelates the wall from the voxel lattice.
            AnalyticScene::half_space(Vector3::new(0.07, -0.05, -1.0), anchor)
        }
        ScenePreset::TwoWalls => {
            let wall = |z0: f64, z1: f64| {
                AnalyticScene::cuboid(
                    Point3::new(lo.x - big, lo.y - big, z0),
                    Point3::new(hi.x + big, hi.y + big, z1),
                )
            };
            AnalyticScene::Union(vec![
                wall(lo.z + 0.40 * span.z, lo.z + 0.65 * span.z),
                wall(lo.z + 0.88 * span.z, hi.z + big),
            ])
        }
        ScenePreset::BoxRoom => {
            let rm_lo = lo + span * 0.18;
            let rm_hi = hi - span * 0.18;
            AnalyticScene::Union(vec![
                AnalyticScene::half_space(Vector3::x(), rm_lo),
                AnalyticScene::half_space(-Vector3::x(), rm_hi),
                AnalyticScene::half_space(Vector3::y(), rm_lo),
                AnalyticScene::half_space(-Vector3::y(), rm_hi),
                AnalyticScene::half_space(Vector3::z(), rm_lo),
                AnalyticScene::half_space(-Vector3::z(), rm_hi),
            ])
        }
        ScenePreset::SphereClutter => {
            let center = nalgebra::center(&lo, &hi);
            let floor_z = lo.z + 0.22 * span.z;
            let s = span.x.min(span.y);
            let ball = |dx: f64, dy: f64, r: f64| {
                AnalyticScene::sphere(
                    Point3::new(center.x + dx * s, center.y + dy * s, floor_z + r),
                    r,
                )
            };
            AnalyticScene::Union(vec![
                AnalyticScene::half_space(Vector3::z(), Point3::new(0.0, 0.0, floor_z)),
                ball(-0.18, -0.10, 0.09 * s),
                ball(0.15, 0.05, 0.12 * s),
                ball(0.02, -0.20, 0.07 * s),
                ball(-0.05, 0.18, 0.10 * s),
            ])
        }
    }
}

/// Deterministic camera placement for a preset: front-facing jittered
/// cameras for the wall presets, an outward ring for the room, and an
/// orbiting ring for the clutter scene.
pub fn camera_rig(
    preset: ScenePreset,
    grid: &TsdfGrid,
    views: usize,
    image_width: u32,
    image_height: u32,
    seed: u64,
) -> Result<Vec<(CameraIntrinsics, CameraPose)>> {
    let lo = grid.min_corner();
    let hi = grid.max_corner();
    let span = hi - lo;
    let center = nalgebra::center(&lo, &hi);
    let intrinsics = CameraIntrinsics::new(
        image_width as f64,
        image_width as f64,
        image_width as f64 / 2.0,
        image_height as f64 / 2.0,
        image_width,
        image_height,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rig = Vec::with_capacity(views);
    for i in 0..views {
        let pose = match preset {
            ScenePreset::Plane | ScenePreset::TwoWalls => {
                let eye = Vector3::new(
                    center.x + rng.random_range(-0.06..0.06) * span.x,
                    center.y + rng.random_range(-0.06..0.06) * span.y,
                    lo.z + 0.06 * span.z,
                );
                let tilt = Rotation3::from_euler_angles(
                    rng.random_range(-0.03..0.03),
                    rng.random_range(-0.03..0.03),
                    0.0,
                );
                CameraPose::new(tilt.into_inner(), eye)?
            }
            ScenePreset::BoxRoom => {
                let angle = std::f64::consts::TAU * i as f64 / views as f64
                    + rng.random_range(-0.05..0.05);
                let radius = 0.10 * span.x.min(span.y);
                let eye = Point3::new(
                    center.x + radius * angle.cos(),
                    center.y + radius * angle.sin(),
                    center.z + rng.random_range(-0.04..0.04) * span.z,
                );
                let target = Point3::new(
                    center.x + (radius + 1.0) * angle.cos(),
                    center.y + (radius + 1.0) * angle.sin(),
                    eye.z + rng.random_range(-0.1..0.1),
                );
                CameraPose::look_at(eye, target, Vector3::z())?
            }
            ScenePreset::SphereClutter => {
                let angle = std::f64::consts::TAU * i as f64 / views as f64
                    + rng.random_range(-0.05..0.05);
                let radius = 0.35 * span.x.min(span.y);
                let eye = Point3::new(
                    center.x + radius * angle.cos(),
                    center.y + radius * angle.sin(),
                    lo.z + 0.62 * span.z,
                );
                let target = Point3::new(center.x, center.y, lo.z + 0.28 * span.z);
                CameraPose::look_at(eye, target, Vector3::z())?
            }
        };
        rig.push((intrinsics, pose));
    }
    Ok(rig)
}

/// Smooth random field: per channel, a sum of three low-frequency sinusoids
/// with seeded amplitudes, integer frequencies, and phases. Seeded per view
/// through the stream id, so views differ but reruns do not.
pub fn synthetic_feature_map(
    seed: u64,
    view_index: usize,
    height: u32,
    width: u32,
    channels: u32,
) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(view_index as u64 + 1);
    struct Wave {
        amp: f64,
        kx: f64,
        ky: f64,
        phase: f64,
    }
    let waves: Vec<Vec<Wave>> = (0..channels)
        .map(|_| {
            (0..3)
                .map(|_| Wave {
                    amp: rng.random_range(0.2..1.0),
                    kx: rng.random_range(-3i32..=3) as f64,
                    ky: rng.random_range(-3i32..=3) as f64,
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                })
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(height as usize * width as usize * channels as usize);
    for v in 0..height {
        for u in 0..width {
            let x = (u as f64 + 0.5) / width as f64;
            let y = (v as f64 + 0.5) / height as f64;
            for channel_waves in &waves {
                let value: f64 = channel_waves
                    .iter()
                    .map(|w| w.amp * (std::f64::consts::TAU * (w.kx * x + w.ky * y) + w.phase).sin())
                    .sum();
                data.push(value);
            }
        }
    }
    FeatureMap::new(height, width, channels, data).expect("finite synthetic field")
}

/// Builds the whole synthetic scene: analytic geometry, baked grid, and
/// posed views with feature maps.
pub fn synthesize(cfg: &SynthConfig) -> Result<SynthScene> {
    cfg.validate()?;
    let origin = cfg.grid_origin();
    // Bounding box of the future grid, before baking.
    let lo = origin - Vector3::repeat(cfg.voxel_size * 0.5);
    let hi = origin
        + Vector3::new(
            cfg.dims[0] as f64 - 0.5,
            cfg.dims[1] as f64 - 0.5,
            cfg.dims[2] as f64 - 0.5,
        ) * cfg.voxel_size;
    let scene = build_scene(cfg.preset, lo, hi);
    let grid = bake(&scene, cfg.dims, origin, cfg.voxel_size, cfg.truncation)?;
    let rig = camera_rig(
        cfg.preset,
        &grid,
        cfg.views,
        cfg.image_width,
        cfg.image_height,
        cfg.seed,
    )?;
    let mut views = Vec::with_capacity(cfg.views);
    for (i, (intrinsics, pose)) in rig.into_iter().enumerate() {
        let map = synthetic_feature_map(cfg.seed, i, cfg.image_height, cfg.image_width, cfg.channels);
        views.push(CameraView::new(intrinsics, pose, map)?);
    }
    Ok(SynthScene { scene, grid, views })
}
