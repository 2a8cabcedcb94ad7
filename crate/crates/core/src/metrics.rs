//! Geometric quality metrics for aggregated clouds, measured against the
//! analytic scene the grid was baked from.

use std::collections::HashMap;

use serde::Serialize;

use crate::aggregate::{da_aggregate, rma_aggregate, va_aggregate, volume_to_cloud, DaConfig, RmaConfig};
use crate::camera::{pixel_ray, CameraView};
use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};
use crate::scene::{sphere_trace, AnalyticScene};
use crate::tsdf::TsdfGrid;

/// Per-scheme summary of how well the aggregated weight concentrates on the
/// true surface.
#[derive(Clone, Debug, Serialize)]
pub struct AggregationReport {
    pub scheme: String,
    pub points: usize,
    pub total_weight: f64,
    /// Fraction of weight within `epsilon` of the analytic surface.
    pub surface_mass: f64,
    /// Fraction of weight farther along its source ray than the first hit
    /// plus the margin; absent for schemes without ray provenance.
    pub occlusion_leakage: Option<f64>,
    /// Weight-averaged absolute distance to the surface, in meters.
    pub mean_surface_distance: f64,
}

/// Fraction of cloud weight lying within `epsilon` of the scene surface.
/// An empty cloud scores 0.
pub fn surface_mass(cloud: &FeaturePointCloud, scene: &AnalyticScene, epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::domain(format!("epsilon {epsilon} must be positive")));
    }
    let total = cloud.total_weight();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let near: f64 = cloud
        .points()
        .iter()
        .zip(cloud.weights())
        .filter(|(p, _)| scene.distance(p).abs() < epsilon)
        .map(|(_, w)| w)
        .sum();
    Ok(near / total)
}

/// Weight-averaged absolute point-to-surface distance; 0 for empty clouds.
pub fn weighted_surface_distance(cloud: &FeaturePointCloud, scene: &AnalyticScene) -> f64 {
    let total = cloud.total_weight();
    if total <= 0.0 {
        return 0.0;
    }
    let sum: f64 = cloud
        .points()
        .iter()
        .zip(cloud.weights())
        .map(|(p, w)| scene.distance(p).abs() * w)
        .sum();
    sum / total
}

/// Fraction of cloud weight carried by points farther along their source ray
/// than the oracle first-hit depth plus `margin`.
///
/// Requires ray provenance; volume-aggregated clouds have none and are a
/// domain error here.
pub fn occlusion_leakage(
    cloud: &FeaturePointCloud,
    scene: &AnalyticScene,
    views: &[CameraView],
    margin: f64,
) -> Result<f64> {
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::domain(format!("margin {margin} must be positive")));
    }
    let Some(provenance) = cloud.provenance() else {
        return Err(Error::domain(
            "cloud carries no source-ray provenance; occlusion leakage is undefined",
        ));
    };
    let total = cloud.total_weight();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let t_cap = provenance.iter().map(|s| s.t).fold(0.0, f64::max) + margin + 1.0;

    // One sphere trace per distinct source pixel.
    let mut depth_cache: HashMap<(usize, u32, u32), f64> = HashMap::new();
    let mut leaked = 0.0;
    for (source, weight) in provenance.iter().zip(cloud.weights()) {
        if source.view >= views.len() {
            return Err(Error::domain(format!(
                "provenance references view {} of {}",
                source.view,
                views.len()
            )));
        }
        let depth = match depth_cache.entry((source.view, source.u, source.v)) {
            std::collections::hash_map::Entry::Occupied(e) => *e.get(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let ray = pixel_ray(&views[source.view], source.u as f64, source.v as f64)?;
                *e.insert(sphere_trace(scene, &ray, t_cap).unwrap_or(f64::INFINITY))
            }
        };
        if source.t > depth + margin {
            leaked += weight;
        }
    }
    Ok(leaked / total)
}

/// Everything [`compare_schemes`] needs beyond the scene and grid.
#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub rma: RmaConfig,
    pub da: DaConfig,
    /// Volume-aggregation grid; defaults to the TSDF grid's geometry.
    pub va_dims: [usize; 3],
    pub va_origin: nalgebra::Point3<f64>,
    pub va_voxel_size: f64,
    /// Band for converting the feature volume to a cloud.
    pub band: f64,
    /// Surface-mass tolerance in meters.
    pub epsilon: f64,
    /// Occlusion-leakage margin in meters.
    pub margin: f64,
}

impl CompareConfig {
    /// Defaults derived from a grid: VA on the same lattice, surface band of
    /// three voxels, leakage margin of two truncations.
    pub fn for_grid(grid: &TsdfGrid) -> Self {
        Self {
            rma: RmaConfig::default(),
            da: DaConfig::default(),
            va_dims: grid.dims(),
            va_origin: grid.origin(),
            va_voxel_size: grid.voxel_size(),
            band: grid.truncation(),
            epsilon: crate::defaults::SURFACE_BAND_FACTOR * grid.voxel_size(),
            margin: crate::defaults::LEAKAGE_MARGIN_FACTOR * grid.truncation(),
        }
    }
}

fn report_for(
    scheme: &str,
    cloud: &FeaturePointCloud,
    scene: &AnalyticScene,
    views: &[CameraView],
    cfg: &CompareConfig,
) -> Result<AggregationReport> {
    let leakage = if cloud.provenance().is_some() {
        Some(occlusion_leakage(cloud, scene, views, cfg.margin)?)
    } else {
        None
    };
    Ok(AggregationReport {
        scheme: scheme.to_string(),
        points: cloud.len(),
        total_weight: cloud.total_weight(),
        surface_mass: surface_mass(cloud, scene, cfg.epsilon)?,
        occlusion_leakage: leakage,
        mean_surface_distance: weighted_surface_distance(cloud, scene),
    })
}

/// Runs all three aggregation schemes on the same scene and views and
/// reports one row per scheme, in the stable order rma, da, va.
pub fn compare_schemes(
    scene: &AnalyticScene,
    grid: &TsdfGrid,
    views: &[CameraView],
    cfg: &CompareConfig,
) -> Result<Vec<AggregationReport>> {
    let rma_cloud = rma_aggregate(grid, views, &cfg.rma)?;
    let da_cloud = da_aggregate(grid, views, &cfg.da)?;
    let volume = va_aggregate(views, cfg.va_dims, cfg.va_origin, cfg.va_voxel_size)?;
    let va_cloud = volume_to_cloud(&volume, grid, cfg.band)?;
    Ok(vec![
        report_for("rma", &rma_cloud, scene, views, cfg)?,
        report_for("da", &da_cloud, scene, views, cfg)?,
        report_for("va", &va_cloud, scene, views, cfg)?,
    ])
}
