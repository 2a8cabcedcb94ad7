//! Depth aggregation: vote to a window around the first TSDF sign change.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{pixel_ray, CameraView, SampleMode};
use crate::cloud::{FeaturePointCloud, RaySource};
use crate::defaults;
use crate::error::{Error, Result};
use crate::tsdf::TsdfGrid;

use super::profile::{first_hitting_point, sample_ray};
use super::uniform_channels;

/// Depth aggregation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DaConfig {
    /// Half-count of the selection window: `2k` samples are taken around the
    /// first hitting point.
    pub k: usize,
    pub samples_per_ray: usize,
    /// Maximum marching distance in meters; `None` uses the grid diagonal.
    pub t_max: Option<f64>,
    pub sampling: SampleMode,
}

impl Default for DaConfig {
    fn default() -> Self {
        Self {
            k: 1,
            samples_per_ray: defaults::SAMPLES_PER_RAY,
            t_max: None,
            sampling: SampleMode::Nearest,
        }
    }
}

impl DaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::domain("k must be at least 1"));
        }
        if self.samples_per_ray < 2 {
            return Err(Error::domain("samples_per_ray must be at least 2"));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::domain(format!("t_max {t} must be positive")));
            }
        }
        Ok(())
    }

    pub fn resolved_t_max(&self, grid: &TsdfGrid) -> f64 {
        self.t_max.unwrap_or_else(|| grid.diagonal())
    }
}

/// Window indices and normalized weights for a first hitting point at `fhp`.
///
/// Selects samples `fhp-k+1 ..= fhp+k` (clipped to `0..len`) with triangular
/// weights proportional to `k - |j - (fhp + 0.5)|`, symmetric about the sign
/// change between `fhp` and `fhp + 1`, renormalized to sum 1 over the
/// surviving indices. For `k = 1` this reduces to two half-weight points;
/// for `k = 2` the weights are (1, 3, 3, 1)/8.
pub(crate) fn da_window(len: usize, fhp: usize, k: usize) -> Vec<(usize, f64)> {
    let center = fhp as f64 + 0.5;
    let lo = fhp as i64 - k as i64 + 1;
    let hi = fhp as i64 + k as i64;
    let mut selected = Vec::with_capacity(2 * k);
    let mut sum = 0.0;
    for j in lo..=hi {
        if j < 0 || j >= len as i64 {
            continue;
        }
        let w = k as f64 - (j as f64 - center).abs();
        debug_assert!(w > 0.0);
        selected.push((j as usize, w));
        sum += w;
    }
    for (_, w) in &mut selected {
        *w /= sum;
    }
    selected
}

/// Votes each ray's pixel feature to the `2k` samples around the first
/// TSDF sign change; rays with no crossing contribute nothing. Output order
/// matches [`super::rma_aggregate`].
pub fn da_aggregate(
    grid: &TsdfGrid,
    views: &[CameraView],
    cfg: &DaConfig,
) -> Result<FeaturePointCloud> {
    cfg.validate()?;
    let channels = uniform_channels(views)?;
    let t_max = cfg.resolved_t_max(grid);

    let rows: Vec<(usize, u32)> = views
        .iter()
        .enumerate()
        .flat_map(|(vi, view)| (0..view.intrinsics.height).map(move |row| (vi, row)))
        .collect();

    let partials: Vec<FeaturePointCloud> = rows
        .par_iter()
        .map(|&(vi, row)| {
            let view = &views[vi];
            let mut cloud = FeaturePointCloud::with_provenance(channels);
            let mut feature = vec![0.0; channels];
            for col in 0..view.intrinsics.width {
                let ray = pixel_ray(view, col as f64, row as f64).expect("pixel in range");
                let (t, tsdf) = sample_ray(grid, &ray, cfg.samples_per_ray, t_max);
                let Some(fhp) = first_hitting_point(&tsdf) else {
                    continue;
                };
                let in_bounds =
                    view.features
                        .sample_into(col as f64, row as f64, cfg.sampling, &mut feature);
                debug_assert!(in_bounds);
                for (j, weight) in da_window(t.len(), fhp, cfg.k) {
                    cloud.push(
                        ray.at(t[j]),
                        weight,
                        &feature,
                        Some(RaySource {
                            view: vi,
                            u: col,
                            v: row,
                            t: t[j],
                        }),
                    );
                }
            }
            cloud
        })
        .collect();

    let mut out = FeaturePointCloud::with_provenance(channels);
    for partial in partials {
        out.append(partial);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AnalyticScene;
    use crate::tsdf::bake;
    use nalgebra::{Point3, Vector3};

    #[test]
    fn k1_window_is_two_half_weights() {
        let window = da_window(100, 40, 1);
        assert_eq!(window.len(), 2);
        assert_eq!(window[0], (40, 0.5));
        assert_eq!(window[1], (41, 0.5));
    }

    #[test]
    fn k2_window_is_one_three_three_one() {
        let window = da_window(100, 40, 2);
        let expect = [(39, 1.0 / 8.0), (40, 3.0 / 8.0), (41, 3.0 / 8.0), (42, 1.0 / 8.0)];
        assert_eq!(window.len(), 4);
        for ((j, w), (ej, ew)) in window.iter().zip(expect) {
            assert_eq!(*j, ej);
            assert!((w - ew).abs() < 1e-12);
        }
    }

    #[test]
    fn clipped_window_renormalizes() {
        // fhp at the very first sample with k = 2 loses index -1.
        let window = da_window(100, 0, 2);
        let total: f64 = window.iter().map(|(_, w)| w).sum();
        assert_eq!(window.len(), 3);
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(window[0].0, 0);
        // Raw weights (3, 3, 1)/2k renormalized.
        assert!((window[0].1 - 3.0 / 7.0).abs() < 1e-12);
        assert!((window[2].1 - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn miss_contributes_no_points() {
        // Grid entirely in free space.
        let scene = AnalyticScene::sphere(Point3::new(50.0, 0.0, 0.0), 0.5);
        let grid = bake(&scene, [8, 8, 8], Point3::new(-0.16, -0.16, 0.0), 0.04, 0.12).unwrap();
        let intr = crate::camera::CameraIntrinsics::new(8.0, 8.0, 4.0, 4.0, 8, 8).unwrap();
        let pose = crate::camera::CameraPose::new(
            nalgebra::Matrix3::identity(),
            Vector3::new(0.0, 0.0, -0.4),
        )
        .unwrap();
        let view = crate::camera::CameraView::new(
            intr,
            pose,
            crate::camera::FeatureMap::constant(8, 8, 2, 1.0).unwrap(),
        )
        .unwrap();
        let cloud = da_aggregate(&grid, &[view], &DaConfig::default()).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn per_ray_weights_sum_to_one() {
        // Wall at z = 0.5; every ray crosses once, so each ray's window
        // weights sum to 1 and the cloud's total weight equals the ray count.
        let scene =
            AnalyticScene::half_space(Vector3::new(0.0, 0.0, -1.0), Point3::new(0.0, 0.0, 0.5));
        let grid = bake(&scene, [26, 26, 26], Point3::new(-0.5, -0.5, 0.0), 0.04, 0.12).unwrap();
        let intr = crate::camera::CameraIntrinsics::new(16.0, 16.0, 8.0, 8.0, 16, 16).unwrap();
        let pose = crate::camera::CameraPose::new(
            nalgebra::Matrix3::identity(),
            Vector3::new(0.0, 0.0, -0.3),
        )
        .unwrap();
        let view = crate::camera::CameraView::new(
            intr,
            pose,
            crate::camera::FeatureMap::constant(16, 16, 1, 2.0).unwrap(),
        )
        .unwrap();
        let cfg = DaConfig {
            k: 3,
            samples_per_ray: 150,
            ..DaConfig::default()
        };
        let cloud = da_aggregate(&grid, &[view], &cfg).unwrap();
        assert_eq!(cloud.len(), 16 * 16 * 6);
        assert!((cloud.total_weight() - 256.0).abs() < 1e-9);
    }
}
