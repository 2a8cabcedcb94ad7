//! Ray marching aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{pixel_ray, CameraView, SampleMode};
use crate::cloud::{FeaturePointCloud, RaySource};
use crate::defaults;
use crate::error::{Error, Result};
use crate::tsdf::TsdfGrid;

use super::profile::{sample_ray, RayProfile};
use super::uniform_channels;

/// Which marching quantity a retained point carries as its vote weight.
/// Retention itself always thresholds the weight `W`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteValue {
    #[default]
    Weight,
    Opacity,
}

/// Ray marching aggregation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RmaConfig {
    /// Sample count per pixel ray.
    pub samples_per_ray: usize,
    /// Maximum marching distance in meters; `None` uses the diagonal of the
    /// grid bounding box.
    pub t_max: Option<f64>,
    /// Minimum weight for a sample to be retained as a point.
    pub weight_threshold: f64,
    /// TSDF scale applied before the sigmoid, in 1/m.
    pub sigmoid_scale: f64,
    /// Feature-map sampling mode for the source pixel.
    pub sampling: SampleMode,
    /// Quantity carried as the point weight.
    pub vote_value: VoteValue,
}

impl Default for RmaConfig {
    fn default() -> Self {
        Self {
            samples_per_ray: defaults::SAMPLES_PER_RAY,
            t_max: None,
            weight_threshold: defaults::WEIGHT_THRESHOLD,
            sigmoid_scale: defaults::SIGMOID_SCALE,
            sampling: SampleMode::Nearest,
            vote_value: VoteValue::Weight,
        }
    }
}

impl RmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_ray < 2 {
            return Err(Error::domain("samples_per_ray must be at least 2"));
        }
        if !(self.weight_threshold > 0.0 && self.weight_threshold < 1.0) {
            return Err(Error::domain(format!(
                "weight_threshold {} must lie in (0, 1)",
                self.weight_threshold
            )));
        }
        if !(self.sigmoid_scale > 0.0 && self.sigmoid_scale.is_finite()) {
            return Err(Error::domain(format!(
                "sigmoid_scale {} must be positive",
                self.sigmoid_scale
            )));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::domain(format!("t_max {t} must be positive")));
            }
        }
        Ok(())
    }

    /// The marching range: explicit `t_max` or the grid diagonal.
    pub fn resolved_t_max(&self, grid: &TsdfGrid) -> f64 {
        self.t_max.unwrap_or_else(|| grid.diagonal())
    }
}

/// Marches every pixel ray of every view and retains samples whose weight
/// exceeds the threshold, each becoming a point carrying the source pixel's
/// feature. Output order is deterministic: views, then rows, then columns,
/// then samples; points from different views are not merged here (see
/// [`crate::cloud::voxelize`]).
pub fn rma_aggregate(
    grid: &TsdfGrid,
    views: &[CameraView],
    cfg: &RmaConfig,
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
                let profile = RayProfile::from_samples(t, tsdf, cfg.sigmoid_scale);
                let in_bounds =
                    view.features
                        .sample_into(col as f64, row as f64, cfg.sampling, &mut feature);
                debug_assert!(in_bounds);
                for i in 0..profile.len() {
                    if profile.weight[i] > cfg.weight_threshold {
                        let weight = match cfg.vote_value {
                            VoteValue::Weight => profile.weight[i],
                            VoteValue::Opacity => profile.alpha[i],
                        };
                        cloud.push(
                            ray.at(profile.t[i]),
                            weight,
                            &feature,
                            Some(RaySource {
                                view: vi,
                                u: col,
                                v: row,
                                t: profile.t[i],
                            }),
                        );
                    }
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
