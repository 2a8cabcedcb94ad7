//! Volume aggregation: unprojection with average pooling.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::camera::{CameraView, SampleMode};
use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};
use crate::tsdf::TsdfGrid;

use super::uniform_channels;

/// Per-voxel features pooled over the views that observe each voxel.
///
/// `features` is stored x-fastest with channels innermost; voxels observed
/// by no view hold the zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeFeatures {
    dims: [usize; 3],
    origin: Point3<f64>,
    voxel_size: f64,
    channels: usize,
    features: Vec<f64>,
    view_count: Vec<u32>,
}

impl VolumeFeatures {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Point3<f64> {
        self.origin
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn voxel_count(&self) -> usize {
        self.view_count.len()
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.voxel_size
    }

    pub fn feature(&self, i: usize, j: usize, k: usize) -> &[f64] {
        let idx = self.linear_index(i, j, k) * self.channels;
        &self.features[idx..idx + self.channels]
    }

    pub fn view_count(&self, i: usize, j: usize, k: usize) -> u32 {
        self.view_count[self.linear_index(i, j, k)]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn view_counts(&self) -> &[u32] {
        &self.view_count
    }
}

/// Projects every voxel center into every view and average-pools the pixel
/// features of the views that see it (in front of the camera and inside the
/// image). Occlusion is deliberately ignored; this is the unprojection
/// baseline.
pub fn va_aggregate(
    views: &[CameraView],
    dims: [usize; 3],
    origin: Point3<f64>,
    voxel_size: f64,
) -> Result<VolumeFeatures> {
    if dims.contains(&0) {
        return Err(Error::domain(format!("volume dims {dims:?} must all be >= 1")));
    }
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::domain(format!("voxel_size {voxel_size} must be positive")));
    }
    let channels = uniform_channels(views)?;
    let [w, h, d] = dims;
    let per_voxel: Vec<(Vec<f64>, u32)> = (0..w * h * d)
        .into_par_iter()
        .map(|flat| {
            let i = flat % w;
            let j = flat / w % h;
            let k = flat / (w * h);
            let center = origin + Vector3::new(i as f64, j as f64, k as f64) * voxel_size;
            let mut acc = vec![0.0; channels];
            let mut sample = vec![0.0; channels];
            let mut count = 0u32;
            for view in views {
                let Some(pixel) = crate::camera::project(view, &center) else {
                    continue;
                };
                if view
                    .features
                    .sample_into(pixel.u, pixel.v, SampleMode::Nearest, &mut sample)
                {
                    for (a, s) in acc.iter_mut().zip(&sample) {
                        *a += s;
                    }
                    count += 1;
                }
            }
            if count > 0 {
                for a in &mut acc {
                    *a /= count as f64;
                }
            }
            (acc, count)
        })
        .collect();

    let mut features = Vec::with_capacity(w * h * d * channels);
    let mut view_count = Vec::with_capacity(w * h * d);
    for (feat, count) in per_voxel {
        features.extend_from_slice(&feat);
        view_count.push(count);
    }
    Ok(VolumeFeatures {
        dims,
        origin,
        voxel_size,
        channels,
        features,
        view_count,
    })
}

/// Converts observed voxels near the implicit surface into a point cloud:
/// voxel centers with at least one observing view and `|TSDF| < band`, each
/// with weight 1. A `band >= truncation` disables the filter so every
/// observed voxel is emitted.
pub fn volume_to_cloud(
    vol: &VolumeFeatures,
    grid: &TsdfGrid,
    band: f64,
) -> Result<FeaturePointCloud> {
    if band.is_nan() || band <= 0.0 {
        return Err(Error::domain(format!("band {band} must be positive")));
    }
    let unfiltered = band >= grid.truncation();
    let mut cloud = FeaturePointCloud::new(vol.channels());
    let [w, h, d] = vol.dims();
    for k in 0..d {
        for j in 0..h {
            for i in 0..w {
                if vol.view_count(i, j, k) == 0 {
                    continue;
                }
                let center = vol.voxel_center(i, j, k);
                if unfiltered || grid.query_nearest(&center).abs() < band {
                    cloud.push(center, 1.0, vol.feature(i, j, k), None);
                }
            }
        }
    }
    Ok(cloud)
}
