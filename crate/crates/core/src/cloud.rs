//! Feature point clouds and their merge into sparse voxels.

use std::collections::BTreeMap;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Which ray produced a point: source view, source pixel, and the distance
/// along the pixel ray. Carried by ray-based aggregation so occlusion
/// metrics can compare against per-ray oracle depths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySource {
    pub view: usize,
    pub u: u32,
    pub v: u32,
    pub t: f64,
}

/// Weighted 3D points, each carrying a C-channel feature vector.
///
/// Storage is struct-of-arrays with a flat `N x channels` feature buffer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeaturePointCloud {
    channels: usize,
    points: Vec<Point3<f64>>,
    weights: Vec<f64>,
    features: Vec<f64>,
    provenance: Option<Vec<RaySource>>,
}

impl FeaturePointCloud {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            ..Default::default()
        }
    }

    /// Empty cloud that records a [`RaySource`] for every pushed point.
    pub(crate) fn with_provenance(channels: usize) -> Self {
        Self {
            channels,
            provenance: Some(Vec::new()),
            ..Default::default()
        }
    }

    /// Builds a cloud from parallel arrays, validating the shared length,
    /// positive weights, and finiteness.
    pub fn from_parts(
        channels: usize,
        points: Vec<Point3<f64>>,
        weights: Vec<f64>,
        features: Vec<f64>,
        provenance: Option<Vec<RaySource>>,
    ) -> Result<Self> {
        let n = points.len();
        if weights.len() != n || features.len() != n * channels {
            return Err(Error::domain(format!(
                "inconsistent cloud arrays: {n} points, {} weights, {} feature values (channels = {channels})",
                weights.len(),
                features.len()
            )));
        }
        if let Some(prov) = &provenance {
            if prov.len() != n {
                return Err(Error::domain("provenance length does not match points"));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::domain("point weights must be positive and finite"));
        }
        if points.iter().any(|p| !p.coords.iter().all(|v| v.is_finite()))
            || features.iter().any(|v| !v.is_finite())
        {
            return Err(Error::domain("points and features must be finite"));
        }
        Ok(Self {
            channels,
            points,
            weights,
            features,
            provenance,
        })
    }

    pub(crate) fn push(
        &mut self,
        point: Point3<f64>,
        weight: f64,
        feature: &[f64],
        source: Option<RaySource>,
    ) {
        debug_assert_eq!(feature.len(), self.channels);
        self.points.push(point);
        self.weights.push(weight);
        self.features.extend_from_slice(feature);
        match (&mut self.provenance, source) {
            (Some(prov), Some(src)) => prov.push(src),
            (None, None) => {}
            _ => debug_assert!(false, "mixed provenance in one cloud"),
        }
    }

    pub(crate) fn append(&mut self, mut other: FeaturePointCloud) {
        debug_assert_eq!(self.channels, other.channels);
        self.points.append(&mut other.points);
        self.weights.append(&mut other.weights);
        self.features.append(&mut other.features);
        match (&mut self.provenance, other.provenance) {
            (Some(a), Some(mut b)) => a.append(&mut b),
            (None, None) => {}
            _ => debug_assert!(false, "mixed provenance in one cloud"),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flat `N x channels` feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &[f64] {
        &self.features[index * self.channels..(index + 1) * self.channels]
    }

    pub fn provenance(&self) -> Option<&[RaySource]> {
        self.provenance.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Weighted feature accumulated in one voxel cell.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelData {
    /// Sum of the weights of all contributing points.
    pub weight: f64,
    /// Weight-normalized average feature of the contributions.
    pub feature: Vec<f64>,
}

/// Sparse voxel merge of a feature point cloud, keyed by integer cell
/// coordinates (`floor(p / voxel_size)`), in sorted key order.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFeatureVoxels {
    voxel_size: f64,
    channels: usize,
    entries: BTreeMap<[i64; 3], VoxelData>,
}

impl SparseFeatureVoxels {
    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<[i64; 3], VoxelData> {
        &self.entries
    }

    pub fn get(&self, key: &[i64; 3]) -> Option<&VoxelData> {
        self.entries.get(key)
    }

    /// World center of a voxel cell.
    pub fn cell_center(&self, key: &[i64; 3]) -> Point3<f64> {
        Point3::new(
            (key[0] as f64 + 0.5) * self.voxel_size,
            (key[1] as f64 + 0.5) * self.voxel_size,
            (key[2] as f64 + 0.5) * self.voxel_size,
        )
    }

    /// Converts the voxels back into a point cloud at cell centers, carrying
    /// the accumulated weight and merged feature.
    pub fn to_cloud(&self) -> FeaturePointCloud {
        let mut cloud = FeaturePointCloud::new(self.channels);
        for (key, data) in &self.entries {
            cloud.push(self.cell_center(key), data.weight, &data.feature, None);
        }
        cloud
    }
}

/// Merges a point cloud into sparse voxels. Each cell's feature is the
/// weighted mean of its contributions and its weight the contribution sum.
///
/// Points are accumulated per fixed-size chunk and the chunk maps merged in
/// chunk order, so the result does not depend on the rayon worker count.
pub fn voxelize(cloud: &FeaturePointCloud, voxel_size: f64) -> Result<SparseFeatureVoxels> {
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::domain(format!("voxel_size {voxel_size} must be positive")));
    }
    let channels = cloud.channels();
    const CHUNK: usize = 16 * 1024;
    // Weighted feature sum and weight total per cell, pre-normalization.
    type CellAccumulator = BTreeMap<[i64; 3], (f64, Vec<f64>)>;
    let indices: Vec<usize> = (0..cloud.len()).collect();
    let partials: Vec<CellAccumulator> = indices
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut map = CellAccumulator::new();
            for &idx in chunk {
                let p = cloud.points()[idx];
                let w = cloud.weights()[idx];
                let key = [
                    (p.x / voxel_size).floor() as i64,
                    (p.y / voxel_size).floor() as i64,
                    (p.z / voxel_size).floor() as i64,
                ];
                let entry = map
                    .entry(key)
                    .or_insert_with(|| (0.0, vec![0.0; channels]));
                entry.0 += w;
                for (acc, f) in entry.1.iter_mut().zip(cloud.feature(idx)) {
                    *acc += w * f;
                }
            }
            map
        })
        .collect();

    let mut merged = CellAccumulator::new();
    for map in partials {
        for (key, (w, feat)) in map {
            match merged.entry(key) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert((w, feat));
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let acc = e.get_mut();
                    acc.0 += w;
                    for (a, f) in acc.1.iter_mut().zip(&feat) {
                        *a += f;
                    }
                }
            }
        }
    }

    let entries = merged
        .into_iter()
        .map(|(key, (weight, mut feature))| {
            for f in &mut feature {
                *f /= weight;
            }
            (key, VoxelData { weight, feature })
        })
        .collect();
    Ok(SparseFeatureVoxels {
        voxel_size,
        channels,
        entries,
    })
}
