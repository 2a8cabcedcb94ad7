//! Truncated signed distance grids: baking from analytic scenes and point
//! queries.
//!
//! A grid stores one clamped signed distance per voxel in x-fastest order
//! (`x + W*(y + H*z)`). `origin` is the world position of the *center* of
//! voxel `(0, 0, 0)`, so index arithmetic at voxel centers is exact. Queries
//! outside the grid's bounding box return `+truncation`: rays accumulate no
//! opacity outside the reconstructed volume.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::AnalyticScene;

#[derive(Clone, Debug, PartialEq)]
pub struct TsdfGrid {
    dims: [usize; 3],
    origin: Point3<f64>,
    voxel_size: f64,
    truncation: f64,
    values: Vec<f64>,
}

impl TsdfGrid {
    pub fn new(
        dims: [usize; 3],
        origin: Point3<f64>,
        voxel_size: f64,
        truncation: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::domain(format!("grid dims {dims:?} must all be >= 1")));
        }
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(Error::domain(format!("voxel_size {voxel_size} must be positive")));
        }
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::domain(format!("truncation {truncation} must be positive")));
        }
        if !origin.coords.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("grid origin must be finite"));
        }
        let expect = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::domain("grid dims overflow"))?;
        if values.len() != expect {
            return Err(Error::domain(format!(
                "value count {} does not match dims {dims:?} = {expect}",
                values.len()
            )));
        }
        if let Some(pos) = values
            .iter()
            .position(|v| !v.is_finite() || v.abs() > truncation)
        {
            return Err(Error::domain(format!(
                "value {} at flat index {pos} outside [-{truncation}, {truncation}]",
                values[pos]
            )));
        }
        Ok(Self {
            dims,
            origin,
            voxel_size,
            truncation,
            values,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Point3<f64> {
        self.origin
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.linear_index(i, j, k)]
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.voxel_size
    }

    /// Lower corner of the grid's bounding box (half a voxel beyond the
    /// first voxel center).
    pub fn min_corner(&self) -> Point3<f64> {
        self.origin - Vector3::repeat(self.voxel_size * 0.5)
    }

    /// Upper corner of the grid's bounding box.
    pub fn max_corner(&self) -> Point3<f64> {
        self.origin
            + Vector3::new(
                self.dims[0] as f64 - 0.5,
                self.dims[1] as f64 - 0.5,
                self.dims[2] as f64 - 0.5,
            ) * self.voxel_size
    }

    /// Diagonal length of the bounding box in meters.
    pub fn diagonal(&self) -> f64 {
        (self.max_corner() - self.min_corner()).norm()
    }

    /// Index of the voxel whose center is nearest to `point`, or `None`
    /// outside the bounding box.
    pub fn nearest_index(&self, point: &Point3<f64>) -> Option<[usize; 3]> {
        let rel = (point - self.origin) / self.voxel_size;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let r = rel[a].round();
            if !(r >= 0.0 && r <= self.dims[a] as f64 - 1.0) {
                return None;
            }
            idx[a] = r as usize;
        }
        Some(idx)
    }

    /// TSDF value of the voxel nearest to `point`; `+truncation` outside the
    /// grid.
    pub fn query_nearest(&self, point: &Point3<f64>) -> f64 {
        match self.nearest_index(point) {
            Some([i, j, k]) => self.value(i, j, k),
            None => self.truncation,
        }
    }

    /// Trilinear interpolation over the eight surrounding voxel centers;
    /// `+truncation` outside the center lattice. Offered for smoothness
    /// experiments; aggregation uses [`TsdfGrid::query_nearest`].
    pub fn query_trilinear(&self, point: &Point3<f64>) -> f64 {
        let rel = (point - self.origin) / self.voxel_size;
        for a in 0..3 {
            if !(rel[a] >= 0.0 && rel[a] <= self.dims[a] as f64 - 1.0) {
                return self.truncation;
            }
        }
        let base = [
            (rel.x.floor() as usize).min(self.dims[0] - 1),
            (rel.y.floor() as usize).min(self.dims[1] - 1),
            (rel.z.floor() as usize).min(self.dims[2] - 1),
        ];
        let frac = [
            rel.x - base[0] as f64,
            rel.y - base[1] as f64,
            rel.z - base[2] as f64,
        ];
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut weight = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    idx[a] = (base[a] + 1).min(self.dims[a] - 1);
                    weight *= frac[a];
                } else {
                    idx[a] = base[a];
                    weight *= 1.0 - frac[a];
                }
            }
            acc += weight * self.value(idx[0], idx[1], idx[2]);
        }
        acc
    }
}

/// Samples `scene` at every voxel center and clamps to the truncation band.
pub fn bake(
    scene: &AnalyticScene,
    dims: [usize; 3],
    origin: Point3<f64>,
    voxel_size: f64,
    truncation: f64,
) -> Result<TsdfGrid> {
    if dims.contains(&0) {
        return Err(Error::domain(format!("grid dims {dims:?} must all be >= 1")));
    }
    if voxel_size.is_nan() || voxel_size <= 0.0 {
        return Err(Error::domain(format!("voxel_size {voxel_size} must be positive")));
    }
    if truncation.is_nan() || truncation <= 0.0 {
        return Err(Error::domain(format!("truncation {truncation} must be positive")));
    }
    let [w, h, d] = dims;
    let values: Vec<f64> = (0..d)
        .into_par_iter()
        .flat_map_iter(|k| {
            (0..h).flat_map(move |j| {
                (0..w).map(move |i| {
                    let center = origin
                        + Vector3::new(i as f64, j as f64, k as f64) * voxel_size;
                    scene.distance(&center).clamp(-truncation, truncation)
                })
            })
        })
        .collect();
    TsdfGrid::new(dims, origin, voxel_size, truncation, values)
}
