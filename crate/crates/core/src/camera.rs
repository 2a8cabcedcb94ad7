//! Pinhole camera model, ray generation, and world/image projection.
//!
//! Conventions used throughout the crate:
//!
//! * Poses are camera-to-world: `rotation` maps camera-frame vectors into the
//!   world frame and `translation` is the camera center in world coordinates.
//!   The camera looks along its local +z axis, +x is right, +y is down.
//! * Continuous pixel coordinate `u` places the center of integer pixel `u`
//!   at `u`, i.e. the physical ray through pixel `(u, v)` passes through
//!   `(u + 0.5, v + 0.5)` in sensor units. [`project`] returns coordinates in
//!   the same convention, which makes the project/ray round trip exact.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum camera-frame depth considered in front of the camera.
pub const MIN_DEPTH: f64 = 1e-6;

/// Tolerance on `R^T R - I` for a rotation to count as orthonormal.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// Pinhole intrinsics over a `width` x `height` feature map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::domain(format!(
                "focal lengths must be positive and finite, got fx={fx}, fy={fy}"
            )));
        }
        if width < 1 || height < 1 {
            return Err(Error::domain(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::domain(format!(
                "principal point ({cx}, {cy}) outside [0,{width})x[0,{height})"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }
}

/// Camera-to-world rigid pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    /// Builds a pose, rejecting rotations that are not orthonormal with
    /// determinant +1 within [`ROTATION_TOLERANCE`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let err = rotation_error(&rotation);
        if err > ROTATION_TOLERANCE {
            return Err(Error::domain(format!(
                "rotation is not orthonormal: max |R^T R - I| = {err:.3e}"
            )));
        }
        if rotation.determinant() <= 0.0 {
            return Err(Error::domain("rotation determinant must be +1"));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("translation must be finite"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Pose at `eye` looking toward `target`, with `up` fixing the roll.
    ///
    /// The camera +y axis points against `up` (image rows grow downward).
    pub fn look_at(eye: Point3<f64>, target: Point3<f64>, up: Vector3<f64>) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(Error::domain("look_at eye and target coincide"));
        }
        let z = forward.normalize();
        let x = z.cross(&up);
        if x.norm() < 1e-9 {
            return Err(Error::domain("look_at direction is parallel to up"));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        Self::new(Matrix3::from_columns(&[x, y, z]), eye.coords)
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.translation)
    }

    pub fn camera_to_world(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn world_to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p.coords - self.translation)
    }
}

pub(crate) fn rotation_error(rotation: &Matrix3<f64>) -> f64 {
    let gram = rotation.transpose() * rotation;
    let mut err: f64 = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            let target = if r == c { 1.0 } else { 0.0 };
            err = err.max((gram[(r, c)] - target).abs());
        }
    }
    err
}

/// How feature maps are sampled at continuous pixel coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    #[default]
    Nearest,
    Bilinear,
}

/// Dense per-pixel feature image, row-major with channels fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: u32, width: u32, channels: u32, data: Vec<f64>) -> Result<Self> {
        let expect = height as usize * width as usize * channels as usize;
        if data.len() != expect {
            return Err(Error::domain(format!(
                "feature data length {} does not match {height}x{width}x{channels} = {expect}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "feature data contains non-finite value at flat index {pos}"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Map filled with a constant value in every channel.
    pub fn constant(height: u32, width: u32, channels: u32, value: f64) -> Result<Self> {
        let len = height as usize * width as usize * channels as usize;
        Self::new(height, width, channels, vec![value; len])
    }

    /// Feature vector of the integer pixel `(x, y)`.
    pub fn pixel(&self, x: u32, y: u32) -> &[f64] {
        let c = self.channels as usize;
        let idx = (y as usize * self.width as usize + x as usize) * c;
        &self.data[idx..idx + c]
    }

    /// Samples the map at continuous pixel coordinates.
    ///
    /// Returns `None` when `(u, v)` falls outside `[0, width) x [0, height)`
    /// for nearest sampling, or outside the interpolable interior
    /// `[0, width-1] x [0, height-1]` for bilinear sampling.
    pub fn sample(&self, u: f64, v: f64, mode: SampleMode) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.channels as usize];
        self.sample_into(u, v, mode, &mut out).then_some(out)
    }

    /// Allocation-free variant of [`FeatureMap::sample`]; returns whether
    /// `(u, v)` was in bounds and `out` was filled.
    pub fn sample_into(&self, u: f64, v: f64, mode: SampleMode, out: &mut [f64]) -> bool {
        assert_eq!(out.len(), self.channels as usize);
        if !u.is_finite() || !v.is_finite() {
            return false;
        }
        let (w, h) = (self.width as f64, self.height as f64);
        match mode {
            SampleMode::Nearest => {
                if !(0.0..w).contains(&u) || !(0.0..h).contains(&v) {
                    return false;
                }
                let x = (u.round() as u32).min(self.width - 1);
                let y = (v.round() as u32).min(self.height - 1);
                out.copy_from_slice(self.pixel(x, y));
                true
            }
            SampleMode::Bilinear => {
                if !(0.0..=w - 1.0).contains(&u) || !(0.0..=h - 1.0).contains(&v) {
                    return false;
                }
                let x0 = (u.floor() as u32).min(self.width - 1);
                let y0 = (v.floor() as u32).min(self.height - 1);
                let x1 = (x0 + 1).min(self.width - 1);
                let y1 = (y0 + 1).min(self.height - 1);
                let fu = u - x0 as f64;
                let fv = v - y0 as f64;
                let (p00, p10) = (self.pixel(x0, y0), self.pixel(x1, y0));
                let (p01, p11) = (self.pixel(x0, y1), self.pixel(x1, y1));
                for c in 0..out.len() {
                    let top = p00[c] * (1.0 - fu) + p10[c] * fu;
                    let bottom = p01[c] * (1.0 - fu) + p11[c] * fu;
                    out[c] = top * (1.0 - fv) + bottom * fv;
                }
                true
            }
        }
    }
}

/// One posed input view: intrinsics, camera-to-world pose, and the 2D feature
/// map attached to it.
#[derive(Clone, Debug)]
pub struct CameraView {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
    pub features: FeatureMap,
}

impl CameraView {
    pub fn new(intrinsics: CameraIntrinsics, pose: CameraPose, features: FeatureMap) -> Result<Self> {
        if features.height != intrinsics.height || features.width != intrinsics.width {
            return Err(Error::domain(format!(
                "feature map {}x{} does not match intrinsics {}x{}",
                features.width, features.height, intrinsics.width, intrinsics.height
            )));
        }
        Ok(Self {
            intrinsics,
            pose,
            features,
        })
    }
}

/// World-frame ray with unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Point3<f64>, direction: Vector3<f64>) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::domain("ray direction must be nonzero and finite"));
        }
        Ok(Self {
            origin,
            direction: direction / norm,
        })
    }

    /// Point at parameter `t` along the ray.
    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.direction * t
    }
}

/// World-frame ray through the center of pixel `(u, v)`.
///
/// `u` and `v` are continuous pixel coordinates; passing integers targets
/// exact pixel centers. Out-of-range pixels are a domain error.
pub fn pixel_ray(view: &CameraView, u: f64, v: f64) -> Result<Ray> {
    let intr = &view.intrinsics;
    if !(0.0..intr.width as f64).contains(&u) || !(0.0..intr.height as f64).contains(&v) {
        return Err(Error::domain(format!(
            "pixel ({u}, {v}) outside [0,{})x[0,{})",
            intr.width, intr.height
        )));
    }
    let dir_cam = Vector3::new(
        (u + 0.5 - intr.cx) / intr.fx,
        (v + 0.5 - intr.cy) / intr.fy,
        1.0,
    );
    Ray::new(view.pose.center(), view.pose.camera_to_world(&dir_cam))
}

/// Perspective projection of a world point into a view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedPixel {
    /// Continuous pixel column in the [`pixel_ray`] convention.
    pub u: f64,
    /// Continuous pixel row in the [`pixel_ray`] convention.
    pub v: f64,
    /// Camera-frame z of the point, in meters.
    pub depth: f64,
}

/// Projects a world point; `None` means the point is behind the camera
/// (camera-frame depth below [`MIN_DEPTH`]).
pub fn project(view: &CameraView, point: &Point3<f64>) -> Option<ProjectedPixel> {
    let q = view.pose.world_to_camera(point);
    if q.z <= MIN_DEPTH {
        return None;
    }
    let intr = &view.intrinsics;
    Some(ProjectedPixel {
        u: intr.fx * q.x / q.z + intr.cx - 0.5,
        v: intr.fy * q.y / q.z + intr.cy - 0.5,
        depth: q.z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_view(fx: f64, cx: f64, width: u32, pose: CameraPose) -> CameraView {
        let intr = CameraIntrinsics::new(fx, fx, cx, cx, width, width).unwrap();
        let map = FeatureMap::constant(width, width, 1, 0.0).unwrap();
        CameraView::new(intr, pose, map).unwrap()
    }

    #[test]
    fn principal_pixel_ray_is_optical_axis() {
        let view = test_view(100.0, 50.0, 100, CameraPose::identity());
        let ray = pixel_ray(&view, 49.5, 49.5).unwrap();
        assert_relative_eq!(ray.direction, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_eq!(ray.origin, Point3::origin());
    }

    #[test]
    fn offset_pixel_ray_matches_hand_computation() {
        // (u + 0.5 - cx) / fx = 1 at u = 149.5, so the direction is (1,0,1)
        // normalized.
        let intr = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 200, 100).unwrap();
        let map = FeatureMap::constant(100, 200, 1, 0.0).unwrap();
        let view = CameraView::new(intr, CameraPose::identity(), map).unwrap();
        let ray = pixel_ray(&view, 149.5, 49.5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(ray.direction, Vector3::new(s, 0.0, s), epsilon = 1e-9);
    }

    #[test]
    fn rotated_pose_rotates_axis_ray() {
        // 180 degrees about +y flips the optical axis to -z.
        let rot = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        let pose = CameraPose::new(rot, Vector3::zeros()).unwrap();
        let view = test_view(100.0, 50.0, 100, pose);
        let ray = pixel_ray(&view, 49.5, 49.5).unwrap();
        assert_relative_eq!(ray.direction, Vector3::new(0.0, 0.0, -1.0), epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_pixel_is_domain_error() {
        let view = test_view(100.0, 50.0, 100, CameraPose::identity());
        assert!(pixel_ray(&view, -0.5, 10.0).is_err());
        assert!(pixel_ray(&view, 10.0, 100.0).is_err());
    }

    #[test]
    fn project_on_axis_point() {
        let view = test_view(100.0, 50.0, 100, CameraPose::identity());
        let p = project(&view, &Point3::new(0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(p.u, 49.5, epsilon = 1e-12);
        assert_relative_eq!(p.v, 49.5, epsilon = 1e-12);
        assert_relative_eq!(p.depth, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn project_behind_camera_is_none() {
        let view = test_view(100.0, 50.0, 100, CameraPose::identity());
        assert!(project(&view, &Point3::new(0.0, 0.0, -1.0)).is_none());
        assert!(project(&view, &Point3::new(0.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn project_ray_round_trip() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.8, 1.2);
        let pose = CameraPose::new(rot.into_inner(), Vector3::new(1.0, -2.0, 0.5)).unwrap();
        let view = test_view(87.0, 31.25, 64, pose);
        for (u, v, t) in [(0.0, 0.0, 0.5), (17.25, 40.0, 3.0), (63.5, 12.0, 42.0)] {
            let ray = pixel_ray(&view, u, v).unwrap();
            let p = project(&view, &ray.at(t)).unwrap();
            assert_relative_eq!(p.u, u, epsilon = 1e-9);
            assert_relative_eq!(p.v, v, epsilon = 1e-9);
        }
    }

    #[test]
    fn nearest_sampling_constant_map() {
        let map = FeatureMap::constant(4, 4, 3, 7.5).unwrap();
        for mode in [SampleMode::Nearest, SampleMode::Bilinear] {
            assert_eq!(map.sample(1.3, 2.7, mode).unwrap(), vec![7.5; 3]);
        }
    }

    #[test]
    fn bilinear_center_of_two_by_two() {
        let map = FeatureMap::new(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let got = map.sample(0.5, 0.5, SampleMode::Bilinear).unwrap();
        assert_relative_eq!(got[0], 1.5, epsilon = 1e-12);
        // Pixel centers reproduce the stored corner values exactly.
        assert_eq!(map.sample(1.0, 1.0, SampleMode::Bilinear).unwrap()[0], 3.0);
        assert_eq!(map.sample(0.0, 0.0, SampleMode::Nearest).unwrap()[0], 0.0);
    }

    #[test]
    fn out_of_bounds_sampling_is_none() {
        let map = FeatureMap::constant(2, 2, 1, 1.0).unwrap();
        assert!(map.sample(-1.0, 0.0, SampleMode::Nearest).is_none());
        assert!(map.sample(0.0, 2.0, SampleMode::Nearest).is_none());
        assert!(map.sample(1.5, 0.5, SampleMode::Bilinear).is_none());
        // Nearest accepts the half-open pixel range that bilinear rejects.
        assert!(map.sample(1.5, 0.5, SampleMode::Nearest).is_some());
    }

    #[test]
    fn invalid_constructions_are_rejected() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 2, 2).is_err());
        assert!(CameraIntrinsics::new(10.0, 10.0, 2.0, 0.0, 2, 2).is_err());
        assert!(FeatureMap::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(FeatureMap::new(1, 1, 1, vec![f64::NAN]).is_err());
        let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(CameraPose::new(skew, Vector3::zeros()).is_err());
    }
}
