//! Deliberately naive reference implementations used only by test suites.
//!
//! Everything here is written as straight loops with its own arithmetic —
//! exhaustive nearest-voxel scans, hand-rolled pinhole rays, scalar
//! accumulation — independent of the optimized paths in `rayvote`, so the
//! two can be checked against each other. Closed-form ray intersections
//! back the sphere-tracing depth oracle.

use nalgebra::{Point3, Vector3};
use rayvote::{
    CameraView, DaConfig, FeaturePointCloud, RaySource, RmaConfig, TsdfGrid, VolumeFeatures,
    VoteValue,
};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Exhaustive nearest-voxel-center scan over the whole grid.
pub fn naive_query_nearest(grid: &TsdfGrid, point: &Point3<f64>) -> f64 {
    let [w, h, d] = grid.dims();
    let half = grid.voxel_size() * 0.5;
    let lo = grid.origin() - Vector3::new(half, half, half);
    let hi = grid.origin()
        + Vector3::new(
            (w as f64 - 1.0) * grid.voxel_size() + half,
            (h as f64 - 1.0) * grid.voxel_size() + half,
            (d as f64 - 1.0) * grid.voxel_size() + half,
        );
    for a in 0..3 {
        if point[a] <= lo[a] || point[a] >= hi[a] {
            return grid.truncation();
        }
    }
    let mut best = f64::INFINITY;
    let mut best_value = grid.truncation();
    for k in 0..d {
        for j in 0..h {
            for i in 0..w {
                let center = grid.origin()
                    + Vector3::new(i as f64, j as f64, k as f64) * grid.voxel_size();
                let dist2 = (point - center).norm_squared();
                if dist2 < best {
                    best = dist2;
                    best_value = grid.values()[i + w * (j + h * k)];
                }
            }
        }
    }
    best_value
}

/// Pinhole ray through pixel center `(u, v)`, from first principles.
pub fn naive_pixel_ray(view: &CameraView, u: u32, v: u32) -> (Point3<f64>, Vector3<f64>) {
    let intr = &view.intrinsics;
    let dx = (u as f64 + 0.5 - intr.cx) / intr.fx;
    let dy = (v as f64 + 0.5 - intr.cy) / intr.fy;
    let dir_cam = Vector3::new(dx, dy, 1.0);
    let dir_world = view.pose.rotation * dir_cam;
    let origin = Point3::from(view.pose.translation);
    (origin, dir_world / dir_world.norm())
}

/// Scalar ray march: uniform samples on `(0, t_max]`, nearest-voxel TSDF,
/// opacity/transmittance/weight recurrences evaluated one by one.
#[derive(Clone, Debug)]
pub struct NaiveProfile {
    pub t: Vec<f64>,
    pub tsdf: Vec<f64>,
    pub alpha: Vec<f64>,
    pub transmittance: Vec<f64>,
    pub weight: Vec<f64>,
}

pub fn naive_march(
    grid: &TsdfGrid,
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    samples: usize,
    t_max: f64,
    sigmoid_scale: f64,
) -> NaiveProfile {
    let mut t = Vec::new();
    let mut tsdf = Vec::new();
    for i in 0..samples {
        let ti = t_max * (i as f64 + 1.0) / samples as f64;
        t.push(ti);
        tsdf.push(naive_query_nearest(grid, &(origin + direction * ti)));
    }
    let mut alpha = vec![0.0; samples];
    for i in 0..samples.saturating_sub(1) {
        let a = sigmoid(sigmoid_scale * tsdf[i]);
        let b = sigmoid(sigmoid_scale * tsdf[i + 1]);
        if a > 0.0 && a > b {
            alpha[i] = (a - b) / a;
        }
    }
    let mut transmittance = vec![0.0; samples];
    let mut weight = vec![0.0; samples];
    let mut acc = 1.0;
    for i in 0..samples {
        transmittance[i] = acc;
        weight[i] = acc * alpha[i];
        acc -= weight[i];
    }
    NaiveProfile {
        t,
        tsdf,
        alpha,
        transmittance,
        weight,
    }
}

/// Triple-loop ray marching aggregation (views, pixels, samples).
pub fn naive_rma(grid: &TsdfGrid, views: &[CameraView], cfg: &RmaConfig) -> FeaturePointCloud {
    let t_max = cfg.t_max.unwrap_or_else(|| naive_diagonal(grid));
    let channels = views[0].features.channels as usize;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut features = Vec::new();
    let mut provenance = Vec::new();
    for (vi, view) in views.iter().enumerate() {
        for v in 0..view.intrinsics.height {
            for u in 0..view.intrinsics.width {
                let (origin, direction) = naive_pixel_ray(view, u, v);
                let profile = naive_march(
                    grid,
                    &origin,
                    &direction,
                    cfg.samples_per_ray,
                    t_max,
                    cfg.sigmoid_scale,
                );
                for i in 0..cfg.samples_per_ray {
                    if profile.weight[i] > cfg.weight_threshold {
                        points.push(origin + direction * profile.t[i]);
                        weights.push(match cfg.vote_value {
                            VoteValue::Weight => profile.weight[i],
                            VoteValue::Opacity => profile.alpha[i],
                        });
                        features.extend_from_slice(view.features.pixel(u, v));
                        provenance.push(RaySource {
                            view: vi,
                            u,
                            v,
                            t: profile.t[i],
                        });
                    }
                }
            }
        }
    }
    FeaturePointCloud::from_parts(channels, points, weights, features, Some(provenance)).unwrap()
}

/// Exhaustive first-hitting-point: collect every sign change, take the
/// smallest index.
pub fn naive_first_hitting_point(tsdf: &[f64]) -> Option<usize> {
    let mut crossings = Vec::new();
    for i in 0..tsdf.len().saturating_sub(1) {
        if tsdf[i] * tsdf[i + 1] <= 0.0 {
            crossings.push(i);
        }
    }
    crossings.into_iter().min()
}

/// Triple-loop depth aggregation with the triangular window.
pub fn naive_da(grid: &TsdfGrid, views: &[CameraView], cfg: &DaConfig) -> FeaturePointCloud {
    let t_max = cfg.t_max.unwrap_or_else(|| naive_diagonal(grid));
    let channels = views[0].features.channels as usize;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut features = Vec::new();
    let mut provenance = Vec::new();
    for (vi, view) in views.iter().enumerate() {
        for v in 0..view.intrinsics.height {
            for u in 0..view.intrinsics.width {
                let (origin, direction) = naive_pixel_ray(view, u, v);
                let mut t = Vec::new();
                let mut tsdf = Vec::new();
                for i in 0..cfg.samples_per_ray {
                    let ti = t_max * (i as f64 + 1.0) / cfg.samples_per_ray as f64;
                    t.push(ti);
                    tsdf.push(naive_query_nearest(grid, &(origin + direction * ti)));
                }
                let Some(fhp) = naive_first_hitting_point(&tsdf) else {
                    continue;
                };
                // Raw triangular weights, then renormalize the survivors.
                let mut selected = Vec::new();
                let mut sum = 0.0;
                for j in (fhp as i64 - cfg.k as i64 + 1)..=(fhp as i64 + cfg.k as i64) {
                    if j < 0 || j as usize >= cfg.samples_per_ray {
                        continue;
                    }
                    let dist = (j as f64 - (fhp as f64 + 0.5)).abs();
                    let w = cfg.k as f64 - dist;
                    selected.push((j as usize, w));
                    sum += w;
                }
                for (j, w) in selected {
                    points.push(origin + direction * t[j]);
                    weights.push(w / sum);
                    features.extend_from_slice(view.features.pixel(u, v));
                    provenance.push(RaySource {
                        view: vi,
                        u,
                        v,
                        t: t[j],
                    });
                }
            }
        }
    }
    FeaturePointCloud::from_parts(channels, points, weights, features, Some(provenance)).unwrap()
}

/// Triple-loop unprojection with average pooling, using its own projection
/// arithmetic.
pub fn naive_va(
    views: &[CameraView],
    dims: [usize; 3],
    origin: Point3<f64>,
    voxel_size: f64,
) -> (Vec<f64>, Vec<u32>) {
    let channels = views[0].features.channels as usize;
    let [w, h, d] = dims;
    let mut features = vec![0.0; w * h * d * channels];
    let mut counts = vec![0u32; w * h * d];
    for k in 0..d {
        for j in 0..h {
            for i in 0..w {
                let center = origin + Vector3::new(i as f64, j as f64, k as f64) * voxel_size;
                let flat = i + w * (j + h * k);
                for view in views {
                    let r = view.pose.rotation;
                    let q = r.transpose() * (center.coords - view.pose.translation);
                    if q.z <= 1e-6 {
                        continue;
                    }
                    let intr = &view.intrinsics;
                    let u = intr.fx * q.x / q.z + intr.cx - 0.5;
                    let v = intr.fy * q.y / q.z + intr.cy - 0.5;
                    if u < 0.0 || u >= intr.width as f64 || v < 0.0 || v >= intr.height as f64 {
                        continue;
                    }
                    let px = (u.round() as u32).min(intr.width - 1);
                    let py = (v.round() as u32).min(intr.height - 1);
                    let pixel = view.features.pixel(px, py);
                    for c in 0..channels {
                        features[flat * channels + c] += pixel[c];
                    }
                    counts[flat] += 1;
                }
                if counts[flat] > 0 {
                    for c in 0..channels {
                        features[flat * channels + c] /= counts[flat] as f64;
                    }
                }
            }
        }
    }
    (features, counts)
}

fn naive_diagonal(grid: &TsdfGrid) -> f64 {
    let [w, h, d] = grid.dims();
    let v = grid.voxel_size();
    ((w as f64 * v).powi(2) + (h as f64 * v).powi(2) + (d as f64 * v).powi(2)).sqrt()
}

/// First positive intersection of a ray with the plane `n . p = offset`.
pub fn ray_plane(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    normal: &Vector3<f64>,
    offset: f64,
) -> Option<f64> {
    let denom = normal.dot(direction);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (offset - normal.dot(&origin.coords)) / denom;
    (t > 0.0).then_some(t)
}

/// Smallest positive intersection of a ray with a sphere surface.
pub fn ray_sphere(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    center: &Point3<f64>,
    radius: f64,
) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(direction);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    [-b - sqrt_disc, -b + sqrt_disc].into_iter().find(|&t| t > 0.0)
}

/// Slab-method entry distance of a ray into an axis-aligned box.
pub fn ray_box(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    min: &Point3<f64>,
    max: &Point3<f64>,
) -> Option<f64> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for a in 0..3 {
        if direction[a].abs() < 1e-15 {
            if origin[a] < min[a] || origin[a] > max[a] {
                return None;
            }
            continue;
        }
        let t0 = (min[a] - origin[a]) / direction[a];
        let t1 = (max[a] - origin[a]) / direction[a];
        t_enter = t_enter.max(t0.min(t1));
        t_exit = t_exit.min(t0.max(t1));
    }
    if t_enter > t_exit || t_exit <= 0.0 {
        return None;
    }
    Some(t_enter.max(0.0))
}

/// Deterministic random test cases, self-contained so suites across crates
/// generate identical inputs without sharing an RNG dependency.
pub mod cases {
    use super::*;
    use rayvote::{bake, AnalyticScene, CameraIntrinsics, CameraPose, CameraView, FeatureMap};

    /// SplitMix64; good enough spread for test-case generation.
    pub struct Mix(pub u64);

    impl Mix {
        pub fn next_u64(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^ (z >> 31)
        }

        pub fn unit(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
        }

        pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
            lo + self.unit() * (hi - lo)
        }

        pub fn int(&mut self, lo: u64, hi: u64) -> u64 {
            lo + self.next_u64() % (hi - lo + 1)
        }
    }

    /// A small baked grid plus one or two posed views with feature maps,
    /// sized for exhaustive naive verification.
    pub fn scene_case(seed: u64) -> (rayvote::TsdfGrid, Vec<CameraView>) {
        let mut rng = Mix(seed.wrapping_mul(2654435761).wrapping_add(1));
        let scene = AnalyticScene::Union(vec![
            AnalyticScene::sphere(
                Point3::new(
                    rng.range(-0.1, 0.1),
                    rng.range(-0.1, 0.1),
                    rng.range(0.1, 0.25),
                ),
                rng.range(0.05, 0.12),
            ),
            AnalyticScene::half_space(
                Vector3::new(rng.range(-0.2, 0.2), rng.range(-0.2, 0.2), -1.0),
                Point3::new(0.0, 0.0, rng.range(0.2, 0.3)),
            ),
        ]);
        let voxel = rng.range(0.03, 0.06);
        let grid = bake(
            &scene,
            [8, 8, 8],
            Point3::new(-3.5 * voxel, -3.5 * voxel, 0.0),
            voxel,
            3.0 * voxel,
        )
        .unwrap();

        let mut views = Vec::new();
        for vi in 0..rng.int(1, 2) {
            let w = rng.int(4, 16) as u32;
            let h = rng.int(4, 16) as u32;
            let intr = CameraIntrinsics::new(
                w as f64 * rng.range(0.8, 1.4),
                w as f64 * rng.range(0.8, 1.4),
                w as f64 / 2.0,
                h as f64 / 2.0,
                w,
                h,
            )
            .unwrap();
            let (rx, ry, rz) = (
                rng.range(-0.1, 0.1),
                rng.range(-0.1, 0.1),
                rng.range(-0.1, 0.1),
            );
            let rotation = nalgebra::Rotation3::from_euler_angles(rx, ry, rz).into_inner();
            let pose = CameraPose::new(
                rotation,
                Vector3::new(
                    rng.range(-0.05, 0.05),
                    rng.range(-0.05, 0.05),
                    -0.2 - 0.05 * vi as f64,
                ),
            )
            .unwrap();
            let data = (0..(w * h * 2)).map(|i| (i as f64).sin()).collect();
            let map = FeatureMap::new(h, w, 2, data).unwrap();
            views.push(CameraView::new(intr, pose, map).unwrap());
        }
        (grid, views)
    }
}

/// Asserts two clouds match in order, coordinates, weights, and features
/// within `tol`.
pub fn assert_clouds_close(a: &FeaturePointCloud, b: &FeaturePointCloud, tol: f64) {
    assert_eq!(a.len(), b.len(), "point counts differ");
    assert_eq!(a.channels(), b.channels(), "channel counts differ");
    for i in 0..a.len() {
        let (pa, pb) = (a.points()[i], b.points()[i]);
        assert!(
            (pa - pb).norm() <= tol,
            "point {i} differs: {pa:?} vs {pb:?}"
        );
        assert!(
            (a.weights()[i] - b.weights()[i]).abs() <= tol,
            "weight {i} differs: {} vs {}",
            a.weights()[i],
            b.weights()[i]
        );
        for (fa, fb) in a.feature(i).iter().zip(b.feature(i)) {
            assert!((fa - fb).abs() <= tol, "feature {i} differs");
        }
    }
}

/// Asserts a volume matches the naive (features, counts) pair within `tol`.
pub fn assert_volume_close(vol: &VolumeFeatures, features: &[f64], counts: &[u32], tol: f64) {
    assert_eq!(vol.features().len(), features.len());
    assert_eq!(vol.view_counts(), counts);
    for (a, b) in vol.features().iter().zip(features) {
        assert!((a - b).abs() <= tol, "volume feature differs: {a} vs {b}");
    }
}
