//! Ray marching against a TSDF grid.
//!
//! For samples `t_0 < t_1 < ... < t_{n-1}` along a ray, with `S_i` the TSDF
//! value at sample `i` and `phi` the logistic sigmoid applied to the scaled
//! value `scale * S_i`:
//!
//! * opacity      `alpha_i = max((phi_i - phi_{i+1}) / phi_i, 0)`, last = 0
//! * transmittance `T_0 = 1`, `T_{i+1} = T_i * (1 - alpha_i)`
//! * weight       `W_i = T_i * alpha_i`, stored as `T_i - T_{i+1}`
//!
//! Storing the weight as the transmittance difference (equal to
//! `T_i * alpha_i` up to one rounding) keeps the telescoping identity
//! `W_i = T_i - T_{i+1}` bit-exact, so the weights sum to
//! `1 - residual_transmittance` up to accumulation error only.

use crate::camera::Ray;
use crate::error::Result;
use crate::tsdf::TsdfGrid;

use super::rma::RmaConfig;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Samples and marching quantities along one pixel ray.
#[derive(Clone, Debug, PartialEq)]
pub struct RayProfile {
    /// Strictly increasing sample distances, in meters.
    pub t: Vec<f64>,
    /// TSDF value at each sample.
    pub tsdf: Vec<f64>,
    /// Interval opacity at each sample; the last entry is defined 0.
    pub alpha: Vec<f64>,
    /// Transmittance reaching each sample; starts at 1, nonincreasing.
    pub transmittance: Vec<f64>,
    /// Per-sample vote weight `T_i * alpha_i`, stored as `T_i - T_{i+1}`.
    pub weight: Vec<f64>,
}

impl RayProfile {
    /// Computes opacities, transmittances, and weights from raw samples.
    pub fn from_samples(t: Vec<f64>, tsdf: Vec<f64>, sigmoid_scale: f64) -> Self {
        assert_eq!(t.len(), tsdf.len());
        assert!(!t.is_empty());
        let n = t.len();
        let mut alpha = vec![0.0; n];
        for i in 0..n - 1 {
            let phi_i = sigmoid(sigmoid_scale * tsdf[i]);
            let phi_next = sigmoid(sigmoid_scale * tsdf[i + 1]);
            // phi is strictly positive; the guard only covers f64 underflow.
            alpha[i] = if phi_i > 0.0 {
                ((phi_i - phi_next) / phi_i).max(0.0)
            } else {
                0.0
            };
        }
        let (transmittance, weight) = accumulate(&alpha);
        Self {
            t,
            tsdf,
            alpha,
            transmittance,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Transmittance remaining after the last sample.
    ///
    /// The final opacity is zero by definition, so this equals the last
    /// transmittance entry.
    pub fn residual_transmittance(&self) -> f64 {
        *self.transmittance.last().expect("nonempty profile")
    }

    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Index of the first sign change of consecutive TSDF samples, i.e. the
    /// smallest `i` with `tsdf[i] * tsdf[i+1] <= 0`; `None` when the ray
    /// never crosses the surface.
    pub fn first_hitting_point(&self) -> Option<usize> {
        first_hitting_point(&self.tsdf)
    }
}

/// Transmittance/weight accumulation from opacities; see the module docs for
/// why the weight is stored as the transmittance difference.
pub(crate) fn accumulate(alpha: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut transmittance = Vec::with_capacity(alpha.len());
    let mut weight = Vec::with_capacity(alpha.len());
    let mut t_acc = 1.0;
    for &a in alpha {
        transmittance.push(t_acc);
        let t_next = t_acc * (1.0 - a);
        weight.push(t_acc - t_next);
        t_acc = t_next;
    }
    (transmittance, weight)
}

/// Smallest index whose TSDF sample and its successor differ in sign
/// (a zero value counts as a crossing). `None` without a crossing or with
/// fewer than two samples.
pub fn first_hitting_point(tsdf: &[f64]) -> Option<usize> {
    tsdf.windows(2).position(|pair| pair[0] * pair[1] <= 0.0)
}

/// Uniform sample distances on `(0, t_max]` and their TSDF values.
pub(crate) fn sample_ray(
    grid: &TsdfGrid,
    ray: &Ray,
    samples: usize,
    t_max: f64,
) -> (Vec<f64>, Vec<f64>) {
    let step = t_max / samples as f64;
    let mut t = Vec::with_capacity(samples);
    let mut tsdf = Vec::with_capacity(samples);
    for i in 0..samples {
        let ti = step * (i + 1) as f64;
        t.push(ti);
        tsdf.push(grid.query_nearest(&ray.at(ti)));
    }
    (t, tsdf)
}

/// Marches one ray through the grid under `cfg`, producing the full profile.
pub fn march_ray(grid: &TsdfGrid, ray: &Ray, cfg: &RmaConfig) -> Result<RayProfile> {
    cfg.validate()?;
    let t_max = cfg.resolved_t_max(grid);
    let (t, tsdf) = sample_ray(grid, ray, cfg.samples_per_ray, t_max);
    Ok(RayProfile::from_samples(t, tsdf, cfg.sigmoid_scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AnalyticScene;
    use crate::tsdf::bake;
    use nalgebra::{Point3, Vector3};

    #[test]
    fn constant_tsdf_gives_zero_weight() {
        let scene = AnalyticScene::sphere(Point3::new(100.0, 0.0, 0.0), 1.0);
        let grid = bake(&scene, [8, 8, 8], Point3::origin(), 0.04, 0.12).unwrap();
        let ray = Ray::new(Point3::new(-0.1, 0.14, 0.14), Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let cfg = RmaConfig {
            samples_per_ray: 32,
            t_max: Some(0.5),
            ..RmaConfig::default()
        };
        let profile = march_ray(&grid, &ray, &cfg).unwrap();
        assert!(profile.alpha.iter().all(|&a| a == 0.0));
        assert!(profile.weight.iter().all(|&w| w == 0.0));
        assert!(profile.transmittance.iter().all(|&t| t == 1.0));
        assert_eq!(profile.residual_transmittance(), 1.0);
    }

    #[test]
    fn hand_opacity_from_sigmoid_pair() {
        // sigmoid(0) = 0.5 and sigmoid(ln(1/3)) = 0.25, so the interval
        // opacity is (0.5 - 0.25) / 0.5 = 0.5.
        let t = vec![1.0, 2.0];
        let tsdf = vec![0.0, (1.0f64 / 3.0).ln()];
        let profile = RayProfile::from_samples(t, tsdf, 1.0);
        assert!((profile.alpha[0] - 0.5).abs() < 1e-12);
        assert_eq!(profile.alpha[1], 0.0);
    }

    #[test]
    fn hand_telescoping_sequence() {
        let (transmittance, weight) = accumulate(&[0.5, 0.5, 0.0]);
        assert_eq!(transmittance, vec![1.0, 0.5, 0.25]);
        assert_eq!(weight, vec![0.5, 0.25, 0.0]);
        let total: f64 = weight.iter().sum();
        assert!((total - (1.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn weights_equal_transmittance_differences_exactly() {
        let alphas = [0.113, 0.0, 0.9, 0.3333, 0.0001, 1.0, 0.2];
        let (t, w) = accumulate(&alphas);
        for i in 0..alphas.len() - 1 {
            assert_eq!(w[i], t[i] - t[i + 1]);
        }
    }

    #[test]
    fn first_hitting_point_examples() {
        assert_eq!(first_hitting_point(&[0.3, 0.1, -0.2]), Some(1));
        assert_eq!(first_hitting_point(&[0.3, 0.1, 0.05]), None);
        assert_eq!(first_hitting_point(&[0.0, 0.1]), Some(0));
        assert_eq!(first_hitting_point(&[0.1]), None);
        assert_eq!(first_hitting_point(&[-0.1, -0.2, 0.3]), Some(1));
    }

    #[test]
    fn samples_are_uniform_on_half_open_range() {
        let scene = AnalyticScene::sphere(Point3::new(100.0, 0.0, 0.0), 1.0);
        let grid = bake(&scene, [4, 4, 4], Point3::origin(), 0.04, 0.12).unwrap();
        let ray = Ray::new(Point3::origin(), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let (t, _) = sample_ray(&grid, &ray, 4, 2.0);
        assert_eq!(t, vec![0.5, 1.0, 1.5, 2.0]);
    }
}
