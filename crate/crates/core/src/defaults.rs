//! Shipped default parameters, kept in one place so the configuration
//! snapshot test can pin them.

/// Retention threshold on per-sample ray weights.
pub const WEIGHT_THRESHOLD: f64 = 0.05;

/// Number of sample points marched along each pixel ray.
pub const SAMPLES_PER_RAY: usize = 300;

/// Sharpness applied to TSDF values before the logistic transform, in 1/m.
///
/// Metric signed distances fed to a unit sigmoid would make opacities vanish,
/// so the TSDF is scaled before the transform. 25/m puts three sigmoid units
/// across the default truncation band.
pub const SIGMOID_SCALE: f64 = 25.0;

/// Edge length of the aggregation voxel grid, in meters.
pub const AGGREGATION_VOXEL_SIZE: f64 = 0.04;

/// Edge length used when merging a feature point cloud into sparse voxels,
/// in meters.
pub const MERGE_VOXEL_SIZE: f64 = 0.01;

/// Weight of the reconstruction term in the combined loss.
pub const RECON_LOSS_WEIGHT: f64 = 0.5;

/// TSDF truncation distance as a multiple of the voxel size.
pub const TRUNCATION_FACTOR: f64 = 3.0;

/// Default truncation distance, in meters.
pub const TRUNCATION: f64 = TRUNCATION_FACTOR * AGGREGATION_VOXEL_SIZE;

/// Near-surface band as a multiple of the voxel size, used by evaluation
/// metrics.
pub const SURFACE_BAND_FACTOR: f64 = 3.0;

/// Occlusion-leakage margin as a multiple of the truncation distance.
pub const LEAKAGE_MARGIN_FACTOR: f64 = 2.0;
