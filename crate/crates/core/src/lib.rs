//! Occlusion-aware aggregation of multi-view image features into 3D point
//! clouds over truncated signed distance grids.
//!
//! The core operation marches every pixel ray through a TSDF, converts the
//! signed distances into per-sample opacities and transmittances, and votes
//! the pixel's feature to the samples whose weight survives a threshold —
//! so features land near the first visible surface instead of smearing
//! through occluded space. Two baselines ship alongside it: window voting
//! around the first TSDF sign change (`da`) and plain unprojection with
//! average pooling (`va`).
//!
//! Supporting machinery: analytic signed-distance scenes with a
//! sphere-tracing depth oracle, loss evaluators, geometric quality metrics,
//! bit-exact file formats, and synthetic scene presets.

pub mod aggregate;
pub mod camera;
pub mod cloud;
pub mod defaults;
mod error;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod scene;
pub mod synth;
pub mod tsdf;

pub use aggregate::{
    da_aggregate, first_hitting_point, march_ray, rma_aggregate, va_aggregate, volume_to_cloud,
    DaConfig, RayProfile, RmaConfig, VolumeFeatures, VoteValue,
};
pub use camera::{
    pixel_ray, project, CameraIntrinsics, CameraPose, CameraView, FeatureMap, ProjectedPixel, Ray,
    SampleMode,
};
pub use cloud::{voxelize, FeaturePointCloud, RaySource, SparseFeatureVoxels, VoxelData};
pub use error::{Error, Result};
pub use metrics::{
    compare_schemes, occlusion_leakage, surface_mass, weighted_surface_distance,
    AggregationReport, CompareConfig,
};
pub use scene::{render_depth, sphere_trace, AnalyticScene, DepthMap};
pub use synth::{synthesize, ScenePreset, SynthConfig, SynthScene};
pub use tsdf::{bake, TsdfGrid};
