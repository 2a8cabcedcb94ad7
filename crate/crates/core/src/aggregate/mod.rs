//! Feature aggregation schemes.
//!
//! Three ways of voting per-pixel image features into 3D:
//!
//! * **rma** — ray marching aggregation: every pixel ray is sampled against
//!   the TSDF, each sample gets a transmittance-weighted opacity, and samples
//!   above a weight threshold become feature points. Occlusion falls out of
//!   the transmittance product: weight dies off after the first surface.
//! * **da** — depth aggregation: each ray votes to a fixed window of samples
//!   around the first TSDF sign change, with linearly decreasing weights.
//! * **va** — volume aggregation: voxel centers collect the unweighted mean
//!   of the pixel features they project to, ignoring occlusion.

mod da;
mod profile;
mod rma;
mod va;

pub use da::{da_aggregate, DaConfig};
pub use profile::{first_hitting_point, march_ray, RayProfile};
pub use rma::{rma_aggregate, RmaConfig, VoteValue};
pub use va::{va_aggregate, volume_to_cloud, VolumeFeatures};

use crate::camera::CameraView;
use crate::error::{Error, Result};

/// All views must agree on the feature channel count; returns it.
pub(crate) fn uniform_channels(views: &[CameraView]) -> Result<usize> {
    let mut channels = None;
    for (i, view) in views.iter().enumerate() {
        let c = view.features.channels as usize;
        match channels {
            None => channels = Some(c),
            Some(expect) if expect != c => {
                return Err(Error::domain(format!(
                    "view {i} has {c} feature channels, expected {expect}"
                )))
            }
            _ => {}
        }
    }
    channels.ok_or_else(|| Error::domain("at least one view is required"))
}
