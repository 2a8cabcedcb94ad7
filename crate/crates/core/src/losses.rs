//! Loss evaluators: multi-scale log-L1 TSDF reconstruction loss, detection
//! loss components, and their weighted total. Evaluation only, no gradients.

use crate::error::{Error, Result};
use crate::tsdf::TsdfGrid;

/// Focusing exponent of the focal loss.
pub const FOCAL_GAMMA: f64 = 2.0;

/// Positive-class balance of the focal loss.
pub const FOCAL_ALPHA: f64 = 0.25;

/// Log-compression applied to TSDF values before the L1 difference:
/// `sgn(x) * ln(1 + |x|)`. Odd, monotone, and 1-Lipschitz.
pub fn log_tsdf_transform(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

/// Coarse-to-fine stack of TSDF grids, finest last, each coarser level
/// halving every dimension (rounding up).
#[derive(Clone, Debug)]
pub struct TsdfPyramid {
    levels: Vec<TsdfGrid>,
}

impl TsdfPyramid {
    pub const DEFAULT_LEVELS: usize = 3;

    pub fn new(levels: Vec<TsdfGrid>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::domain("pyramid needs at least one level"));
        }
        for pair in levels.windows(2) {
            let coarse = pair[0].dims();
            let fine = pair[1].dims();
            for a in 0..3 {
                if coarse[a] != fine[a].div_ceil(2) {
                    return Err(Error::domain(format!(
                        "level dims {coarse:?} are not the dyadic reduction of {fine:?}"
                    )));
                }
            }
        }
        Ok(Self { levels })
    }

    /// Builds a pyramid by repeatedly mean-pooling 2x2x2 blocks of the
    /// finest grid (partial blocks average the voxels present).
    pub fn from_finest(finest: TsdfGrid, level_count: usize) -> Result<Self> {
        if level_count == 0 {
            return Err(Error::domain("pyramid needs at least one level"));
        }
        let mut levels = vec![finest];
        for _ in 1..level_count {
            let fine = levels.last().unwrap();
            levels.push(downsample(fine)?);
        }
        levels.reverse();
        Self::new(levels)
    }

    pub fn levels(&self) -> &[TsdfGrid] {
        &self.levels
    }

    pub fn finest(&self) -> &TsdfGrid {
        self.levels.last().expect("nonempty pyramid")
    }
}

fn downsample(fine: &TsdfGrid) -> Result<TsdfGrid> {
    let fd = fine.dims();
    let cd = [fd[0].div_ceil(2), fd[1].div_ceil(2), fd[2].div_ceil(2)];
    let mut values = Vec::with_capacity(cd[0] * cd[1] * cd[2]);
    for k in 0..cd[2] {
        for j in 0..cd[1] {
            for i in 0..cd[0] {
                let mut sum = 0.0;
                let mut count = 0;
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (x, y, z) = (2 * i + dx, 2 * j + dy, 2 * k + dz);
                            if x < fd[0] && y < fd[1] && z < fd[2] {
                                sum += fine.value(x, y, z);
                                count += 1;
                            }
                        }
                    }
                }
                values.push(sum / count as f64);
            }
        }
    }
    // Block means stay inside the truncation band, so this cannot fail on
    // range; the coarse origin sits at the mean of the first block's centers.
    TsdfGrid::new(
        cd,
        fine.origin() + nalgebra::Vector3::repeat(fine.voxel_size() * 0.5),
        fine.voxel_size() * 2.0,
        fine.truncation(),
        values,
    )
}

/// Sum over pyramid levels of the mean absolute difference of
/// log-transformed TSDF values.
pub fn recon_loss(pred: &TsdfPyramid, truth: &TsdfPyramid) -> Result<f64> {
    if pred.levels().len() != truth.levels().len() {
        return Err(Error::domain(format!(
            "pyramid level counts differ: {} vs {}",
            pred.levels().len(),
            truth.levels().len()
        )));
    }
    let mut total = 0.0;
    for (p, t) in pred.levels().iter().zip(truth.levels()) {
        if p.dims() != t.dims() {
            return Err(Error::domain(format!(
                "level shape mismatch: {:?} vs {:?}",
                p.dims(),
                t.dims()
            )));
        }
        let sum: f64 = p
            .values()
            .iter()
            .zip(t.values())
            .map(|(a, b)| (log_tsdf_transform(*a) - log_tsdf_transform(*b)).abs())
            .sum();
        total += sum / p.len() as f64;
    }
    Ok(total)
}

/// One-vs-all focal loss over class probabilities. `target` of `None` means
/// no positive class (background location).
pub fn focal_loss(pred_probs: &[f64], target: Option<usize>) -> Result<f64> {
    if pred_probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::domain("class probabilities must lie in (0, 1)"));
    }
    if let Some(t) = target {
        if t >= pred_probs.len() {
            return Err(Error::domain(format!(
                "target class {t} out of range for {} classes",
                pred_probs.len()
            )));
        }
    }
    let mut loss = 0.0;
    for (c, &p) in pred_probs.iter().enumerate() {
        if Some(c) == target {
            loss += -FOCAL_ALPHA * (1.0 - p).powf(FOCAL_GAMMA) * p.ln();
        } else {
            loss += -(1.0 - FOCAL_ALPHA) * p.powf(FOCAL_GAMMA) * (1.0 - p).ln();
        }
    }
    Ok(loss)
}

/// Axis-aligned box given by center and size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub center: [f64; 3],
    pub size: [f64; 3],
}

impl Aabb {
    pub fn new(center: [f64; 3], size: [f64; 3]) -> Self {
        Self { center, size }
    }

    fn validate(&self) -> Result<()> {
        if self.size.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::domain(format!(
                "degenerate box with size {:?}",
                self.size
            )));
        }
        Ok(())
    }

    fn min(&self, axis: usize) -> f64 {
        self.center[axis] - self.size[axis] * 0.5
    }

    fn max(&self, axis: usize) -> f64 {
        self.center[axis] + self.size[axis] * 0.5
    }

    fn volume(&self) -> f64 {
        self.size.iter().product()
    }
}

/// Intersection-over-union of two axis-aligned boxes; 0 when disjoint.
pub fn aabb_iou(a: &Aabb, b: &Aabb) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let mut inter = 1.0;
    for axis in 0..3 {
        let overlap = (a.max(axis).min(b.max(axis)) - a.min(axis).max(b.min(axis))).max(0.0);
        inter *= overlap;
    }
    let union = a.volume() + b.volume() - inter;
    Ok(inter / union)
}

pub fn iou_loss(a: &Aabb, b: &Aabb) -> Result<f64> {
    Ok(1.0 - aabb_iou(a, b)?)
}

/// Binary cross-entropy between predicted centerness `c in (0,1)` and target
/// `target in [0,1]`.
pub fn centerness_bce(c: f64, target: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::domain(format!("predicted centerness {c} must lie in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::domain(format!(
            "target centerness {target} must lie in [0, 1]"
        )));
    }
    Ok(-(target * c.ln() + (1.0 - target) * (1.0 - c).ln()))
}

/// Prediction at one sparse voxel location. Class scores are post-sigmoid
/// probabilities in (0, 1), one per class.
#[derive(Clone, Debug)]
pub struct BoxPrediction {
    pub class_probs: Vec<f64>,
    pub aabb: Aabb,
    pub centerness: f64,
}

/// Ground truth at one sparse voxel location; `class` of `None` marks a
/// location matching no object.
#[derive(Clone, Debug)]
pub struct BoxTarget {
    pub class: Option<usize>,
    pub aabb: Aabb,
    pub centerness: f64,
}

/// Per-location object-match indicator.
#[derive(Clone, Debug, Default)]
pub struct MatchMask {
    pub matched: Vec<bool>,
}

impl MatchMask {
    pub fn from_targets(targets: &[BoxTarget]) -> Self {
        Self {
            matched: targets.iter().map(|t| t.class.is_some()).collect(),
        }
    }

    pub fn positives(&self) -> usize {
        self.matched.iter().filter(|&&m| m).count()
    }
}

/// Detection loss: per-location focal classification plus, at matched
/// locations, IoU box loss and centerness BCE, normalized by the number of
/// matched locations. Defined as 0 when nothing is matched.
pub fn det_loss(preds: &[BoxPrediction], targets: &[BoxTarget], mask: &MatchMask) -> Result<f64> {
    if preds.len() != targets.len() || preds.len() != mask.matched.len() {
        return Err(Error::domain(format!(
            "misaligned location sets: {} predictions, {} targets, {} mask entries",
            preds.len(),
            targets.len(),
            mask.matched.len()
        )));
    }
    let n_pos = mask.positives();
    if n_pos == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ((pred, target), &matched) in preds.iter().zip(targets).zip(&mask.matched) {
        total += focal_loss(&pred.class_probs, target.class)?;
        if matched {
            if target.class.is_none() {
                return Err(Error::domain("matched location lacks a target class"));
            }
            total += iou_loss(&pred.aabb, &target.aabb)?;
            total += centerness_bce(pred.centerness, target.centerness)?;
        }
    }
    Ok(total / n_pos as f64)
}

/// Weighted total `lambda * recon + det`.
pub fn total_loss(recon: f64, det: f64, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::domain(format!("lambda {lambda} must be nonnegative")));
    }
    Ok(lambda * recon + det)
}
