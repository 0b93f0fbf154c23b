//! Reference (non-differentiable) loss values for the reconstruction
//! objective. Useful as numerical oracles for a training implementation.
//!
//! The total objective is
//!
//! ```text
//! L = λh (L_hproj + L_hmesh) + λparam L_param + λdet L_det
//!   + λo (L_oproj + L_omesh) + λp L_p + λmain L_main + λsub L_sub
//!   + λact L_act + λbp L_bp + λcons L_cons
//! ```
//!
//! Every L1 term is a mean absolute error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    apply_transform, project, CameraIntrinsics, Mat3, Mesh, RigidTransform, Vec2, Vec3,
};
use crate::patches::DualPatch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_h: f64,
    pub lambda_param: f64,
    pub lambda_det: f64,
    pub lambda_o: f64,
    pub lambda_p: f64,
    pub lambda_main: f64,
    pub lambda_sub: f64,
    pub lambda_act: f64,
    pub lambda_bp: f64,
    pub lambda_cons: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_h: 1.0,
            lambda_param: 1.0,
            lambda_det: 1.0,
            lambda_o: 10.0,
            lambda_p: 10.0,
            lambda_main: 10.0,
            lambda_sub: 10.0,
            lambda_act: 100.0,
            lambda_bp: 10.0,
            lambda_cons: 100.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("lambda_h", self.lambda_h),
            ("lambda_param", self.lambda_param),
            ("lambda_det", self.lambda_det),
            ("lambda_o", self.lambda_o),
            ("lambda_p", self.lambda_p),
            ("lambda_main", self.lambda_main),
            ("lambda_sub", self.lambda_sub),
            ("lambda_act", self.lambda_act),
            ("lambda_bp", self.lambda_bp),
            ("lambda_cons", self.lambda_cons),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Individual loss values, before weighting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossComponents {
    pub hproj: f64,
    pub hmesh: f64,
    pub param: f64,
    pub det: f64,
    pub oproj: f64,
    pub omesh: f64,
    pub pose: f64,
    pub main: f64,
    pub sub: f64,
    pub act: f64,
    pub bp: f64,
    pub cons: f64,
}

impl LossComponents {
    fn named(&self) -> [(&'static str, f64); 12] {
        [
            ("hproj", self.hproj),
            ("hmesh", self.hmesh),
            ("param", self.param),
            ("det", self.det),
            ("oproj", self.oproj),
            ("omesh", self.omesh),
            ("pose", self.pose),
            ("main", self.main),
            ("sub", self.sub),
            ("act", self.act),
            ("bp", self.bp),
            ("cons", self.cons),
        ]
    }
}

/// Mean absolute difference.
pub fn l1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("l1 operands"));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / a.len() as f64)
}

/// `−log softmax(logits)[label]`, max-subtracted.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidConfig("non-finite logit".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(log_sum - (logits[label] - max))
}

/// Mean binary cross-entropy of a score map given as logits against 0/1
/// targets, in the overflow-safe form `max(x,0) − x·y + ln(1 + e^{−|x|})`.
pub fn binary_cross_entropy(logits: &[f64], targets: &[f64]) -> Result<f64> {
    if logits.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: logits.len(),
            right: targets.len(),
        });
    }
    if logits.is_empty() {
        return Err(Error::EmptyInput("score map"));
    }
    if targets.iter().any(|y| !(0.0..=1.0).contains(y)) {
        return Err(Error::InvalidConfig("targets must lie in [0, 1]".into()));
    }
    let sum: f64 = logits
        .iter()
        .zip(targets)
        .map(|(&x, &y)| x.max(0.0) - x * y + (-x.abs()).exp().ln_1p())
        .sum();
    Ok(sum / logits.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPoseTarget {
    pub rotation: Mat3,
    pub translation: Vec3,
    pub center: Vec3,
    /// Meters, positive.
    pub depth: f64,
}

impl ObjectPoseTarget {
    pub fn validate(&self) -> Result<()> {
        RigidTransform::new(self.rotation, self.translation)?;
        if !(self.depth > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "depth must be > 0, got {}",
                self.depth
            )));
        }
        Ok(())
    }
}

/// `L1(R) + L1(T) + L1(C) + |depth|` over the flattened terms.
pub fn object_pose_loss(pred: &ObjectPoseTarget, gt: &ObjectPoseTarget) -> Result<f64> {
    Ok(l1(pred.rotation.as_slice(), gt.rotation.as_slice())?
        + l1(pred.translation.as_slice(), gt.translation.as_slice())?
        + l1(pred.center.as_slice(), gt.center.as_slice())?
        + (pred.depth - gt.depth).abs())
}

/// `(L_main, L_sub)`: L1 over the main and sub offsets, kept separate so
/// each can be weighted.
pub fn offset_loss(pred: &DualPatch, gt: &DualPatch) -> (f64, f64) {
    let mean_abs = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).abs() + (a[1] - b[1]).abs()) / 2.0;
    (
        mean_abs(pred.main_offset, gt.main_offset),
        mean_abs(pred.sub_offset, gt.sub_offset),
    )
}

/// L1 between projected 3D points and 2D pixel targets.
pub fn reprojection_loss(points: &[Vec3], targets: &[Vec2], cam: &CameraIntrinsics) -> Result<f64> {
    let projected = project(points, cam)?;
    if projected.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: projected.len(),
            right: targets.len(),
        });
    }
    let a: Vec<f64> = projected.iter().flat_map(|p| [p.x, p.y]).collect();
    let b: Vec<f64> = targets.iter().flat_map(|p| [p.x, p.y]).collect();
    l1(&a, &b)
}

/// L1 over corresponding vertex coordinates.
pub fn mesh_loss(pred: &Mesh, gt: &Mesh) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::TopologyMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    let a: Vec<f64> = pred
        .vertices()
        .iter()
        .flat_map(|v| v.iter().copied())
        .collect();
    let b: Vec<f64> = gt
        .vertices()
        .iter()
        .flat_map(|v| v.iter().copied())
        .collect();
    l1(&a, &b)
}

/// Mesh loss of a CAD mesh placed by predicted and ground-truth poses.
pub fn object_mesh_loss(
    canonical: &Mesh,
    pred: &RigidTransform,
    gt: &RigidTransform,
) -> Result<f64> {
    mesh_loss(
        &apply_transform(canonical, pred),
        &apply_transform(canonical, gt),
    )
}

/// Weighted sum of the components. Negative or non-finite components are
/// rejected.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    for (name, value) in c.named() {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidLossComponent { name, value });
        }
    }
    let human = w.lambda_h * (c.hproj + c.hmesh) + w.lambda_param * c.param + w.lambda_det * c.det;
    let object = w.lambda_o * (c.oproj + c.omesh)
        + w.lambda_p * c.pose
        + w.lambda_main * c.main
        + w.lambda_sub * c.sub;
    let interact = w.lambda_act * c.act + w.lambda_bp * c.bp + w.lambda_cons * c.cons;
    Ok(human + object + interact)
}
