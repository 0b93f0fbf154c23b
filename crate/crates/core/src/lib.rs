//! Geometry and evaluation toolkit for multi-human, multi-object interaction
//! reconstruction.
//!
//! The crate covers the non-learned half of an interaction reconstruction
//! pipeline: mesh distance metrics, Procrustes/ICP alignment, dual-patch
//! object targets extracted from instance masks, interaction consistency
//! losses and accuracy curves, scene I/O, and a deterministic synthetic scene
//! generator used to validate all of it.
//!
//! All lengths are meters internally. Reports convert to centimeters at
//! serialization time.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod body;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod interaction;
pub mod io;
pub mod knn;
pub mod losses;
pub mod mask;
pub mod patches;
pub mod scene;
pub mod synth;

pub use alignment::{
    align_multi_hoi, align_single_hoi, average_rotations, average_translations, evaluate_scene,
    icp, procrustes, AlignMode, AlignOptions, AlignmentReport, IcpParams, IcpResult, SceneMetrics,
    VertexWeighting,
};
pub use body::BodyPart;
pub use error::{Error, Result};
pub use geometry::{
    apply_transform, chamfer_distance, project, v2v_distance, CameraIntrinsics, Mat3, Mesh,
    RigidTransform, SimilarityTransform, Vec3,
};
pub use interaction::{
    consistency_loss, detect_interactions, enumerate_pairs, multi_interaction_curve,
    object_object_curve, single_interaction_curve, EvalConfig, InteractionCurve,
};
pub use mask::InstanceMask;
pub use patches::{DualPatch, PatchGrid, PatchIndex, ShrinkRule, ShrinkRules};
pub use scene::{InteractionAnnotation, Scene, SceneObject};

/// Toolkit version echoed into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
