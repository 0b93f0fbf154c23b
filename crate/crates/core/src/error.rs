use std::path::PathBuf;

use thiserror::Error;

use crate::body::BodyPart;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("topology mismatch: {left} vs {right} vertices")]
    TopologyMismatch { left: usize, right: usize },

    #[error("entity count mismatch: {what} {left} vs {right}")]
    EntityCountMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("point count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },

    #[error("point behind camera at index {index} (z = {z})")]
    BehindCamera { index: usize, z: f64 },

    #[error("degenerate point set")]
    DegeneratePointSet,

    #[error("icp degenerate: {0}")]
    IcpDegenerate(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty mask")]
    EmptyMask,

    #[error("mask vanished under shrink rule (category {category})")]
    MaskVanished { category: u32 },

    #[error("no sub-patch candidate")]
    NoSubPatchCandidate,

    #[error("degenerate ray")]
    DegenerateRay,

    #[error("missing mask for {what} {index}")]
    MissingMask { what: &'static str, index: usize },

    #[error("object {object}: {source}")]
    Object {
        object: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unlabeled part: {0}")]
    UnlabeledPart(BodyPart),

    #[error("no interactions to evaluate")]
    NoInteractions,

    #[error("no object-object contacts to evaluate")]
    NoObjectContacts,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid loss component {name}: {value}")]
    InvalidLossComponent { name: &'static str, value: f64 },

    #[error("contact placement failed")]
    ContactPlacementFailed,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{file}: field `{field}`: {message}")]
    Schema {
        file: PathBuf,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_object(self, object: usize) -> Self {
        Error::Object {
            object,
            source: Box::new(self),
        }
    }
}
