use thiserror::Error;

use crate::geometry::RigidTransform;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("registration failed (best residual {residual:.6} m)")]
    RegistrationFailed {
        residual: f64,
        best: Box<RigidTransform>,
    },

    #[error("joint state {value} outside limits [{min}, {max}] for part `{part}`")]
    LimitViolation {
        part: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown part `{0}`")]
    UnknownPart(String),

    #[error("grasp failed: {0}")]
    GraspFailure(String),

    #[error("no action: {0}")]
    NoAction(String),

    #[error("invalid viewpoint: {0}")]
    InvalidViewpoint(String),

    #[error("reposition failed: no free cell within {radius} m of target")]
    RepositionFailed { radius: f64 },

    #[error("segmentation failed: {found} mobile points (need {required})")]
    SegmentationFailed { found: usize, required: usize },

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("no collision-free base pose among {samples} samples")]
    NoBaseFound { samples: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
