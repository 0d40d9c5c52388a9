use thiserror::Error;

use crate::geometry::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({}, {}) is not in the domain", .0.x, .0.y)]
    OutsideDomain(Point),

    #[error("invalid domain: field `{field}`: {reason}")]
    InvalidDomain { field: String, reason: String },

    #[error("invalid map: field `{field}`: {reason}")]
    InvalidMap { field: String, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("no path between the points at the finest resolution")]
    NoPath,

    #[error("rejection sampling gave up after {attempts} attempts ({accepted} accepted)")]
    SamplingFailure { attempts: usize, accepted: usize },

    #[error("could not certify near-geodesic: achieved ratio {ratio:.6} > {target}")]
    CertificationFailure { ratio: f64, target: f64 },

    #[error("sphere chain did not reach the endpoint within {steps} steps")]
    ChainOverflow { steps: usize },

    #[error("image domain not representable: {0}")]
    UnsupportedImage(String),

    #[error("branch selection failed: {0}")]
    Branch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidDomain {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
