use thiserror::Error;

/// Errors raised anywhere in the boundary-estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ray from antenna {0} does not intersect the boundary")]
    NoIntersection(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("distance {0} mm outside the modelled range [0, 40] mm")]
    OutOfRange(f64),
    #[error("pose rejected after {0} resampling attempts")]
    PoseRejected(usize),
    #[error("measurement {0} carries no labels")]
    UnlabeledMeasurement(String),
    #[error("labels have zero spread")]
    DegenerateLabels,
    #[error("rank deficient: requested {requested} components, data supports {usable}")]
    RankDeficient { requested: usize, usable: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("no interior resonance minimum")]
    NoResonance,
    #[error("time profile peak below noise floor")]
    NoPeak,
    #[error("rasterized shape covers no pixels")]
    EmptyRaster,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
