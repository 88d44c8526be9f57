use thiserror::Error;

pub type Result<T, E = QstError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QstError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The hopping ratio t2/t1 reached or exceeded one, where the edge states
    /// are delocalized and the closed-form edge quantities are singular.
    #[error("hopping ratio t2/t1 = {ratio} is outside [0, 1)")]
    GapClosed { ratio: f64 },

    #[error("time {t} lies outside the schedule interval [0, {duration}]")]
    OutsideSchedule { t: f64, duration: f64 },

    #[error("initial state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),

    #[error("parameter `{param}` does not apply to the {protocol} protocol")]
    InapplicableParameter { param: String, protocol: &'static str },

    #[error("realization {index} failed: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<QstError>,
    },

    #[error("sweep cell ({row}, {col}) failed: {source}")]
    SweepCell {
        row: usize,
        col: usize,
        #[source]
        source: Box<QstError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QstError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        QstError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
