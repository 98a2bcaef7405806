use thiserror::Error;

/// Every failure the analysis pipeline can report.
#[derive(Debug, Error)]
pub enum QvpError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical integrity violated: {0}")]
    NumericalIntegrity(String),

    #[error("stationary solve failed for {kernel} kernel: {reason}")]
    Solver { kernel: String, reason: String },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("unstable segment: mean service {service} <= mean arrival {arrival}")]
    Unstable { service: f64, arrival: f64 },

    #[error("stochastic ordering violated at j={index}: upper {upper} < lower {lower}")]
    OrderingViolation { index: usize, upper: f64, lower: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("splice failed: {0}")]
    Splice(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<QvpError>,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QvpError>;

impl QvpError {
    /// Wrap the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        QvpError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 config, 3 numeric integrity, 4 no-root/unstable.
    pub fn exit_code(&self) -> i32 {
        match self {
            QvpError::Stage { source, .. } => source.exit_code(),
            QvpError::Config(_) | QvpError::Json(_) | QvpError::Io(_) | QvpError::Csv(_) => 2,
            QvpError::NoRoot(_) | QvpError::Unstable { .. } => 4,
            _ => 3,
        }
    }
}

pub(crate) fn config_err(msg: impl Into<String>) -> QvpError {
    QvpError::Config(msg.into())
}

pub(crate) fn domain_err(msg: impl Into<String>) -> QvpError {
    QvpError::Domain(msg.into())
}
