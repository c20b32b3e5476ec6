use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric consistency: {0}")]
    NumericConsistency(String),

    /// Grid too coarse for the requested optics or phantom.
    #[error("sampling: {msg} (required grid pixel <= {required_grid_nm:.4} nm)")]
    Sampling { msg: String, required_grid_nm: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate phases: mixing matrix condition number {condition:.3e}")]
    DegeneratePhases { condition: f64 },

    #[error("pattern not found: peak {peak:.3e} below {threshold:.3e}")]
    PatternNotFound { peak: f64, threshold: f64 },

    #[error("resolution indeterminate: {0}")]
    ResolutionIndeterminate(String),

    #[error("profile degenerate: {0}")]
    ProfileDegenerate(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Strips stage tags and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
