use crate::dsl::ParseError;

/// Error type shared by every layer of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate mode `{0}`")]
    DuplicateMode(String),
    #[error("mode sets collide on `{0}`")]
    ModeCollision(String),
    #[error("mode `{0}` is not registered")]
    UnregisteredMode(String),
    #[error("occupation {requested} on mode `{mode}` exceeds cutoff {cutoff}")]
    CutoffExceeded {
        mode: String,
        requested: u32,
        cutoff: u8,
    },
    #[error("cannot normalize a zero state")]
    ZeroNorm,
    #[error("states live on different mode sets")]
    ModeSetMismatch,
    #[error("non-finite amplitude")]
    NonFiniteAmplitude,
    #[error("2x2 matrix is not unitary")]
    NonUnitaryMatrix,
    #[error("invalid element: {0}")]
    InvalidSpec(String),
    #[error("invalid laser configuration: {0}")]
    InvalidConfig(String),
    #[error("post-selection removed every term")]
    EmptySelection,
    #[error("pair cancellation failed: relative residual {residual:.6e}")]
    CancellationFailed { residual: f64 },
    #[error("input state norm deviates from 1 by {0:.3e}")]
    UnnormalizedInput(f64),
    #[error("unsupported parameter: {0}")]
    UnsupportedParam(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips the stage annotation, if any.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
