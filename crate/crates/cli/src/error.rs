use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: stochdelay::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration and hypothesis errors, 3 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Hypothesis(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// Wraps a core error, routing hypothesis-type failures to [`CliError::Hypothesis`].
    pub(crate) fn core(context: impl Into<String>) -> impl FnOnce(stochdelay::Error) -> Self {
        let context = context.into();
        move |source| {
            use stochdelay::Error as E;
            match source {
                E::Hypothesis(_) | E::ContractionViolated { .. } | E::NotInC0(_) | E::SingularExponent(_) => {
                    Self::Hypothesis(format!("{context}: {source}"))
                }
                E::InvalidParameter { .. } | E::OffGrid { .. } | E::Unsupported(_) | E::GridMismatch(_) => {
                    Self::Config(format!("{context}: {source}"))
                }
                _ => Self::Solver { context, source },
            }
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
