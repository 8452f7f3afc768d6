use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("regime `{regime}` not applicable: {reason}")]
    InvalidRegime {
        regime: &'static str,
        reason: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite diffusion state at step {step} (h = {h}, z = {z}); reduce the step size")]
    NonFiniteState { step: u64, h: f64, z: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("insufficient points for tail fit: {found} usable, need at least {needed}")]
    InsufficientPoints { found: usize, needed: usize },

    #[error("degenerate fit range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("insufficient span: series covers {span}, need at least {needed}")]
    InsufficientSpan { span: f64, needed: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("parameter mismatch between events file and config: {0}")]
    Mismatch(String),

    #[error("i/o error on {path}: {source}")]
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

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
