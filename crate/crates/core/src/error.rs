use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{arg}`: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error("band out of range: {0}")]
    BandOutOfRange(String),

    #[error("empty band: no lattice frequency selected")]
    EmptyBand,

    #[error("truncation exceeds safe torus range ({eps} > {limit})")]
    TruncationTooLarge { eps: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-positive coefficient field value {0}")]
    NonPositiveField(f64),

    #[error("trivial family: denominator norm is zero")]
    TrivialFamily,

    #[error("transversality: separation {separation} is below nu = {nu}")]
    Transversality { separation: f64, nu: f64 },

    #[error("u-ladder under-resolved: {samples} samples, need more than {needed}")]
    UnderResolvedLadder { samples: usize, needed: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible experiment: estimated {estimate} bytes exceeds cap of {cap} bytes")]
    Infeasible { estimate: u64, cap: u64 },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(arg: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        arg,
        reason: reason.into(),
    }
}
