use std::path::PathBuf;

/// Errors produced by the simulation and asymptotics routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {time} outside the domain of the {kind} model")]
    OutsideDomain { kind: &'static str, time: f64 },

    #[error("custom covariance model has no kernel attached")]
    MissingKernel,

    #[error("circulant embedding has a negative eigenvalue ({min_eigenvalue:e}) and dense fallback is disabled")]
    EmbeddingFailed { min_eigenvalue: f64 },

    #[error("covariance matrix is not positive semidefinite within jitter {jitter:e}")]
    NotPositiveSemidefinite { jitter: f64 },

    #[error("component count mismatch: expected {expected}, got {actual}")]
    ComponentMismatch { expected: usize, actual: usize },

    #[error("{kind} has no local-stationarity derivation; supply an override")]
    NoLocalStationarity { kind: &'static str },

    #[error(
        "conditional sampling aborted: {accepted} passages in {attempts} attempts \
         (acceptance {acceptance:e} < {min_acceptance:e})"
    )]
    AcceptanceTooLow {
        accepted: u64,
        attempts: u64,
        acceptance: f64,
        min_acceptance: f64,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Fails with `InvalidParameter` unless `cond` holds.
pub(crate) fn ensure(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(invalid(name, reason()))
    }
}
