use thiserror::Error;

/// Failure modes shared by every simulation stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The truncated Fock space cannot represent the state to the required tolerance.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// The photon-number variance vanishes, so the signal-to-noise ratio has no finite value.
    #[error("divergent SNR: photon-number variance is zero")]
    DivergentSnr,

    /// A numerical integration or estimate could not reach its tolerance.
    #[error("accuracy error: {0}")]
    Accuracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn ensure_unit_interval(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(domain(format!("{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(domain(format!("{name} must be finite, got {value}")));
    }
    Ok(())
}
