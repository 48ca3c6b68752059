use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no rotation axis defined: rabi and detuning are both zero")]
    NoRotationAxis,

    #[error("rotation axis is not a unit vector (|axis| = {0})")]
    NonUnitAxis(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("propagator fidelity undefined with dissipation")]
    PropagatorWithDecay,

    #[error("ensemble node (chi = {chi:.6e}, delta = {delta:.6e}) failed: {source}")]
    Node {
        chi: f64,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("nonphysical ensemble weight {0:.3e} at chi <= 0 exceeds 1e-12")]
    TruncatedWeight(f64),

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("fit did not converge: {0}")]
    NotConverged(String),

    #[error("singular design: {0}")]
    Singular(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}
