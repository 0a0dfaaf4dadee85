use std::path::PathBuf;

/// Errors surfaced by every stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::sim::MAX_QUBITS)]
    Capacity(usize),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("control and target coincide on qubit {0}")]
    ControlIsTarget(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("binding error: {0}")]
    Binding(String),

    #[error("gate kind {0:?} has no shift rule")]
    UnsupportedGradient(crate::sim::GateKind),

    #[error("model is frozen; parameters cannot change")]
    Frozen,

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("non-finite value at epoch {epoch}: {what}")]
    NonFinite { epoch: usize, what: String },

    #[error("degenerate target range: all targets equal {0}")]
    DegenerateRange(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),

    #[error("all {trials} trials failed; first failure: {first}")]
    AllTrialsFailed { trials: usize, first: String },
}

impl Error {
    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Capacity(_) => "capacity",
            Error::QubitOutOfRange { .. } => "qubit_out_of_range",
            Error::ControlIsTarget(_) => "control_is_target",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Binding(_) => "binding",
            Error::UnsupportedGradient(_) => "unsupported_gradient",
            Error::Frozen => "frozen",
            Error::Contract(_) => "contract",
            Error::NonFinite { .. } => "non_finite",
            Error::DegenerateRange(_) => "degenerate_range",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Serialize(_) => "serialize",
            Error::AllTrialsFailed { .. } => "all_trials_failed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
