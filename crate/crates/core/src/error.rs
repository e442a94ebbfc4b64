use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors are split into two families: validation errors (bad input,
/// out-of-range parameters) and assertion errors (a sampler invariant failed
/// at run time). The CLI maps them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("Majorana index {index} out of range for {n_modes} modes")]
    IndexOutOfRange { index: usize, n_modes: usize },

    #[error("inverse temperature {beta} exceeds the admissible bound {bound}")]
    BetaOutOfRange { beta: f64, bound: f64 },

    #[error("Hamiltonian is not eligible for the sampler: {0}")]
    NotSamplerEligible(String),

    #[error("expansion would produce {requested} terms, above the cap of {cap}")]
    ExpansionTooLarge { requested: usize, cap: usize },

    #[error("dense operator on {n_modes} modes exceeds the cap of {cap} modes")]
    DenseCapExceeded { n_modes: usize, cap: usize },

    #[error("attempt budget of {attempts} exhausted (acceptance rate {acceptance_rate:.3e})")]
    AttemptBudgetExhausted { attempts: u64, acceptance_rate: f64 },

    #[error("tree walk did not reach a leaf within {steps} steps")]
    WalkNonConvergence { steps: u64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for run-time invariant failures, false for input validation.
    pub fn is_assertion(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
