use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter outside its domain: {0}")]
    ParameterDomain(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "particle {particle} stalled at iteration {iteration} after {attempts} attempts \
         (best acceptance probability observed: {best_acceptance:e})"
    )]
    Stall {
        iteration: usize,
        particle: usize,
        attempts: u64,
        best_acceptance: f64,
    },

    #[error("weight degeneracy at iteration {iteration}: proposal density of particle {particle} underflowed to zero")]
    WeightDegeneracy { iteration: usize, particle: usize },

    #[error("need at least {needed} samples, found {found}")]
    InsufficientSample { needed: usize, found: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    Optimization { iterations: usize, grad_norm: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// True for errors that signal an infeasible release/schedule pairing rather than a bug.
    pub fn is_infeasibility(&self) -> bool {
        matches!(self, Error::Stall { .. } | Error::WeightDegeneracy { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Toml(_))
    }
}
