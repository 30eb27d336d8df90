use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A channel or numeric parameter lies outside its admissible domain.
    #[error("parameter `{name}` = {value} is out of domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The adaptive photon-number cutoff hit its hard cap before the tails
    /// dropped below the requested tolerance.
    #[error("cutoff cap {cap} reached before every tail fell below {tail_tol:e} (worst tail {worst_tail:e})")]
    Truncation { cap: usize, tail_tol: f64, worst_tail: f64 },

    #[error("{what} is not normalized: weights + tail = {total} (deviation {deviation:e})")]
    Normalization {
        what: &'static str,
        total: f64,
        deviation: f64,
    },

    /// Binomial weights of the closed-form expansion left the f64 range.
    #[error("closed-form weights overflow at input photon number {i}")]
    Overflow { i: usize },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain { name, value, reason }
    }
}
