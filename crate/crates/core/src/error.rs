use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("{function}: argument {value} outside domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// Model or configuration parameters violate an invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("every one of the {replications} replications hit the cap of {cap} steps")]
    AllTruncated { replications: u64, cap: u64 },

    #[error("could not bracket the threshold for gamma = {gamma} after {expansions} expansions")]
    BracketFailure { gamma: f64, expansions: u32 },

    #[error(
        "threshold search for gamma = {gamma} stalled at h = {h} with AT2FA {achieved} +/- {std_error}"
    )]
    NoiseFloor {
        gamma: f64,
        h: f64,
        achieved: f64,
        std_error: f64,
    },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(function: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            function,
            value,
            expected,
        }
    }
}
