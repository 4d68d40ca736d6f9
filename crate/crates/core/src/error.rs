use thiserror::Error;

/// Which primitive failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Mu,
    Xi,
    S,
    Price,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Field::Mu => "mu",
            Field::Xi => "xi",
            Field::S => "s",
            Field::Price => "price",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{field} out of range ({value}): {reason}")]
    OutOfRange {
        field: Field,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distributions have different means ({0} vs {1})")]
    MeanMismatch(f64, f64),

    #[error("no root in bracket: {0}")]
    NoRoot(String),

    #[error("no contact point found for the concave envelope at {0}")]
    NoContact(f64),

    #[error("policy not valid for these parameters: {0}")]
    InvalidRegion(String),

    #[error("cutoff search requested outside the cutoff regions (s = {s}, B1 = {b1}, B2 = {b2})")]
    RegionMismatch { s: f64, b1: f64, b2: f64 },

    #[error("adversary has no feasible reservation value on the grid")]
    Infeasible,

    #[error("density is not log-concave near {0}")]
    NotLogConcave(f64),

    #[error(transparent)]
    Lp(#[from] crate::oracle::lp::LpError),
}

pub type Result<T> = std::result::Result<T, Error>;
