use std::fmt;

/// The standing assumptions under which the limit theorems are stated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Assumption {
    /// `F` and `G` continuous with `a_G < b_F` (uniform LLN).
    A,
    /// `F` continuous with `a_G < a_F` (uniform CLT).
    B,
    /// `a_G <= a_F`, no atom at `a_F`, and the integrability conditions on `1/G`.
    Weak,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::A => f.write_str("Assumption A"),
            Assumption::B => f.write_str("Assumption B"),
            Assumption::Weak => f.write_str("weak integrability conditions"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("numerical failure in {context}: achieved error estimate {achieved_error:e}")]
    NumericalFailure {
        context: String,
        achieved_error: f64,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("pair {index} violates y >= t (t = {t}, y = {y})")]
    InvalidPair { index: usize, t: f64, y: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("observation probability is zero: truncation removes every pair")]
    ZeroObservationProbability,

    #[error("sampling budget of {budget} attempts exhausted with {accepted} accepted pairs")]
    SamplingBudget { budget: u64, accepted: usize },

    #[error("{what} exceeds budget {limit}{}", partial.map(|p| format!(" (partial value {p})")).unwrap_or_default())]
    Budget {
        what: String,
        limit: f64,
        partial: Option<f64>,
    },

    #[error("{assumption} does not hold: {detail}")]
    AssumptionViolated {
        assumption: Assumption,
        detail: String,
    },

    #[error("C(y) = {c:e} at y = {y} is below the singularity floor")]
    NearBoundary { y: f64, c: f64 },

    #[error("degenerate coordinate: {0} has zero asymptotic variance")]
    DegenerateCoordinate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_replication(index: usize, source: Error) -> Self {
        Error::Replication {
            index,
            source: Box::new(source),
        }
    }

    pub(crate) fn numerical(context: impl Into<String>, achieved_error: f64) -> Self {
        Error::NumericalFailure {
            context: context.into(),
            achieved_error,
        }
    }

    /// True for errors that stem from numerical evaluation rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalFailure { .. } | Error::NearBoundary { .. } | Error::Budget { .. } => true,
            Error::Replication { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
