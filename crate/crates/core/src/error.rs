use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate model: {0}")]
    DegenerateModel(&'static str),

    /// The distribution has no mass at or above the stopping threshold, so the
    /// search would never stop.
    #[error("threshold {threshold} lies above the support of the reward distribution")]
    ThresholdAboveSupport { threshold: f64 },

    #[error("cannot build a distribution from an empty sample")]
    EmptyDistribution,

    #[error("reward distribution has zero mean; throughput is identically zero")]
    ZeroMeanDistribution,

    #[error(
        "fixed-point iteration did not converge within {max_iter} iterations (last iterate {last})"
    )]
    MaxIterationsExceeded { max_iter: usize, last: f64 },

    #[error("search exceeded {max_cells} cells without meeting threshold {mu}")]
    MaxCellsExceeded { max_cells: u64, mu: f64 },

    #[error("base station and UE are co-located (zero link distance)")]
    CoLocated,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
