use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("descriptor mismatch: expected {expected} factor(s), found {found}")]
    DescriptorMismatch { expected: usize, found: usize },

    /// Enumeration stopped before reaching the requested radius. `partial`
    /// holds the exact counts for radii `0..=radius_reached`.
    #[error("element budget of {limit} exceeded after completing radius {radius_reached}")]
    BudgetExceeded {
        radius_reached: usize,
        limit: usize,
        partial: Vec<u64>,
    },

    #[error("search budget exceeded while computing the subgroup length of {element}")]
    SearchBudgetExceeded { element: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("trivial connector element: {0}")]
    TrivialConnector(String),

    #[error("connector elements {g} and {h} are dependent (they commute)")]
    DependentConnectors { g: String, h: String },

    #[error("connecting pieces are not pairwise distinct for exponent {0}")]
    CoincidentPieces(u32),

    /// The pair space exceeded the budget; `partial` covers the largest
    /// square `s = t` range that fit.
    #[error("pair budget of {limit} exceeded; partial report covers s, t <= {}", partial.s_max)]
    AmbiguityBudgetExceeded {
        limit: usize,
        partial: Box<crate::concat::AmbiguityReport>,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("table range too short: need radius {needed}, table ends at {available}")]
    RangeShortfall { needed: usize, available: usize },

    #[error("growth table has a zero entry at radius {0}")]
    ZeroEntry(usize),

    #[error("too many quadruples for exhaustive scan ({count} > {cap}); use random mode")]
    TooManyQuadruples { count: u128, cap: u128 },
}
