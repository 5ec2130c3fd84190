use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid plane tree code: {0}")]
    InvalidTree(String),

    #[error("invalid Lukasiewicz path: {0}")]
    InvalidPath(String),

    #[error("invalid marks: {0}")]
    InvalidMarks(String),

    #[error("invalid planar map: {0}")]
    InvalidMap(String),

    #[error("{what}: size {n} exceeds the enumeration guard {max}")]
    SizeGuard { what: &'static str, n: usize, max: usize },

    #[error("cannot contract a loop (dart {0})")]
    LoopContraction(usize),

    #[error("deleting dart {0} would disconnect the map")]
    Bridge(usize),

    #[error("the half-edge cannot be contracted or deleted")]
    HalfEdge,

    #[error("map is not a Halin map: {0}")]
    NotHalin(String),

    #[error("condition (H*) violated: {0}")]
    HstarViolated(String),

    #[error("face of degree {0} has no weight (degrees start at 4)")]
    DegreeTooSmall(usize),

    #[error("partition function vanishes for n = {0}")]
    ZeroPartition(usize),

    #[error("no critical parameter inside the radius of convergence: {0}")]
    NoCriticalPoint(String),

    #[error("size {n} is outside the support of the total progeny (period {period})")]
    OutOfSupport { n: usize, period: usize },

    #[error("invalid offspring distribution: {0}")]
    InvalidDistribution(String),

    #[error("scaling constant requires a pure power-law offspring distribution")]
    NotPowerLaw,

    #[error("invalid metric space: {0}")]
    InvalidMetric(String),

    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),

    #[error("Gromov-Hausdorff search budget exceeded ({needed} > {budget})")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
