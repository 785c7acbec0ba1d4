//! The metric space of battery equivalence classes: canonical forms,
//! Wasserstein distances, ε-nets and Lipschitz coverage.

mod canonical;
mod net;
mod transport;

use alloc::string::String;

pub use canonical::{canonicalize, CanonicalForm};
pub use net::{
    coverage_certificate, greedy_net, lipschitz_estimate, CoverageCertificate, DistanceMatrix,
    LipschitzEstimate, ModuliPoint, NetReport, COVERAGE_TOL,
};
pub use transport::{
    euclidean, min_cost_assignment, w1_1d, w1_exact, w1_sliced, Metric, DEFAULT_EXACT_CAP,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("sample counts differ ({0} vs {1}); resample to a common n")]
    SampleCountMismatch(usize, usize),
    #[error("panel sizes differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("canonical forms come from different probe panels (`{0}` vs `{1}`)")]
    PanelMismatch(String, String),
    #[error("{n} samples exceed the exact solver cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("canonical form has no points")]
    Empty,
    #[error("at least one projection is required")]
    NoProjections,
    #[error("no points given")]
    NoPoints,
    #[error("k = {k} must lie in 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("region `{0}` is not in the family vocabulary")]
    UnknownRegion(String),
    #[error("need at least two points")]
    TooFewPoints,
}
