use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("value {value} lies outside the invariant interval [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("axis {axis} out of range for a {dim}-dimensional problem")]
    BadAxis { axis: usize, dim: usize },

    #[error("invalid configuration key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("entropy `{0}` is not convex on the invariant interval")]
    NonConvexEntropy(String),

    #[error("mollifier width {width} must be smaller than the support margin {margin}")]
    MollifierTooWide { width: f64, margin: f64 },

    #[error("initial data is nonzero within the support margin {margin} of the boundary (|u| = {value} at cell {cell})")]
    SupportMargin {
        margin: f64,
        value: f64,
        cell: usize,
    },

    #[error("discrete maximum principle violated: max |u| = {max} exceeds {bound}")]
    MaximumPrinciple { max: f64, bound: f64 },

    #[error("step {step} at t = {time}: {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: Box<LabError>,
    },

    #[error("Poisson solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    PoissonNonConvergence { iterations: usize, residual: f64 },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("need at least {need} snapshots, got {got}")]
    TooFewSnapshots { need: usize, got: usize },

    #[error("rate fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupted file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("no manifest in {0}")]
    NoManifest(PathBuf),

    #[error("output directory {0} holds a run for a different configuration; pass --overwrite or choose a fresh directory")]
    OutputOccupied(PathBuf),
}

impl LabError {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
