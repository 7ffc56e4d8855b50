//! Direction-of-arrival (DOA) estimation for uniform linear arrays.
//!
//! Implements the Capon (minimum-variance) spectrum, MUSIC and LS-ESPRIT
//! baselines, and a reduced-rank joint iterative subspace optimization
//! (JISO) estimator together with its spatial-smoothing variant for
//! correlated sources. A Monte Carlo harness sweeps snapshot counts and
//! reports probability-of-resolution curves as CSV.

pub mod array_model;
pub mod bench;
pub mod covariance;
pub mod estimators;
pub mod linalg;
pub mod spectrum_search;

pub use array_model::{ScenarioConfig, SnapshotMatrix, SourceModel, SteeringVector};
pub use covariance::CovarianceEstimate;
pub use estimators::Spectrum;
pub use spectrum_search::{PeakSet, ResolutionResult};

use thiserror::Error;

/// Errors surfaced by estimators, configuration loading and the harness.
#[derive(Debug, Error)]
pub enum DoaError {
    #[error("matrix is not Hermitian (max asymmetry {max_asym:.3e} relative)")]
    NotHermitian { max_asym: f64 },
    #[error("matrix singular after loading (reciprocal condition estimate {rcond:.3e})")]
    Singular { rcond: f64 },
    #[error("eigendecomposition failed to converge")]
    EigNonConvergence,
    #[error("rank-deficient least-squares system ({rows}x{cols})")]
    RankDeficient { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("constraint infeasible at scanning direction {theta_deg} deg: projected steering vector vanished")]
    ConstraintInfeasible { theta_deg: f64 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, DoaError>;
