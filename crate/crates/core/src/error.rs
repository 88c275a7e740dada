use thiserror::Error;

use crate::descent::DescentReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not a Hermitian rank-one projector (defect {defect:.3e})")]
    NotAProjector { defect: f64 },
    #[error("matrix is not an su(2) involution, g^2 = -Id fails by {defect:.3e}")]
    NotAnInvolution { defect: f64 },
    #[error("field is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("field carries energy outside mode 0 (energy {energy:.3e})")]
    NotMode0 { energy: f64 },
    #[error("sampled field is not a connection, modes other than +-1 carry energy {energy:.3e}")]
    NotAConnection { energy: f64 },
    #[error("fields live on different grids or metrics")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point {z} lies within {distance:.3e} of a lattice pole")]
    NearPole { z: num_complex::Complex64, distance: f64 },
    #[error("both homogeneous components vanish at grid point {index}")]
    DegenerateChart { index: usize },
    #[error("Backlund parameters are not normalized (defect {defect:.3e})")]
    NotNormalized { defect: f64 },
    #[error("seed line is not holomorphic for the connection (residual {residual:.3e} > gate {gate:.1e})")]
    SeedNotHolomorphic { residual: f64, gate: f64 },
    #[error("pipeline gate `{gate}` failed: measured {value:.3e} > {threshold:.1e}")]
    PipelineResidual {
        gate: &'static str,
        value: f64,
        threshold: f64,
    },
    #[error("holomorphicity residuals disagree: r1 = {r1:.3e}, r3 = {r3:.3e}")]
    EquivalenceViolated { r1: f64, r3: f64 },
    #[error("top Fourier block section nearly vanishes (min |s| = {min_norm:.3e})")]
    VanishingSection { min_norm: f64 },
    #[error("top Fourier block is not pointwise rank one (defect {defect:.3e})")]
    RankDefect { defect: f64 },
    #[error("degree was not lowered, tail energy {tail:.3e} exceeds {threshold:.1e}")]
    DegreeNotLowered { tail: f64, threshold: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("transport requires a flat metric")]
    NonFlatMetric,
    #[error("no holomorphic line found, best residual {best_residual:.3e}")]
    NoLineFound {
        best_residual: f64,
        report: Box<DescentReport>,
    },
    #[error("container format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
