use thiserror::Error;

use crate::model::BranchId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("overlap magnitude {0:.3e} too small to define a phase")]
    UndefinedPhase(f64),

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("dark state undefined: all couplings of the {0} Hamiltonian vanish")]
    DegenerateKernel(BranchId),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("eigensolver failed to converge (residual {0:.3e})")]
    Eigensolver(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("time {t} outside schedule window [0, {end}]")]
    OutOfRange { t: f64, end: f64 },

    #[error("evolution is not cyclic: fidelity {fidelity:.6} below threshold {threshold}")]
    NonCyclic { fidelity: f64, threshold: f64 },

    #[error("photonic population {0:.3e} too large for a Bloch projection")]
    Projection(f64),

    #[error("Bloch path is not closed: gap {gap:.3e} exceeds tolerance {tol:.3e}")]
    OpenPath { gap: f64, tol: f64 },

    #[error("consecutive Bloch samples {0} and {1} are antipodal")]
    AntipodalStep(usize, usize),

    #[error("gate run failed on branch {branch}: {source}")]
    GateRun {
        branch: BranchId,
        #[source]
        source: Box<Error>,
    },

    #[error("gate assembly: {0}")]
    Assembly(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Usage(_) | Error::Config(_) | Error::OutOfRange { .. } | Error::Csv(_) => true,
            Error::GateRun { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
