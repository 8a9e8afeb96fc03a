use std::path::PathBuf;

use crnkit::equilibrium::EquilibriumError;
use crnkit::kinetics::KineticsError;
use crnkit::oracle::OracleError;
use crnkit::ssa::SsaError;
use crnkit::stationary::StationaryError;
use crnkit::statespace::StateSpaceError;
use crnkit::structure::StructureError;
use crnkit::ParseError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAIL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NOT_WEAKLY_REVERSIBLE: i32 = 3;
    pub const NOT_COMPLEX_BALANCED: i32 = 4;
    pub const EXPLOSION: i32 = 5;
    pub const INCONCLUSIVE: i32 = 6;
    /// Class too large, not irreducible, or not summable.
    pub const STATE_SPACE: i32 = 7;
    /// A numerical solver failed.
    pub const NUMERICAL: i32 = 8;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("network is not weakly reversible, so it has no complex-balanced equilibrium and no product-form distribution")]
    NotWeaklyReversible,
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Stationary(#[from] StationaryError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Ssa(#[from] SsaError),
    #[error("class of x0 is infinite and no certified window exists; pass --window")]
    NoWindow,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use exit::*;
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse { .. } | CliError::Kinetics(_) => USAGE,
            CliError::NotWeaklyReversible => NOT_WEAKLY_REVERSIBLE,
            CliError::Structure(_) => NUMERICAL,
            CliError::Equilibrium(e) => match e {
                EquilibriumError::NotWeaklyReversible | EquilibriumError::NotStronglyConnected => NOT_WEAKLY_REVERSIBLE,
                EquilibriumError::NotComplexBalanced { .. } => NOT_COMPLEX_BALANCED,
                EquilibriumError::SolverDiverged { .. } => NUMERICAL,
                _ => USAGE,
            },
            CliError::Stationary(e) => match e {
                StationaryError::NotComplexBalanced { .. } => NOT_COMPLEX_BALANCED,
                StationaryError::NotSummable { .. } | StationaryError::TooLarge { .. } => STATE_SPACE,
                _ => USAGE,
            },
            CliError::StateSpace(e) => match e {
                StateSpaceError::InvalidState { .. } | StateSpaceError::Kinetics(_) => USAGE,
                _ => STATE_SPACE,
            },
            CliError::Oracle(e) => match e {
                OracleError::UnknownSolver(_) => USAGE,
                OracleError::TooLarge { .. } | OracleError::StateSpace(_) => STATE_SPACE,
                _ => NUMERICAL,
            },
            CliError::Ssa(e) => ssa_code(e),
            CliError::NoWindow => STATE_SPACE,
        }
    }
}

fn ssa_code(e: &SsaError) -> i32 {
    match e {
        SsaError::Explosion { .. } => exit::EXPLOSION,
        SsaError::Replicas { failures } => failures.first().map_or(exit::NUMERICAL, |f| ssa_code(&f.1)),
        SsaError::InvalidIntensity { .. } => exit::NUMERICAL,
        _ => exit::USAGE,
    }
}
