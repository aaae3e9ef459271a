use thiserror::Error;

use crate::system_model::BalanceCondition;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unit index {index} outside 1..={n}")]
    UnitIndexOutOfRange { index: usize, n: usize },

    #[error("unit count {0} outside supported range 1..=30")]
    UnitCount(usize),

    #[error("BC1 needs an even number of units (n = {0})")]
    OddNUnsupported(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no minimum tie-set exists for n = {n}, k = {k} under {bc}")]
    NoTieSets {
        n: usize,
        k: usize,
        bc: BalanceCondition,
    },

    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("no convergence after {0} terms")]
    NonConvergence(usize),

    #[error("invalid phase-type representation: {0}")]
    InvalidPhaseType(String),

    #[error("unknown inter-shock preset `{0}` (expected ER, EXP or HE)")]
    UnknownPreset(String),
}
