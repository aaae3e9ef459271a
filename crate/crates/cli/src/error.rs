use std::fmt;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// A validation check failed (exit 1).
    Validation(String),
    /// Bad input or output path (exit 2).
    Config(String),
    /// The configured system has no tie-sets (exit 3).
    Infeasible(String),
    /// A numerical routine failed (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible system: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ckngb::Error> for CliError {
    fn from(e: ckngb::Error) -> Self {
        use ckngb::Error as E;
        let msg = e.to_string();
        match e {
            E::NoTieSets { .. } => CliError::Infeasible(msg),
            E::SingularSystem(_) | E::NonConvergence(_) => CliError::Numerical(msg),
            E::UnitIndexOutOfRange { .. }
            | E::UnitCount(_)
            | E::OddNUnsupported(_)
            | E::InvalidConfig(_)
            | E::CapacityExceeded(_)
            | E::InvalidPhaseType(_)
            | E::UnknownPreset(_) => CliError::Config(msg),
        }
    }
}
