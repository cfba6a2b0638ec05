use std::fmt;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed or inconsistent input file.
    Schema(String),
    /// The planner could not satisfy the constraints.
    Infeasible(String),
    /// A solver or estimator broke down.
    Numerical(String),
    /// Files, locks and other environment trouble.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "schema error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<choreo_core::Error> for CliError {
    fn from(e: choreo_core::Error) -> Self {
        use choreo_core::Error as E;
        match e {
            E::Argument(m) | E::Validation(m) => CliError::Schema(m),
            E::Infeasible { reason } => CliError::Infeasible(reason),
            E::Numerical(m) | E::Estimation(m) => CliError::Numerical(m),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses JSON text, reporting the failing field path and line.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let at = if path.is_empty() || path == "." { String::new() } else { format!(" at `{path}`") };
        // serde_json appends the line and column to its message.
        CliError::Schema(format!("{what}{at}: {inner}"))
    })
}
