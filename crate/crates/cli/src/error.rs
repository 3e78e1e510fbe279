use std::fmt;

/// Failure classes with distinct exit statuses.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration or input (exit 2).
    Config(String),
    /// Parameters outside a closed form's domain, e.g. past an SL(2,R) pole (exit 3).
    Domain(String),
    /// A request above a resource cap (exit 4).
    Resource(String),
    /// I/O and anything else (exit 1).
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<krylov_toda::Error> for CliError {
    fn from(e: krylov_toda::Error) -> Self {
        use krylov_toda::Error as E;
        match e {
            E::InvalidParameter(m) | E::Parse(m) | E::Schema(m) => CliError::Config(m),
            E::Domain(m) => CliError::Domain(m),
            E::Resource(m) => CliError::Resource(m),
            other => CliError::Other(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}
