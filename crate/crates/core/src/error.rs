use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dry cell {cell}: h = {h:e} is below the floor")]
    DryCell { cell: usize, h: f64 },

    #[error("CFL number {cfl:.4} >= 1 (dt = {dt}, dx = {dx})")]
    Cfl { cfl: f64, dt: f64, dx: f64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("linear system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("spectral radius estimation did not converge: {0}")]
    Convergence(String),

    #[error("model has no trained readout")]
    Untrained,

    #[error("refused: {0}")]
    Refused(String),

    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::DryCell { .. } => "dry-cell",
            Error::Cfl { .. } => "cfl",
            Error::Dimension { .. } => "dimension",
            Error::RankDeficient(_) => "rank-deficient",
            Error::Convergence(_) => "convergence",
            Error::Untrained => "untrained",
            Error::Refused(_) => "refused",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code for the category. Zero is reserved for success.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            Error::Format { .. } => 4,
            Error::DryCell { .. } | Error::Cfl { .. } => 5,
            Error::Dimension { .. } => 6,
            Error::RankDeficient(_) | Error::Convergence(_) => 7,
            Error::Untrained | Error::Refused(_) => 8,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            msg: msg.into(),
        }
    }
}
