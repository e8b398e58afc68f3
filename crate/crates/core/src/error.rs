use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid {n}x{m}: subdivisions require integers m > n >= 2")]
    InvalidGrid { n: u32, m: u32 },

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    /// An argument violates an operation's precondition.
    #[error("{0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Generation would exceed the configured cell cap at `level`.
    #[error("level {level} would hold about {projected:.3e} cells, above the cap of {cap}")]
    CellCap {
        level: u32,
        projected: f64,
        cap: u64,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad arguments or bad input data, as opposed
    /// to resource limits or I/O failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid { .. }
                | Error::InvalidProbability(_)
                | Error::Domain(_)
                | Error::Unsupported(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}
