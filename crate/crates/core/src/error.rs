use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("outage rate must lie in (0, 1), got {0}")]
    RhoOutOfRange(f64),

    #[error("U matrix clamping exceeded tolerance: most negative eigenvalue {min_eig:e} vs largest {max_eig:e}")]
    UClamp { min_eig: f64, max_eig: f64 },

    #[error("no randomized candidate satisfied the safe constraint ({tried} tried)")]
    NoFeasibleCandidate { tried: usize },

    #[error("malformed conic program: {0}")]
    MalformedProgram(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
