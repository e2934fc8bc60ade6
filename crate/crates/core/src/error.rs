use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),
    #[error("invalid zeta sequence: {0}")]
    InvalidZeta(String),
    #[error("expected cost diverges: partial cost {partial} reached the cap before the failure probability became negligible")]
    Divergent { partial: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("process {0} is saturated at the pivot (hazard undefined)")]
    Saturated(usize),
    #[error("no schedule: {0}")]
    NoSchedule(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
