use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented domain (negative mass, angle out of range, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// `D·R` (or `B_m`) is singular or worse conditioned than the accepted threshold.
    #[error("singular transmission topology: {0}")]
    SingularTopology(String),

    /// The task Jacobian or inertia matrix is singular at the requested pose.
    #[error("singular pose: {0}")]
    SingularPose(String),

    /// An operation was requested outside of the regime where it is defined.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Forward driving is impossible because the forward efficiency is not positive.
    #[error("transmission is forward-locked (eta_f = {eta_f})")]
    ForwardLocked { eta_f: f64 },

    /// Integration or linear-solve failure.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid model: {0}")]
    Semantic(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the `ddyn` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch(_)
            | Error::Precondition(_)
            | Error::ForwardLocked { .. }
            | Error::Syntax { .. }
            | Error::Semantic(_)
            | Error::Io(_) => 2,
            Error::SingularTopology(_) | Error::SingularPose(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
