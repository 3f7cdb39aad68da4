use thiserror::Error;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or unreadable input file.
    Format,
    /// A logarithm or division left its domain.
    Numeric,
    /// A caller-side precondition was not met.
    Precondition,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operand parameters differ: {0}")]
    ParamMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("window ({t_a}, {t_b}) is not contained in pulse interval ({start}, {end})")]
    Containment {
        t_a: f64,
        t_b: f64,
        start: f64,
        end: f64,
    },

    #[error("constant input {value} cannot reach threshold {theta} with leak {alpha}")]
    LeakCeiling { theta: f64, alpha: f64, value: f64 },

    #[error("logarithm argument {argument} is non-positive in window {window} ({t_a}, {t_b})")]
    LogDomain {
        window: usize,
        t_a: f64,
        t_b: f64,
        argument: f64,
    },

    #[error("logarithm argument {argument} is non-positive at shift {shift}, window {window}")]
    ShiftLogDomain {
        shift: usize,
        window: usize,
        argument: f64,
    },

    #[error("reference train does not cover window ({t_a}, {t_b})")]
    ReferenceCoverage { t_a: f64, t_b: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<PulseError> },
}

impl PulseError {
    pub fn class(&self) -> ErrorClass {
        match self {
            PulseError::Context { source, .. } => source.class(),
            PulseError::Format { .. } | PulseError::Io(_) => ErrorClass::Format,
            PulseError::LeakCeiling { .. }
            | PulseError::LogDomain { .. }
            | PulseError::ShiftLogDomain { .. }
            | PulseError::Degenerate(_) => ErrorClass::Numeric,
            PulseError::InvalidParams(_)
            | PulseError::ParamMismatch(_)
            | PulseError::Precondition(_)
            | PulseError::Containment { .. }
            | PulseError::ReferenceCoverage { .. } => ErrorClass::Precondition,
        }
    }

    /// Wraps the error with a description of what was being run.
    pub fn context(self, context: impl Into<String>) -> Self {
        PulseError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        PulseError::Format {
            line,
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for PulseError {
    fn from(e: std::io::Error) -> Self {
        PulseError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PulseError>;
