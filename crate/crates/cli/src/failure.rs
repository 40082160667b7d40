use std::process::ExitCode;

use dirac_eta::Error;
use serde::Serialize;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_IO: u8 = 5;
pub const EXIT_SELFTEST: u8 = 6;

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Config,
    Validation,
    Numeric,
    Io,
}

impl Kind {
    fn exit_code(self) -> u8 {
        match self {
            Kind::Config => EXIT_CONFIG,
            Kind::Validation => EXIT_VALIDATION,
            Kind::Numeric => EXIT_NUMERIC,
            Kind::Io => EXIT_IO,
        }
    }
}

/// A failure reported as `{"error": {...}}` on stderr.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: Kind,
    pub exit_code: u8,
    /// Offending flag, config path or parameter.
    pub field: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl Failure {
    fn new(kind: Kind, field: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            kind,
            exit_code: kind.exit_code(),
            field: field.into(),
            message: message.into(),
            line: None,
            column: None,
        }
    }

    pub fn usage(message: String) -> Self {
        Failure::new(Kind::Config, "arguments", message.trim_end().to_string())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Failure::new(Kind::Config, field, message)
    }

    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Failure::new(Kind::Validation, field, message)
    }

    pub fn io(field: impl Into<String>, message: impl Into<String>) -> Self {
        Failure::new(Kind::Io, field, message)
    }

    pub fn report(&self) -> ExitCode {
        let body = serde_json::json!({ "error": self });
        eprintln!("{}", serde_json::to_string_pretty(&body).expect("failure serializes"));
        ExitCode::from(self.exit_code)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Config { field, line, column, .. } => {
                let mut f = Failure::new(Kind::Config, field, message);
                if line > 0 {
                    f.line = Some(line);
                    f.column = Some(column);
                }
                f
            }
            Error::Parameter { name, .. } => Failure::new(Kind::Validation, name, message),
            Error::InvalidSurface(_) => Failure::new(Kind::Validation, "surface", message),
            Error::NontrivialFiberSpin { .. } => Failure::new(Kind::Validation, "spin.k", message),
            Error::Domain { op, .. } => Failure::new(Kind::Validation, op, message),
            Error::Pole { function, .. } => Failure::new(Kind::Numeric, function, message),
            Error::TruncationBudget { op, .. } => Failure::new(Kind::Numeric, op, message),
            Error::QuadratureTolerance { .. } => Failure::new(Kind::Numeric, "quadrature", message),
            Error::FitResidual { .. } | Error::SingularFit(_) => Failure::new(Kind::Numeric, "small_time_fit", message),
            Error::Continuation(_) => Failure::new(Kind::Numeric, "continuation", message),
        }
    }
}
