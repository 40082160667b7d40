use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A special function was evaluated at one of its poles.
    #[error("{function} has a pole at {at}")]
    Pole { function: &'static str, at: String },

    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("invalid surface data: {0}")]
    InvalidSurface(String),

    /// Malformed or inconsistent configuration input. `line`/`column` are 0
    /// when the problem was found after parsing.
    #[error("config error at {field}: {msg}")]
    Config {
        field: String,
        line: usize,
        column: usize,
        msg: String,
    },

    /// Eta and trace computations are only defined for spin structures that
    /// are trivial along the circle fiber.
    #[error("{op} requires a spin structure trivial along the fiber (eps_k = +1)")]
    NontrivialFiberSpin { op: &'static str },

    #[error("{op}: truncation budget of {max_terms} terms exhausted before the tail fell below {eps_tail:e}")]
    TruncationBudget {
        op: &'static str,
        max_terms: usize,
        eps_tail: f64,
    },

    #[error("quadrature on [{a}, {b}] did not reach tolerance: error {err:e} > {tol:e} after {intervals} intervals")]
    QuadratureTolerance {
        a: f64,
        b: f64,
        err: f64,
        tol: f64,
        intervals: usize,
    },

    #[error("asymptotic fit residual {residual:e} exceeds {limit:e}")]
    FitResidual { residual: f64, limit: f64 },

    #[error("asymptotic fit is singular: {0}")]
    SingularFit(String),

    #[error("analytic continuation diagnostics failed: {0}")]
    Continuation(String),

    #[error("invalid parameter {name}: {msg}")]
    Parameter { name: &'static str, msg: String },
}

impl Error {
    pub(crate) fn pole(function: &'static str, at: impl std::fmt::Display) -> Self {
        Error::Pole {
            function,
            at: at.to_string(),
        }
    }

    pub(crate) fn param(name: &'static str, msg: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            msg: msg.into(),
        }
    }
}
