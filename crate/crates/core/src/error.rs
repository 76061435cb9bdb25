use thiserror::Error;

/// Failure categories. The CLI maps each category onto an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input, schema or argument errors.
    Input,
    /// A standing assumption on the spectral data does not hold.
    Assumption,
    /// A numerical solver failed or the problem is too ill-conditioned.
    Solver,
    /// A time integrator guard tripped or the state blew up.
    Integrator,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("branch {branch}: eigenvalues {n} and {p} coincide")]
    DuplicateEigenvalue { branch: usize, n: usize, p: usize },

    #[error("branch {branch}: control coefficient b_{n} vanishes (approximate controllability lost)")]
    ZeroControlCoefficient { branch: usize, n: usize },

    #[error("branch {branch}: non-finite eigenvalue at n = {n}")]
    NonFiniteEigenvalue { branch: usize, n: usize },

    #[error("multiplicity {multiplicity} of eigenvalue #{index} exceeds the branch count {max}")]
    MultiplicityExceeded { index: usize, multiplicity: usize, max: usize },

    #[error("{what} = {value} lies outside the admissible open interval ({low}, {high})")]
    OutOfRange { what: &'static str, value: f64, low: f64, high: f64 },

    #[error("no admissible shift in [{lambda0}, {upper}] keeps distance {delta} from the forbidden set")]
    ShiftSearchExhausted { lambda0: f64, upper: f64, delta: f64 },

    #[error("matrix is singular to working precision (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("iteration did not converge after {iterations} steps (observed contraction ratio {ratio:.4})")]
    NonConvergence { iterations: usize, ratio: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("integrator guard: {0}")]
    IntegratorGuard(String),

    #[error("state blew up at t = {time} ({detail})")]
    BlowUp { time: f64, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("missing report section(s): {0}")]
    MissingSections(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DuplicateEigenvalue { .. }
            | Error::ZeroControlCoefficient { .. }
            | Error::NonFiniteEigenvalue { .. }
            | Error::MultiplicityExceeded { .. } => ErrorClass::Assumption,
            Error::ShiftSearchExhausted { .. }
            | Error::Singular { .. }
            | Error::NonConvergence { .. }
            | Error::Eigensolver(_) => ErrorClass::Solver,
            Error::IntegratorGuard(_) | Error::BlowUp { .. } => ErrorClass::Integrator,
            Error::InvalidInput(_)
            | Error::OutOfRange { .. }
            | Error::Dimension(_)
            | Error::MissingSections(_)
            | Error::Schema(_)
            | Error::Io { .. } => ErrorClass::Input,
        }
    }

    /// Short machine-readable tag used in JSON error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DuplicateEigenvalue { .. } => "duplicate_eigenvalue",
            Error::ZeroControlCoefficient { .. } => "zero_control_coefficient",
            Error::NonFiniteEigenvalue { .. } => "non_finite_eigenvalue",
            Error::MultiplicityExceeded { .. } => "multiplicity_exceeded",
            Error::OutOfRange { .. } => "out_of_range",
            Error::ShiftSearchExhausted { .. } => "shift_search_exhausted",
            Error::Singular { .. } => "singular",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Eigensolver(_) => "eigensolver",
            Error::IntegratorGuard(_) => "integrator_guard",
            Error::BlowUp { .. } => "blow_up",
            Error::Dimension(_) => "dimension",
            Error::MissingSections(_) => "missing_sections",
            Error::Schema(_) => "schema",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
