use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an API contract (mismatched lengths, wrong link kind, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("frequency {frequency_hz:.6e} Hz is outside every WDM channel band")]
    FrequencyLookup { frequency_hz: f64 },

    #[error(
        "backward-pump shooting did not converge after {iterations} iterations \
         (max relative boundary residual {residual:.3e})"
    )]
    Shooting { iterations: usize, residual: f64 },

    #[error(
        "negative or non-finite power at z = {z_m:.3} m with dz = {dz_m} m; retry with a smaller dz"
    )]
    StepSize { z_m: f64, dz_m: f64 },

    #[error(
        "weighted least-squares fit of degree {degree} is degenerate \
         (condition estimate {condition:.3e}); lower n_psi"
    )]
    FitDegenerate { degree: usize, condition: f64 },

    #[error("span-integral oracle needs more than {max_points} points to resolve the integrand")]
    OracleResolution { max_points: usize },

    #[error(
        "quadrature on island {island} did not reach rel. tol {tolerance:.1e} \
         after {levels} refinement levels (last rel. change {rel_change:.3e})"
    )]
    Quadrature {
        island: String,
        tolerance: f64,
        levels: usize,
        rel_change: f64,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a location hint such as `span 2, island (0,1,1)`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with every context layer removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
