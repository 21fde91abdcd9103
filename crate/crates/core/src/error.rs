use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("wavefunctions live on different grids")]
    GridMismatch,

    #[error("state has zero (or non-finite) norm")]
    ZeroNorm,

    #[error(
        "step size too large: dt = {dt:.6e} exceeds the stability bound \
         dt <= {bound} hbar / (kappa L_max^2) = {:.6e} (kappa = {kappa:.6e}, L_max = {distance:.6e}, \
         per-step exponent {exponent:.3e})",
        .dt * .bound / .exponent
    )]
    StepSize {
        exponent: f64,
        bound: f64,
        dt: f64,
        kappa: f64,
        distance: f64,
    },

    #[error("norm underflow at t = {t:.6e}: all amplitudes vanished")]
    Underflow { t: f64 },

    #[error("t_max = {t_max:.6e} exceeded before {what} (final value {last_value:.6e})")]
    TimeLimit {
        t_max: f64,
        what: &'static str,
        last_value: f64,
    },

    #[error("{failed} of {trials} collapse trials did not collapse before t_max")]
    CollapseIncomplete { failed: usize, trials: usize },

    #[error("sweep member {index} (value {value:.6e}) failed: {source}")]
    SweepMember {
        index: usize,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit status for the CLI: 2 validation, 3 runtime, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::GridMismatch => 2,
            Error::Io(_) | Error::Json(_) => 4,
            Error::SweepMember { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
