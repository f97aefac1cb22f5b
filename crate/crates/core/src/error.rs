use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate mass in {field}: {mass:e}")]
    DegenerateMass { field: &'static str, mass: f64 },

    #[error("instability in {field}: minimum {min:e} below tolerance -{tol:e}")]
    Instability { field: &'static str, min: f64, tol: f64 },

    #[error("at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },

    #[error("no stationary state: {0}")]
    NoStationary(String),

    #[error("pulse infeasible: {0}")]
    Infeasible(String),

    #[error("series did not converge: {0}")]
    SeriesDivergence(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("insufficient samples: need {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("circle fit is degenerate (samples are collinear)")]
    CircleFitDegenerate,

    #[error("delay undefined: |c| = {0:e} is below threshold")]
    UndefinedDelay(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that stem from the numerics rather than from input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::AtTime { source, .. } => source.is_numeric(),
            Error::DegenerateMass { .. }
            | Error::Instability { .. }
            | Error::NoStationary(_)
            | Error::Infeasible(_)
            | Error::SeriesDivergence(_)
            | Error::Numeric(_)
            | Error::CircleFitDegenerate
            | Error::UndefinedDelay(_)
            | Error::InsufficientSamples { .. } => true,
            _ => false,
        }
    }

    pub(crate) fn at(self, t: f64) -> Error {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime { t, source: Box::new(e) },
        }
    }
}
