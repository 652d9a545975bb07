//! Crate-wide error type.

/// Errors produced by the simulation, bound, and estimation stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two points expected to be distinct coincide.
    #[error("coincident points: {context}")]
    CoincidentPoints { context: &'static str },

    /// A distance or other strictly positive quantity was not positive.
    #[error("non-positive {name}: {value}")]
    NonPositive { name: &'static str, value: f64 },

    /// A link elevation hit ±90°, where azimuth derivatives blow up.
    #[error("singular geometry on the {link} link (cos(elevation) = 0)")]
    SingularGeometry { link: &'static str },

    /// An array was used with a steering composition for the wrong plane.
    #[error("array plane mismatch: expected {expected}, got {got}")]
    PlaneMismatch {
        expected: &'static str,
        got: &'static str,
    },

    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// An invalid configuration value.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The null-space beam design needs at least three BS antennas.
    #[error("infeasible beam design: need at least 3 BS antennas, have {antennas}")]
    InfeasibleBeamDesign { antennas: usize },

    /// The position-block information matrix could not be inverted.
    #[error("unidentifiable geometry: condition number {condition:.3e}")]
    UnidentifiableGeometry { condition: f64 },

    /// The iterative estimator produced a non-finite objective.
    #[error("estimator diverged (non-finite objective) in restart {restart}")]
    Divergence { restart: usize },

    /// An estimate carried no usable signal energy.
    #[error("degenerate input: {context}")]
    DegenerateInput { context: &'static str },

    /// Triangulation rays do not intersect in a well-posed way.
    #[error("degenerate geometry: triangulation system is singular")]
    DegenerateGeometry,

    #[error("i/o error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse config {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for errors that stem from bad inputs or configuration rather
    /// than from numerical failure. The CLI maps these to exit code 1 and
    /// everything else to exit code 2.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::CoincidentPoints { .. }
                | Error::NonPositive { .. }
                | Error::PlaneMismatch { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidParameter { .. }
                | Error::Io { .. }
                | Error::Json { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
