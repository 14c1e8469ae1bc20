use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate plane: |X^Y| = {norm:e} is below the span threshold")]
    DegeneratePlane { norm: f64 },

    #[error("singular coframe at {point:?}: |det e| = {det:e}")]
    SingularCoframe { point: [f64; 4], det: f64 },

    #[error("finite-difference step {step:e} on coordinate {coord} leaves the chart at {point:?}")]
    StepTooLarge {
        coord: usize,
        step: f64,
        point: [f64; 4],
    },

    #[error("parameter {name} = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("point {point:?} is outside the chart interior")]
    OutsideChart { point: [f64; 4] },

    #[error("2-form field does not supply analytic {0} partials")]
    UnsupportedField(&'static str),

    #[error("top eigenvalue of W+ is not simple (gap {gap:e}); supply a complex structure explicitly")]
    DegenerateWplus { gap: f64 },

    #[error("no complex structure available for metric {0}")]
    NotHermitian(String),

    #[error("expected a unit vector, got norm {norm}")]
    NonUnitVector { norm: f64 },

    #[error("top eigenvalue of W+ is {value:e} <= 0 at {point:?}")]
    NonpositiveTopEigenvalue { value: f64, point: [f64; 4] },

    #[error("holonomy integration error estimate {estimate:e} exceeds 1e-6; raise the step count")]
    StepCountTooSmall { estimate: f64 },

    #[error("surface is not adapted to the frame: {0}")]
    ChartDegeneracy(String),

    #[error("unknown metric {0:?}")]
    UnknownMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
