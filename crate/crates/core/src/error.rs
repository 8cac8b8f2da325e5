use thiserror::Error;

/// Errors produced by the interlock-drive models, simulator and tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid weight transfer: {0}")]
    InvalidWeightTransfer(String),

    #[error(
        "degenerate geometry: spike-to-center radius {radius:.3e} m is below {min_radius:.3e} m"
    )]
    DegenerateGeometry { radius: f64, min_radius: f64 },

    #[error("traction limit exceeded: spike load {required:.1} N needs depth {depth:.4} m, spike length is {max_depth:.4} m")]
    TractionLimitExceeded {
        required: f64,
        depth: f64,
        max_depth: f64,
    },

    #[error("invalid soil parameters: {0}")]
    InvalidSoil(String),

    #[error("invalid timing model: {0}")]
    InvalidTiming(String),

    #[error("invalid power model: {0}")]
    InvalidPower(String),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid phase sequence: {0}")]
    InvalidPhase(String),

    #[error("empty telemetry window")]
    EmptyWindow,

    #[error("prism and IMU time ranges do not overlap")]
    NoOverlap,

    #[error("bad cycle boundaries: {0}")]
    BadBoundaries(String),

    #[error("degenerate circle fit: {0}")]
    DegenerateFit(String),

    #[error("calibration failed: residual {residual:.3e} exceeds tolerance {tolerance:.3e} after {iterations} iterations")]
    CalibrationFailed {
        residual: f64,
        tolerance: f64,
        iterations: usize,
    },

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("invalid goal: {0}")]
    InvalidGoal(String),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by bad input or configuration rather than a
    /// failure while running a model.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidGeometry(_)
                | Error::InvalidWeightTransfer(_)
                | Error::InvalidSoil(_)
                | Error::InvalidTiming(_)
                | Error::InvalidPower(_)
                | Error::InvalidProgram(_)
                | Error::InvalidConfig(_)
                | Error::InvalidCalibration(_)
                | Error::InvalidGoal(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
