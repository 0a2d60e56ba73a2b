use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the geometric, calibration, perception and simulation
/// routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid depth {0}: depth must be finite and positive")]
    InvalidDepth(f64),

    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),

    #[error("undistortion of pixel ({u}, {v}) did not converge after {iterations} iterations (residual {residual:e})")]
    UndistortDiverged {
        u: f64,
        v: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not a rotation (orthogonality error {orthogonality_error:e}, det {det})")]
    InvalidRotation { orthogonality_error: f64, det: f64 },

    #[error("degenerate marker corners: {0}")]
    DegenerateTarget(String),

    #[error("marker pose refinement did not converge ({} iterations, last rms {:e} px)", trace.len(), trace.last().copied().unwrap_or(f64::NAN))]
    PoseDiverged { trace: Vec<f64> },

    #[error("pixel ({u}, {v}) lies outside the sampling area")]
    OutOfBounds { u: f64, v: f64 },

    #[error("no valid depth around ({u}, {v})")]
    InvalidSample { u: f64, v: f64 },

    #[error("normal matrix is ill-conditioned (condition number {condition_number:e}); add calibration views at both near and far distances")]
    IllConditioned { condition_number: f64 },

    #[error("no usable calibration samples")]
    EmptyCalibration,

    #[error("expected a {expected} depth image")]
    WrongDepthKind { expected: &'static str },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no jointly valid pixels to evaluate")]
    EmptyEvaluation,

    #[error("scans have different configurations")]
    ScanConfigMismatch,

    #[error("scan bin {bin}: range {range} does not exceed beta {beta}")]
    Encoding { bin: usize, range: f64, beta: f64 },

    #[error("{0} cell of the planning grid is occupied")]
    OccupiedEndpoint(&'static str),

    #[error("no feasible scenario after {attempts} attempts")]
    ScenarioGeneration { attempts: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
