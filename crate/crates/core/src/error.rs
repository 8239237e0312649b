//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A waveform with no positive amplitude cannot be rescaled.
    #[error("degenerate waveform: all amplitudes are zero")]
    DegenerateWaveform,

    /// A channel with zero gain on every tone admits no matched design.
    #[error("degenerate channel: all tone gains are zero")]
    DegenerateChannel,

    /// A power delay profile must carry at least one strictly positive entry.
    #[error("degenerate power delay profile: no strictly positive mean power")]
    DegenerateProfile,

    #[error("length mismatch in {context}: expected {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Diode Taylor coefficients are only defined here for orders 2 and 4.
    #[error("unsupported diode coefficient order {0} (only 2 and 4)")]
    UnsupportedDiodeOrder(u32),

    /// The time-domain evaluator is a test fixture with strict preconditions.
    #[error("oracle precondition violated: {0}")]
    OraclePrecondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("self-test failed: {0}")]
    SelfTest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
