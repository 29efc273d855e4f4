//! Error type shared across the core pipeline.

use alloc::string::String;
use core::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the core pipeline operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    InvalidConfig(String),
    /// Tensor or trace dimensions do not line up.
    ShapeMismatch(String),
    /// A declared element count disagrees with the actual count.
    LengthMismatch { expected: usize, actual: usize },
    /// A signal is shorter than the operation's minimum input.
    SignalTooShort { needed: usize, got: usize },
    /// The sample rate cannot represent the requested band.
    SampleRateTooLow { fs_hz: f64, high_cut_hz: f64 },
    /// Decimation was asked for a non-integer rate ratio.
    NonIntegerRatio { fs_in_hz: f64, fs_out_hz: f64 },
    /// An operation that needs both classes saw only one.
    SingleClass(&'static str),
    /// An operation received an empty input.
    EmptyInput(&'static str),
    /// Cross-validation needs more subjects than were provided.
    TooFewSubjects { needed: usize, got: usize },
    /// A statistic is undefined for the given sample size.
    TooFewSamples { needed: usize, got: usize },
    /// A layer index does not exist in the network spec.
    IndexOutOfRange { index: usize, len: usize },
    /// A computation produced a non-finite value.
    NonFinite(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::LengthMismatch { expected, actual } => {
                write!(f, "length mismatch: expected {expected}, got {actual}")
            }
            Error::SignalTooShort { needed, got } => {
                write!(f, "signal too short: need at least {needed} samples, got {got}")
            }
            Error::SampleRateTooLow { fs_hz, high_cut_hz } => write!(
                f,
                "sample rate {fs_hz} Hz too low for high cut {high_cut_hz} Hz"
            ),
            Error::NonIntegerRatio { fs_in_hz, fs_out_hz } => write!(
                f,
                "decimation ratio {fs_in_hz}/{fs_out_hz} Hz is not an integer"
            ),
            Error::SingleClass(what) => {
                write!(f, "{what} requires both seizure and non-seizure examples")
            }
            Error::EmptyInput(what) => write!(f, "{what} must not be empty"),
            Error::TooFewSubjects { needed, got } => {
                write!(f, "need at least {needed} subjects, got {got}")
            }
            Error::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} values, got {got}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "layer index {index} out of range for {len} layers")
            }
            Error::NonFinite(what) => write!(f, "{what} became non-finite"),
        }
    }
}

impl core::error::Error for Error {}
