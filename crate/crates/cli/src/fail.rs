//! Error classification for process exit codes.
//!
//! 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::fmt;

use seizdet_core::Error as CoreError;

/// An error tagged with its exit class. Most errors arrive untagged (IO,
/// parsing, core pipeline) and are classified in [`exit_code`].
#[derive(Debug)]
pub enum Fail {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fail::Usage(msg) | Fail::Data(msg) | Fail::Numeric(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for Fail {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Fail::Usage(msg.into()))
}

pub fn data(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Fail::Data(msg.into()))
}

/// Maps an error chain to the documented exit code: explicit [`Fail`] tags
/// win; core configuration errors count as usage, non-finite arithmetic as
/// numeric failure, and everything else (missing or malformed files,
/// shape and class problems) as a data error.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(fail) = cause.downcast_ref::<Fail>() {
            return match fail {
                Fail::Usage(_) => 1,
                Fail::Data(_) => 2,
                Fail::Numeric(_) => 3,
            };
        }
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::InvalidConfig(_) => 1,
                CoreError::NonFinite(_) => 3,
                _ => 2,
            };
        }
    }
    2
}
