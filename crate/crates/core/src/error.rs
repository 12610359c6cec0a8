use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {what} (offending argument {arg:e})")]
    Range { what: String, arg: f64 },

    #[error("numeric error: {what} (achieved {achieved:e}, requested {requested:e})")]
    Numeric {
        what: String,
        achieved: f64,
        requested: f64,
    },

    #[error("aliasing error: {0}")]
    Aliasing(String),

    #[error("state escape: {0}")]
    StateEscape(String),

    #[error("invariant failure: {0}")]
    Invariant(String),

    #[error("horizon error: {0}")]
    Horizon(String),

    #[error("config error at line {line}: `{key}`: {msg}")]
    Config {
        line: usize,
        key: String,
        msg: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 2,
            Error::Numeric { .. }
            | Error::Range { .. }
            | Error::Aliasing(_)
            | Error::StateEscape(_)
            | Error::Horizon(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::invariant("x").exit_code(), 2);
        assert_eq!(Error::Aliasing("x".into()).exit_code(), 3);
        assert_eq!(
            Error::Numeric { what: "x".into(), achieved: 1.0, requested: 0.1 }.exit_code(),
            3
        );
        assert_eq!(Error::domain("x").exit_code(), 1);
    }
}
