use std::fmt;

use expspan_core::{Category, Error};

/// Process exit codes. `2` is left to clap for usage errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Parse = 3,
    Invalid = 4,
    Precision = 5,
    Cap = 6,
    Numerical = 7,
    Io = 8,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(Kind::Parse, message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(Kind::Invalid, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(Kind::Io, message)
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            Kind::Parse => "parse",
            Kind::Invalid => "invalid",
            Kind::Precision => "precision",
            Kind::Cap => "cap",
            Kind::Numerical => "numerical",
            Kind::Io => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e.category() {
            Category::Parse => Kind::Parse,
            Category::Invalid => Kind::Invalid,
            Category::Precision => Kind::Precision,
            Category::Cap => Kind::Cap,
            Category::Numerical => Kind::Numerical,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(Kind::Numerical, format!("serialization failed: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_categories_get_distinct_codes() {
        let errors = [
            Error::Parse("x".into()),
            Error::Invalid("x".into()),
            Error::PrecisionExhausted { digits: 1, condition: "x".into() },
            Error::DimensionCap { dim: 2, cap: 1 },
            Error::ResidualFloor { residual: "1".into(), floor: "0".into() },
        ];
        let mut codes: Vec<i32> = errors.into_iter().map(|e| CliError::from(e).code()).collect();
        codes.push(CliError::io("x").code());
        assert_eq!(codes, vec![3, 4, 5, 6, 7, 8]);
    }
}
