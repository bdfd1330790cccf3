use std::fmt;
use std::path::Path;

use hotelwatt::Error;
use hotelwatt_weather::WeatherError;

/// Failure class of a CLI run; each maps to one process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Training,
    Provider,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Training => 3,
            Kind::Provider => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Data,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::data(format!("{}: {err}", path.display()))
    }

    /// Reclassifies a library error raised while checking flags.
    pub fn into_usage(self) -> Self {
        CliError {
            kind: Kind::Usage,
            ..self
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let kind = match err {
            Error::Argument(_) => Kind::Usage,
            Error::Diverged { .. } | Error::Search(_) => Kind::Training,
            _ => Kind::Data,
        };
        CliError {
            kind,
            message: err.to_string(),
        }
    }
}

impl From<WeatherError> for CliError {
    fn from(err: WeatherError) -> Self {
        let kind = match err {
            WeatherError::Argument(_) => Kind::Usage,
            WeatherError::Data(_) | WeatherError::Io { .. } => Kind::Data,
            WeatherError::MissingKey
            | WeatherError::Provider { .. }
            | WeatherError::Transport(_)
            | WeatherError::Incomplete { .. }
            | WeatherError::Payload(_) => Kind::Provider,
        };
        CliError {
            kind,
            message: err.to_string(),
        }
    }
}
