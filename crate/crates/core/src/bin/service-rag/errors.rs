use std::fmt;
use std::path::Path;

use service_rag::config::ConfigError;
use service_rag::corpus::CorpusError;
use service_rag::eval::EvalError;
use service_rag::generation::GenerationError;
use service_rag::index::IndexError;
use service_rag::tasks::TaskError;
use service_rag::vectors::VectorError;

/// Exit codes: 0 success, 1 usage, 2 input/data, 3 provider, 4 internal.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Provider(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::Data(m)
            | CliError::Provider(m)
            | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

/// Flatten an error and its sources into one line.
fn chain(err: &dyn std::error::Error) -> String {
    let mut out = err.to_string();
    let mut source = err.source();
    while let Some(cause) = source {
        let text = cause.to_string();
        if !out.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
        source = cause.source();
    }
    out
}

pub fn data_io(context: &str, path: &Path, err: &std::io::Error) -> CliError {
    CliError::Data(format!("cannot {context} {}: {err}", path.display()))
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::Invalid { .. } => CliError::Usage(chain(&err)),
            _ => CliError::Data(chain(&err)),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        CliError::Data(chain(&err))
    }
}

impl From<VectorError> for CliError {
    fn from(err: VectorError) -> Self {
        match err {
            VectorError::EmptyText { .. } => CliError::Data(chain(&err)),
            VectorError::MissingEndpoint
            | VectorError::MissingApiKey
            | VectorError::Provider(_)
            | VectorError::BadResponse { .. } => CliError::Provider(chain(&err)),
            VectorError::DimMismatch { .. } | VectorError::ZeroNorm => {
                CliError::Internal(chain(&err))
            }
        }
    }
}

impl From<IndexError> for CliError {
    fn from(err: IndexError) -> Self {
        match err {
            IndexError::InvalidK => CliError::Usage(chain(&err)),
            IndexError::Vector(inner) => inner.into(),
            _ => CliError::Data(chain(&err)),
        }
    }
}

impl From<GenerationError> for CliError {
    fn from(err: GenerationError) -> Self {
        match err {
            GenerationError::NoMessages => CliError::Internal(chain(&err)),
            _ => CliError::Provider(chain(&err)),
        }
    }
}

impl From<TaskError> for CliError {
    fn from(err: TaskError) -> Self {
        match err {
            TaskError::EmptyInput { .. } => CliError::Data(chain(&err)),
            TaskError::InvalidTarget => CliError::Usage(chain(&err)),
            TaskError::Generation(inner) => inner.into(),
            TaskError::Vector(inner) => inner.into(),
            TaskError::Index(inner) => inner.into(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::InvalidConfig { .. }
            | EvalError::InvalidK
            | EvalError::InvalidReadingSpeed { .. } => CliError::Usage(chain(&err)),
            EvalError::Vector(inner) => inner.into(),
            EvalError::Index(inner) => inner.into(),
            _ => CliError::Data(chain(&err)),
        }
    }
}
