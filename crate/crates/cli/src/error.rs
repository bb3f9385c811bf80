use asep_core::AsepError;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] AsepError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Bad parameters exit with 2; failures to produce output with 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) | CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Domain(e) => e.kind(),
            CliError::Usage(_) => "UsageError",
            CliError::Io { .. } => "IoError",
            CliError::Csv(_) => "CsvError",
            CliError::Json(_) => "JsonError",
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}
