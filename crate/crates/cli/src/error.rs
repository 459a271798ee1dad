use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag, config key or value. `key` names the offending input.
    #[error("{}{message}", key.as_ref().map(|k| format!("{k}: ")).unwrap_or_default())]
    Usage { key: Option<String>, message: String },

    #[error("{context}: {source}")]
    Pricing {
        context: String,
        #[source]
        source: gmwb::Error,
    },

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn usage(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Usage {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub fn pricing(context: impl Into<String>, source: gmwb::Error) -> Self {
        CliError::Pricing {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 usage, 3 solver failure, 4 numerical failure,
    /// 1 for I/O trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Pricing { source, .. } if source.is_solver_failure() => 3,
            CliError::Pricing { source, .. } if source.is_numerical_failure() => 4,
            // Remaining core errors are rejected inputs.
            CliError::Pricing { .. } => 2,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "solver",
            4 => "numerical",
            _ => "io",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut record = serde_json::json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Usage { key: Some(key), .. } = self {
            record["key"] = serde_json::Value::String(key.clone());
        }
        serde_json::json!({ "error": record })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
