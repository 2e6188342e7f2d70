use done_core::DoneError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Bad input: unknown names, malformed or inconsistent configuration.
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] DoneError),
}

impl BenchError {
    /// 2 for usage and configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Io { .. } | BenchError::Core(_) => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        BenchError::Io {
            context: context.into(),
            source,
        }
    }
}
