use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("padding must be suffix-only: ABSENT at position {position} precedes a present field")]
    InteriorPadding { position: usize },
    #[error("empty cluster{}", .cluster.map(|c| format!(" {c}")).unwrap_or_default())]
    EmptyCluster { cluster: Option<usize> },
    #[error("message {index} labeled with both class {first} and class {second}")]
    ConflictingLabels { index: usize, first: usize, second: usize },
    #[error("pair ({0}, {1}) is required to be both must-link and cannot-link")]
    InconsistentConstraints(usize, usize),
    #[error("requested {k} clusters for {n} messages")]
    TooManyClusters { k: usize, n: usize },
    #[error("no labeled points to evaluate")]
    NoLabels,
    #[error("penalty context is stale: metrics changed since the max-separated pairs were computed")]
    StaleContext,
    #[error("{path}line {line}: {message}", path = .path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse { path: Option<PathBuf>, line: usize, message: String },
    #[error("cannot sample {requested} messages from {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("message {index} ({source_id}) matches no abstraction rule: {tokens}")]
    UnmatchedMessage { index: usize, source_id: String, tokens: String },
    #[error("invalid synthetic corpus spec: {0}")]
    BadSpec(String),
    #[error("invalid rule set: {0}")]
    BadRules(String),
    #[error("class {class} has {available} members, {requested} labels requested")]
    InsufficientLabels { class: usize, requested: usize, available: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by the caller's data rather than by a bug.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Invariant(_) | Error::StaleContext)
    }
}
