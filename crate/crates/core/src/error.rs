use thiserror::Error;

/// Errors produced by the numerical core and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid edge ({u}, {v}) for a graph with {n_nodes} nodes")]
    InvalidEdge { u: usize, v: usize, n_nodes: usize },

    #[error("class {class} has only {found} labeled nodes, need {needed}")]
    InsufficientLabels {
        class: usize,
        found: usize,
        needed: usize,
    },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("matrix of dimension {n} exceeds the dense eigensolver limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("empty index set")]
    EmptyMask,

    #[error("model is not linear: {0}")]
    NotLinear(String),

    #[error("bad config: {0}")]
    BadConfig(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("missing dataset: {0}")]
    MissingDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "ShapeError",
            Error::InvalidEdge { .. } => "InvalidEdge",
            Error::InsufficientLabels { .. } => "InsufficientLabels",
            Error::NonFinite { .. } => "NonFinite",
            Error::Numerical(_) => "NumericalError",
            Error::TooLarge { .. } => "TooLarge",
            Error::EmptyMask => "EmptyMask",
            Error::NotLinear(_) => "NotLinear",
            Error::BadConfig(_) => "BadConfig",
            Error::Dataset(_) => "DatasetError",
            Error::MissingDataset(_) => "MissingDataset",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}
