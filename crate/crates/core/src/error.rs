use std::path::PathBuf;

/// Errors produced by loading, validating and scoring geographic graphs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("node {0} has edges but no coordinate")]
    MissingCoordinate(u64),

    #[error("unknown node {0}")]
    UnknownNode(u64),

    #[error("node index {index} out of range for graph with {len} nodes")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("invalid coordinate ({lat}, {lon})")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("invalid edge weight {weight} between {u} and {v}")]
    InvalidWeight { u: u64, v: u64, weight: f64 },

    #[error("partition covers {partition} nodes but graph has {graph}")]
    PartitionMismatch { partition: usize, graph: usize },

    #[error("partition does not assign node {0}")]
    Unassigned(u64),

    #[error("empty community")]
    EmptyCommunity,

    #[error("centroid of an empty point set")]
    EmptyPointSet,

    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("oracle supports 1..={max} nodes, got {n}")]
    OracleRange { n: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
