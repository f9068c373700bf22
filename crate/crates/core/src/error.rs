use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(String),

    #[error("node `{id}` has a non-finite coordinate")]
    NonFiniteCoordinate { id: String },

    #[error("edge #{position} references unknown node `{id}`")]
    DanglingEdge { position: usize, id: String },

    #[error("edge #{position} is a self-loop on node `{id}`")]
    SelfLoop { position: usize, id: String },

    #[error("network has {nodes} node(s); at least {required} required")]
    DegenerateNetwork { nodes: usize, required: usize },

    #[error("invalid neighborhood spec: {0}")]
    InvalidSpec(String),

    #[error("unknown node index {0}")]
    UnknownNode(usize),

    #[error("knn window of {k} requested but only {n} node(s) available")]
    InsufficientNodes { k: usize, n: usize },

    #[error("spec {spec} cannot be applied to a network of {n} node(s)")]
    SpecMismatch { spec: String, n: usize },

    #[error("point index covers {index} point(s) but the network has {network} node(s)")]
    IndexMismatch { index: usize, network: usize },

    #[error("no neighborhood specs supplied")]
    EmptySpecList,

    #[error("results were computed over different networks")]
    MixedNetworks,

    #[error("at least {required} specs required, got {got}")]
    TooFewSpecs { required: usize, got: usize },

    #[error("sweep needs at least one parameter value")]
    EmptyParams,

    #[error("sweep parameters must be strictly increasing")]
    UnorderedParams,

    #[error("statistic `{0}` was not computed for this result")]
    MissingStatistic(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node `{id}` at ({x}, {y}) falls outside the grid")]
    NodeOutsideGrid { id: String, x: f64, y: f64 },

    #[error("Gi* needs at least 2 units, got {0}")]
    TooFewUnits(usize),

    #[error("all values are equal; Gi* z-scores are undefined")]
    ZeroVariance,

    #[error("surfaces are defined on different grids")]
    GridMismatch,

    #[error("{edges} edges cannot be placed among {pairs} node pairs")]
    TooManyEdges { edges: usize, pairs: usize },

    #[error("replicate count must be at least 1")]
    NoReplicates,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}:{line}: edge references unknown node `{id}`")]
    DanglingEdgeAt {
        path: PathBuf,
        line: u64,
        id: String,
    },

    #[error("{path}:{line}: self-loop on node `{id}`")]
    SelfLoopAt {
        path: PathBuf,
        line: u64,
        id: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
