use std::path::PathBuf;

use crate::grid::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cell ({}, {}) is outside the {width}x{height} grid", cell.x, cell.y)]
    OutOfBounds { cell: Cell, width: usize, height: usize },

    #[error("ray origin ({}, {}) is occupied", .0.x, .0.y)]
    InvalidOrigin(Cell),

    #[error("endpoint ({}, {}) is occupied", .0.x, .0.y)]
    InvalidEndpoint(Cell),

    #[error("no free cell on the {0} edge column")]
    NoEndpoint(&'static str),

    #[error("no path between ({}, {}) and ({}, {})", start.x, start.y, goal.x, goal.y)]
    NoPath { start: Cell, goal: Cell },

    #[error("path is empty")]
    EmptyPath,

    #[error("path cell ({}, {}) is occupied", .0.x, .0.y)]
    OccupiedPathCell(Cell),

    #[error("the configuration space contains no obstacle")]
    NoObstacle,

    #[error("start and goal coincide, chord length is zero")]
    UndefinedChord,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("gave up on parameter set {index} ({label}) after {attempts} attempts")]
    GenerationExhausted { index: usize, label: String, attempts: usize },

    #[error("environment {0} has no {1} value")]
    MissingKey(String, &'static str),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown export format {0:?}")]
    UnknownFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
