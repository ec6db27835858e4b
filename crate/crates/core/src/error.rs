use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid class table: {0}")]
    ClassTable(String),

    #[error("invalid map: {0}")]
    Map(String),

    #[error("invalid occupancy grid: {0}")]
    Occupancy(String),

    #[error("invalid trajectory: {0}")]
    Trajectory(String),

    #[error("no trajectories")]
    NoTrajectories,

    #[error("trajectory {traj} leaves the map at step {step}")]
    TrajectoryOutOfBounds { traj: usize, step: usize },

    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },

    #[error("line {line}: dimension mismatch: {msg}")]
    DimensionMismatch { line: usize, msg: String },

    #[error("line {line}: class id {id} out of range for {classes} classes")]
    ClassIdOverflow { line: usize, id: u64, classes: usize },

    #[error("line {line}: occupancy mass {mass} ≠ 1")]
    OccupancyMass { line: usize, mass: f64 },

    #[error("line {line}: non-adjacent step at index {index}")]
    NonAdjacentStep { line: usize, index: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid generator spec: {0}")]
    GeneratorSpec(String),

    #[error("generator failed to produce connected map")]
    GeneratorFailed,

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("degenerate map")]
    DegenerateMap,

    #[error("invalid state ({x}, {y}): {reason}")]
    InvalidState { x: usize, y: usize, reason: &'static str },

    #[error("model has no classes named {}", .0.join(", "))]
    ClassMismatch(Vec<String>),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid hyperparameters: {0}")]
    Hyper(String),

    #[error("no walkable cells")]
    NoWalkable,

    #[error("all endpoint weight mass is zero")]
    ZeroEndpointMass,

    #[error("fewer than two candidate endpoint states")]
    TooFewEndpoints,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training: {0}")]
    Training(String),

    #[error("evaluation: {0}")]
    Eval(String),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
