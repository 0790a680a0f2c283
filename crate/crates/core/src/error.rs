use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad flags or parameter values.
    Usage,
    /// Unreadable or malformed input files.
    Input,
    /// Inputs parsed but violate an operation's precondition.
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("point ({lat}, {lon}) is more than 5 degrees from the projection origin")]
    OutOfProjectionRange { lat: f64, lon: f64 },

    #[error("bearing is undefined between identical points")]
    UndefinedBearing,

    #[error("zero-length segment")]
    DegenerateSegment,

    #[error("polyline needs at least 2 distinct consecutive vertices")]
    DegeneratePolyline,

    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: no data rows", path.display())]
    EmptyInput { path: PathBuf },

    #[error("{}: line {line}: timestamp {got} is earlier than previous {prev}", path.display())]
    NonMonotonicTime {
        path: PathBuf,
        line: usize,
        prev: f64,
        got: f64,
    },

    #[error("duplicate edge id {0:?}")]
    DuplicateEdgeId(String),

    #[error("edge {0:?} has fewer than 2 distinct vertices")]
    TooFewVertices(String),

    #[error("node {node:?} referenced by edge {edge_id:?} is dangling: {reason}")]
    DanglingNode {
        node: String,
        edge_id: String,
        reason: String,
    },

    #[error("unknown edge id {0:?}")]
    UnknownEdge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory has {len} points, at least {needed} required")]
    TrajectoryTooShort { len: usize, needed: usize },

    #[error("k = {k} must be smaller than the number of points ({len})")]
    KTooLarge { k: usize, len: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) => ErrorClass::Usage,
            Error::Parse { .. }
            | Error::EmptyInput { .. }
            | Error::NonMonotonicTime { .. }
            | Error::DuplicateEdgeId(_)
            | Error::TooFewVertices(_)
            | Error::DanglingNode { .. }
            | Error::UnknownEdge(_)
            | Error::Config(_)
            | Error::KTooLarge { .. }
            | Error::Io { .. } => ErrorClass::Input,
            Error::InvalidCoordinate { .. }
            | Error::OutOfProjectionRange { .. }
            | Error::UndefinedBearing
            | Error::DegenerateSegment
            | Error::DegeneratePolyline
            | Error::TrajectoryTooShort { .. } => ErrorClass::Domain,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
