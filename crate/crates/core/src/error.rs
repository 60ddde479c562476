use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("node {node} lists successor {succ}, which does not exist")]
    DanglingSuccessor { node: String, succ: String },

    #[error("node {0} has no successors")]
    NoSuccessors(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("game has {nodes} nodes, brute-force cap is {cap}")]
    CapExceeded { nodes: usize, cap: usize },

    #[error("game is not stopping: {0}")]
    NotStopping(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("witness does not match the instance: {0}")]
    WitnessMismatch(String),

    #[error("value is not a dyadic rational: {0}")]
    NotDyadic(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            msg: msg.into(),
        }
    }
}
