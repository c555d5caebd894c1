use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grammar error: {0}")]
    Grammar(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("cannot step a terminal state")]
    TerminalState,
    #[error("no oracle for this state: {0}")]
    NoOracle(String),
    #[error("state is not terminal")]
    NonTerminal,
    #[error("episode is not terminal")]
    NonTerminalEpisode,
    #[error("scorer returned an empty beam")]
    EmptyBeam,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("value function returned no predictions")]
    EmptyPrediction,
    #[error("node has no edges")]
    NoEdges,
    #[error("element cannot be brought on screen: {0}")]
    OffscreenElement(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed file: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
