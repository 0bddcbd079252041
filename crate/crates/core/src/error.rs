use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // coalition games
    #[error("{players} players exceed the exact-method cap of {cap}")]
    PlayerCountExceedsExactCap { players: usize, cap: usize },
    #[error("invalid budget {budget} for {players} players")]
    InvalidBudget { budget: usize, players: usize },
    #[error("stratum of size {size} for player {player} has {available} coalitions, {requested} requested")]
    StratumExhausted {
        player: usize,
        size: usize,
        requested: usize,
        available: u128,
    },
    #[error("strata plan has {found} entries, game has {expected} players")]
    PlanMismatch { expected: usize, found: usize },
    #[error("oracle supports at most {max} players, got {players}")]
    TooManyPlayers { players: usize, max: usize },
    #[error("exact method infeasible: {groups} groups exceed the cap of {cap}")]
    ExactMethodInfeasible { groups: usize, cap: usize },

    // grouping
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("feature map does not cover encoded feature {0}")]
    IncompleteFeatureMap(usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("unknown column '{0}' in group map")]
    UnknownColumn(String),

    // value function and predictors
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("predictor failed on batch {batch}: {message}")]
    PredictorFailure { batch: usize, message: String },
    #[error("failed to spawn predictor process: {0}")]
    SpawnFailure(String),
    #[error("predictor protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("predictor did not answer within {0} ms")]
    Timeout(u64),
    #[error("unknown predictor '{0}'")]
    UnknownPredictor(String),
    #[error("bad predictor parameters: {0}")]
    BadParams(String),

    // pipeline
    #[error("segment length {segment_length} cannot hold three subsets with padding {padding}")]
    SegmentTooShort { segment_length: usize, padding: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("column '{0}' has zero spread on training rows")]
    DegenerateScale(String),
    #[error("requested {requested} windows, only {available} available")]
    InsufficientWindows { requested: usize, available: usize },
    #[error("row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("malformed data: {0}")]
    Data(String),

    // engine
    #[error("window {origin}: {source}")]
    Window {
        origin: usize,
        #[source]
        source: Box<Error>,
    },

    // analysis and heatmap
    #[error("event contains no frames")]
    EmptyEventWindow,
    #[error("truth group '{0}' is not a known group")]
    UnknownTruthName(String),
    #[error("nothing to render: no frames")]
    EmptyFrames,
    #[error("invalid heatmap spec: {0}")]
    InvalidHeatmap(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips [`Error::Window`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Window { source, .. } => source.root(),
            other => other,
        }
    }
}
