use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("acceptance matrix is {rows}x{cols} but dataset has {schools} schools and {universities} universities")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        schools: usize,
        universities: usize,
    },

    #[error("duplicate {kind} id: {id}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("duplicate true rank {rank} (universities {first} and {second})")]
    DuplicateTrueRank {
        rank: u32,
        first: String,
        second: String,
    },

    #[error("{kind} {id} must have a positive count")]
    ZeroCount { kind: &'static str, id: String },

    #[error("universities with zero total acceptances: {}", ids.join(", "))]
    ZeroAcceptance { ids: Vec<String> },

    #[error("unknown {kind} id in {context}: {id}")]
    UnknownId {
        kind: &'static str,
        context: String,
        id: String,
    },

    #[error("duplicate acceptance entry for ({school}, {university})")]
    DuplicateTriple { school: String, university: String },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: u64,
        message: String,
    },

    #[error("k = {k} exceeds item count {n}")]
    KExceedsItems { k: usize, n: usize },

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("feature vectors must share one dimension >= 1 and contain only finite values: {0}")]
    BadPointSet(String),

    #[error("seed university not in dataset: {id}")]
    SeedNotFound { id: String },

    #[error("seed university {id} has no acceptance data left at drop ratio {ratio}")]
    SeedLostData { id: String, ratio: f64 },

    #[error("estimator config: {0}")]
    BadConfig(String),

    #[error("temporary rankings cover inconsistent university sets")]
    InconsistentRuns,

    #[error("rank pairs: {0}")]
    BadRankPairs(String),

    #[error("need at least {need} items, got {got}")]
    TooFewItems { need: usize, got: usize },

    #[error("simulation parameters: {0}")]
    BadSimulationParams(String),

    #[error(
        "school assignment exceeded {retries} retries; worst offenders (school, stddev): {worst:?}"
    )]
    AssignmentRetriesExhausted {
        retries: u32,
        worst: Vec<(usize, f64)>,
    },

    #[error("run traces reference inconsistent node sets: {0}")]
    InconsistentTraces(String),

    #[error("missing true rank for university {id}")]
    MissingTruth { id: String },

    #[error("input file does not exist: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
