use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate cell {cell}: volume {volume}")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("cell {0} is not hexahedral")]
    NonHexCell(usize),

    #[error("cell count overflow: {0}")]
    CellCountOverflow(String),

    #[error("refined mesh would exceed memory budget: {cells} cells > {budget} budget")]
    MemoryBudgetExceeded { cells: u64, budget: u64 },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero diagonal entry at cell {0}")]
    ZeroDiagonal(usize),

    #[error("stale block map: {0}")]
    StaleBlockMap(String),

    #[error("solver diverged: non-finite value at iteration {0}")]
    SolverDiverged(usize),

    #[error("model error: {0}")]
    Model(String),

    #[error("file format error in {path}: {reason}")]
    FileFormat { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown strategy {name:?} for {kind} (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::FileFormat {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
