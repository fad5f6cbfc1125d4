use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least 2 objects, got {0}")]
    TooSmall(usize),
    #[error("matrix is not square: {len} values cannot form an {n_dims}x{n_dims} matrix")]
    NonSquare { n_dims: usize, len: usize },
    #[error("row {row} has {len} values, expected {n_dims}")]
    RaggedRow { row: usize, len: usize, n_dims: usize },
    #[error("non-finite distance {value} at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize, value: f32 },
    #[error("negative distance {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f32 },
    #[error("diagonal entry ({index}, {index}) is {value}, expected 0")]
    NonzeroDiagonal { index: usize, value: f32 },
    #[error("matrix is asymmetric at ({row}, {col}): {upper} vs {lower}")]
    AsymmetricBeyondTolerance { row: usize, col: usize, upper: f32, lower: f32 },

    #[error("grouping has {0} distinct group(s); at least 2 are required")]
    SingleGroup(usize),
    #[error("every one of the {0} objects is its own group; no within-group variation is left")]
    AllSingletonDegenerate(usize),
    #[error("grouping has {labels} labels but the matrix has {n_dims} objects")]
    GroupingSizeMismatch { labels: usize, n_dims: usize },

    #[error("tile size must be at least 1")]
    TileZero,
    #[error("worker count must be at least 1")]
    WorkerCountZero,
    #[error("permutation count must be at least 1")]
    NoPermutations,
    #[error("degenerate design: {n_groups} groups over {n_dims} objects (need 2 <= groups < objects)")]
    DegenerateDesign { n_dims: usize, n_groups: usize },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate sample id '{0}'")]
    DuplicateId(String),
    #[error("row id '{0}' does not appear in the header")]
    IdMismatch(String),
    #[error("column '{0}' not found in header")]
    MissingColumn(String),
    #[error("sample '{0}' has no metadata row")]
    MissingSample(String),
    #[error("sample '{0}' appears more than once in the metadata")]
    DuplicateSample(String),
    #[error("file holds {actual} bytes, expected {expected} for {n_dims}x{n_dims} 32-bit floats")]
    SizeMismatch { n_dims: usize, expected: u64, actual: u64 },

    #[error("could not allocate {bytes} bytes")]
    AllocationFailure { bytes: usize },
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ Error::File { .. } => e,
            e => Error::File { path: path.into(), source: Box::new(e) },
        }
    }

    /// Process exit code for the CLI: 2 for bad user input, 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::File { source, .. } => source.exit_code(),
            Error::ThreadPool(_) => 1,
            _ => 2,
        }
    }
}
