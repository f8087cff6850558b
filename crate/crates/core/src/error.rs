use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor product of an empty factor list")]
    EmptyProduct,

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("angle is not finite: {0}")]
    NonFiniteAngle(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid bipartition cut: {0}")]
    InvalidCut(String),

    #[error("invalid column pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("no angle assigned to symbol a{symbol},{column}")]
    MissingSymbol { symbol: u16, column: u8 },

    #[error("UOM parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("product set is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("{m} vectors cannot be removed from a space of dimension {d}")]
    TooManyVectors { m: usize, d: usize },

    #[error("density operator invalid: {0}")]
    InvalidDensity(String),

    #[error("overlap q = 1 gives an infinite measure")]
    InfiniteMeasure,

    #[error("witness search budget of {budget} nodes exhausted")]
    BudgetExhausted { budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
