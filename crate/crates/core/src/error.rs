use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors are split by audience: `Invalid*` variants are definition problems
/// (bad input, caller can fix), the `*NonConvergence` variants are numerical
/// outcomes that callers may want to surface with diagnostics rather than as
/// plain failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transition matrix must be square ({rows} rows, row {row} has {cols} entries)")]
    NonSquareMatrix {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("transition matrix entries must be 0 or 1 (row {row}, column {col} is {value})")]
    NonBinaryEntry { row: usize, col: usize, value: f64 },

    #[error("alphabet must be nonempty")]
    EmptyAlphabet,

    #[error("symbol {symbol} has no admissible {} (matrix {} {symbol} is all zero)",
            if *outgoing { "successor" } else { "predecessor" },
            if *outgoing { "row" } else { "column" })]
    StrandedSymbol { symbol: usize, outgoing: bool },

    #[error("operation `{op}` is defined for one-dimensional shift spaces only")]
    OneDimensionalOnly { op: &'static str },

    #[error("enumeration of {required} items exceeds the cap of {cap}")]
    EnumerationCap { required: u128, cap: usize },

    #[error("word {word:?} is not admissible for this space")]
    InadmissibleWord { word: String },

    #[error("window must be at least 1")]
    ZeroWindow,

    #[error("potential table does not cover the admissible {window}-words exactly: {detail}")]
    PotentialTableMismatch { window: usize, detail: String },

    #[error("pressure requires a primitive transition structure; uniqueness of the equilibrium state is not guaranteed here")]
    NotPrimitive,

    #[error("no periodic point of period {n} exists for this space")]
    EmptyPeriodicSet { n: usize },

    #[error("power iteration did not bracket the dominant eigenvalue after {iterations} iterations (bracket width {width:e})")]
    EigenNonConvergence { iterations: usize, width: f64 },

    #[error("transition matrix row {row} sums to {sum} (must be 1 within {tol:e})")]
    NotStochastic { row: usize, sum: f64, tol: f64 },

    #[error("stochastic matrix is reducible: states {component:?} form a trapped component")]
    ReducibleChain { component: Vec<usize> },

    #[error("stationary vector residual {residual:e} exceeds {tol:e}")]
    StationaryResidual { residual: f64, tol: f64 },

    #[error("supplied stationary vector is not invariant (residual {residual:e} exceeds {tol:e})")]
    NotStationary { residual: f64, tol: f64 },

    #[error("mixture weights must be positive and sum to 1 (got sum {sum})")]
    BadMixtureWeights { sum: f64 },

    #[error("measures in a mixture must share the same base space")]
    SpaceMismatch,

    #[error(
        "transition probability at ({row}, {col}) is {value} but that transition is not admissible"
    )]
    UnsupportedTransition { row: usize, col: usize, value: f64 },

    #[error("dual ascent did not converge after {iterations} iterations (gradient norm {grad_norm:e}, |t| = {t_norm:e})")]
    DualNonConvergence {
        iterations: usize,
        grad_norm: f64,
        t_norm: f64,
    },

    #[error("observable family is empty")]
    EmptyFamily,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("strip width {width} outside supported range 2..={max}")]
    BadStripWidth { width: usize, max: usize },

    #[error("box sides must be at least 1 (got {a1} x {a2})")]
    BadBoxSides { a1: usize, a2: usize },

    #[error("{context}: {message}")]
    InvalidInput { context: String, message: String },
}

impl Error {
    pub fn invalid(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for outcomes that stem from numerics rather than bad definitions.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNonConvergence { .. }
                | Error::DualNonConvergence { .. }
                | Error::StationaryResidual { .. }
        )
    }
}
