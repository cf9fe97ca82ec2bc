use thiserror::Error;

/// Errors raised across the toolkit. Variants carry the module that raised
/// them in their message so CLI output stays attributable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: invalid parameters: {0}")]
    InvalidGrid(String),
    #[error("grid: shift length {beta} is not an integer multiple of the spacing {spacing} (ratio {ratio})")]
    NonCommensurate { beta: f64, spacing: f64, ratio: f64 },
    #[error("grid: too coarse (m = {steps}, n = {n}); need m >= 4 and n >= 4m")]
    TooCoarse { steps: usize, n: usize },
    #[error("grid: field length {found} does not match grid size {expected}")]
    FieldSize { expected: usize, found: usize },

    #[error("operators: potential has imaginary part {0:e} above tolerance")]
    ComplexPotential(f64),
    #[error("operators: operands live on different grids or dimensions")]
    DimensionMismatch,
    #[error("operators: {rows} rows exceeds the dense cap of {cap}")]
    TooLargeForDense { rows: usize, cap: usize },

    #[error("symcom: syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("symcom: unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symcom: function `{0}` has no binding")]
    UnboundFunction(String),
    #[error("symcom: {0}")]
    Algebra(String),

    #[error("mourre: window [{a}, {b}] with eta {eta} is not inside I = (0, {top})")]
    WindowOutsideI { a: f64, b: f64, eta: f64, top: f64 },
    #[error("mourre: only {found} grid frequencies fall in the window (need {needed})")]
    ResolutionTooCoarse { found: usize, needed: usize },
    #[error("mourre: no eigenvalues of H in [{a}, {b}]")]
    EmptyWindow { a: f64, b: f64 },

    #[error("lap: z = {re} + {im}i lies within {dist:e} of the spectrum")]
    NearSpectrumSingular { re: f64, im: f64, dist: f64 },
    #[error("lap: {0}")]
    Sweep(String),

    #[error("potentials: {0}")]
    Potential(String),

    #[error("linalg: {0}")]
    Linalg(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::NonCommensurate { .. }
                | Error::TooCoarse { .. }
                | Error::FieldSize { .. }
                | Error::ComplexPotential(_)
                | Error::DimensionMismatch
                | Error::TooLargeForDense { .. }
                | Error::Syntax { .. }
                | Error::UnknownSymbol(_)
                | Error::UnboundFunction(_)
                | Error::WindowOutsideI { .. }
                | Error::ResolutionTooCoarse { .. }
                | Error::Sweep(_)
                | Error::Potential(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
