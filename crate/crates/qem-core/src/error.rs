use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants split into two classes: validation errors (bad inputs, dimension
/// mismatches, out-of-range parameters) and numerical failures (internal
/// cross-checks that did not agree, corrupted radicands). The CLI maps the
/// classes to different exit codes; see [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max entry deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace:.12}, expected 1 within tolerance")]
    NotUnitTrace { trace: f64 },
    #[error("matrix has negative eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },
    #[error("state is not pure (purity {purity:.12})")]
    NotPure { purity: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("noise rate {rate} outside {range}")]
    InvalidRate { rate: f64, range: &'static str },
    #[error("invalid dimension {dim}")]
    InvalidDimension { dim: usize },
    #[error("dimension {dim} is not a power of two")]
    DimensionNotPowerOfTwo { dim: usize },
    #[error("observable spectrum [{min:.6}, {max:.6}] not within [-1/2, 1/2]")]
    NotNormalized { min: f64, max: f64 },
    #[error("POVM elements sum to identity only within {deviation:.3e}")]
    PovmIncomplete { deviation: f64 },
    #[error("estimator table has {got} entries, expected {expected}")]
    EstimatorTableSize { got: usize, expected: usize },
    #[error("joint dimension {dim} exceeds dense cap {cap}")]
    ProductTooLarge { dim: usize, cap: usize },
    #[error("sub-fidelity radicand {radicand:.3e} below tolerance; upstream values are corrupted")]
    NegativeRadicand { radicand: f64 },
    #[error("bound is vacuous (numerator {numerator:.3e} <= 0)")]
    VacuousBound { numerator: f64 },
    #[error("bound is flagged infinite; no finite sample count exists")]
    NonFiniteBound,
    #[error("spread {spread} must be positive")]
    InvalidSpread { spread: f64 },
    #[error("exact relaxation requires a single experiment, got K = {experiments}")]
    ExactRequiresSingleExperiment { experiments: usize },
    #[error("relaxation {name} is not applicable here")]
    UnsupportedRelaxation { name: &'static str },
    #[error("basis does not span the target inverse (residual {residual:.3e})")]
    SingularBasis { residual: f64 },
    #[error("channel is not invertible (smallest transfer-matrix singular value {min_singular:.3e})")]
    NotInvertibleChannel { min_singular: f64 },
    #[error("duplicate extrapolation node {value}")]
    DuplicateNodes { value: f64 },
    #[error("boost factor {boost} takes the noise strength to {strength}, out of range")]
    BoostOutOfRange { boost: f64, strength: f64 },
    #[error("operator is not an involution (max |W^2 - I| entry {deviation:.3e})")]
    NotInvolution { deviation: f64 },
    #[error("dominant eigenvalue {lambda} must exceed 1/2")]
    DominantEigenvalueTooSmall { lambda: f64 },
    #[error("shot count must be at least 1")]
    InvalidShots,
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("unknown sweep parameter '{name}'")]
    UnknownParameter { name: String },
    #[error("cross-check failed: {what} paths differ by {deviation:.3e}")]
    CrossCheckFailed { what: &'static str, deviation: f64 },
}

impl Error {
    /// True for failures of internal numerical consistency rather than bad
    /// input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NegativeRadicand { .. }
                | Error::CrossCheckFailed { .. }
                | Error::NonFiniteBound
        )
    }
}
