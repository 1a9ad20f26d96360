use thiserror::Error;

/// Errors raised anywhere in the laboratory.
///
/// Numeric failures carry enough context for the caller to decide whether
/// to enlarge the truncation, shrink a step, or give up.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("norm index mismatch between operands")]
    NormMismatch,

    #[error("semigroup overflow: Re(t*a) = {exponent} exceeds the representable range")]
    Overflow { exponent: f64 },

    #[error("product overflow at step {step}: magnitude {magnitude:e}")]
    ProductOverflow { step: u128, magnitude: f64 },

    #[error("degenerate pair: |phi(x)| = {pairing:e} is below 1e-12")]
    DegeneratePair { pairing: f64 },

    #[error("matrix is not idempotent: ||M^2 - M|| = {defect:e}")]
    NotIdempotent { defect: f64 },

    #[error(
        "truncation insufficient: need |phi(Av)| >= {needed_target:e} within radius {radius:e}, \
         best available {best_available:e} (needs a coefficient |a_m phi_m| >= {needed_coefficient:e})"
    )]
    TruncationInsufficient {
        needed_target: f64,
        best_available: f64,
        radius: f64,
        needed_coefficient: f64,
    },

    #[error("phi(Av) vanishes (|phi(Av)| = {value:e}); no rotation defined")]
    ZeroPairing { value: f64 },

    #[error("schedule exhausted at 2^{j_max}: best error {best_error:e} at n = {best_n}")]
    ScheduleExhausted {
        j_max: u32,
        best_error: f64,
        best_n: u128,
    },

    #[error("stability radius underflow at stage {stage}: {radius:e}")]
    UnderflowRadius { stage: usize, radius: f64 },

    #[error("spectral bound violated: omega = {omega} must exceed {bound}")]
    SpectralBoundViolated { omega: f64, bound: f64 },

    #[error("invalid certificate: {invariant} failed ({detail})")]
    InvalidCertificate { invariant: String, detail: String },

    #[error("growth law mismatch at index {index}")]
    LawMismatch { index: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
