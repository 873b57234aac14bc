//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("prime moduli differ: {0} vs {1}")]
    PrimeMismatch(u64, u64),

    #[error("division by the zero polynomial")]
    DivisionByZero,

    #[error("cannot invert a series indistinguishable from zero")]
    ZeroInversion,

    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("digit {digit} out of range for base {p}")]
    DigitOutOfRange { digit: u64, p: u64 },

    #[error("section operators require nonnegative valuation, series starts at X^{0}")]
    NegativeOffset(i64),

    #[error("tail section at {j} exceeds known precision {trunc}")]
    TailOutOfRange { j: i64, trunc: i64 },

    #[error("seed {seed} is not a root of the residual polynomial")]
    NotResidualRoot { seed: u64 },

    #[error("seed {seed} is a ramified (multiple) residual root; lifting refused")]
    RamifiedSeed { seed: u64 },

    #[error("variable Y{} has degree zero in the polynomial", var + 1)]
    DegreeZeroInVariable { var: usize },

    #[error("intermediate X-degree {deg} exceeds the configured bound {bound}")]
    DegreeGuard { deg: usize, bound: usize },

    #[error("kernel closure exceeded {bound} elements before stabilizing; raise the truncation order")]
    KernelBudget { bound: usize },

    #[error("precision exhausted: only {left} known coefficients remain (need {need})")]
    PrecisionExhausted { left: i64, need: i64 },

    #[error("kernel closure table is not total: no image for ({label}, {digit})")]
    ClosureNotTotal { label: String, digit: u64 },

    #[error("automaton reversal state budget {bound} exceeded")]
    ReverseBudget { bound: usize },

    #[error("every elimination order produced an identically zero resultant")]
    EliminationVanished,

    #[error("elements {0} and {1} are equal at working precision; ambiguous identity")]
    AmbiguousElements(String, String),

    #[error("operation requires a {expected} ambient, got {got}")]
    AmbientMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("field size {q} exceeds the enumeration bound {bound}")]
    EnumerationBound { q: u64, bound: u64 },

    #[error("{0} is not a prime power")]
    NotPrimePower(u64),

    #[error("annihilator roots are not separable at working precision")]
    RootsNotSeparable,

    #[error("contradiction: {context}")]
    Contradiction { context: String },

    #[error("iteration cap {cap} reached: {context}")]
    IterationCap { cap: usize, context: String },

    #[error("reduction stuck: {context}")]
    StuckReduction { context: String },

    #[error("no annihilator survived reduction for variable Y{}", var + 1)]
    NoAnnihilator { var: usize },

    #[error("derived annihilator failed verification: {context}")]
    FailedVerification { context: String },

    #[error("coefficient {0} is not decomposable in the constant field")]
    NotDecomposable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error in {what}: {detail}")]
    Parse { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
