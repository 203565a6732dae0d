use thiserror::Error;

use crate::interactions::Offset;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("ragged rows: row {row} has {found} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("field has no lattice pixel (everything is masked)")]
    NoActivePixel,

    #[error("label {label} exceeds the maximum color {colors}")]
    LabelOutOfRange { label: usize, colors: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("pixel ({0}, {1}) is outside the lattice or masked")]
    InvalidPixel(usize, usize),

    #[error("relative position (0,0) is not allowed")]
    ZeroOffset,

    #[error("positions {0} and {1} are reflections of each other")]
    ReflectedPair(Offset, Offset),

    #[error("index {index} out of range for a structure with {len} positions")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid norm radius {0}")]
    InvalidNorm(f64),

    #[error("parameter vector has length {found}, family needs {expected}")]
    ParameterLength { expected: usize, found: usize },

    #[error("at least two colors are required (C >= 1)")]
    TooFewColors,

    #[error("identifiability violated: theta(0,0) = {value} at position index {position}")]
    Identifiability { position: usize, value: f64 },

    #[error("potential array does not follow the {family} pattern at (a={a}, b={b}, position index {position})")]
    FamilyPattern {
        family: &'static str,
        a: usize,
        b: usize,
        position: usize,
    },

    #[error("color count mismatch: potentials use C={theta}, field uses C={field}")]
    ColorMismatch { theta: usize, field: usize },

    #[error("fixed region includes masked pixel ({0}, {1})")]
    FixedOnMasked(usize, usize),

    #[error("sub-region is only valid when sampling from dimensions")]
    SubRegionWithField,

    #[error("field shows a single color; the pseudo-likelihood has no contrast")]
    NoContrast,

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        partial: Vec<f64>,
    },

    #[error("step-size sequence is empty")]
    EmptyGammaSequence,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no interacting position survives the threshold {0}")]
    NoInteractions(f64),

    #[error("mixture component {0} became empty")]
    EmptyComponent(usize),

    #[error("observed field is constant; quantile initialization needs spread")]
    ConstantField,

    #[error("non-finite value at pixel ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("basis is empty")]
    EmptyBasis,

    #[error("exact enumeration of {0} configurations exceeds the 2^22 bound")]
    TooLarge(f64),

    #[error("observed statistics lie on the boundary of the achievable set; the MLE does not exist")]
    BoundaryStatistics,

    #[error("the interaction structure spans more than two rows")]
    TransferSpan,

    #[error("image encoding failed: {0}")]
    Encoding(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
