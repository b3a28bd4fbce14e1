use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("breakpoints must be non-decreasing with at most two copies of a value (index {index})")]
    UnsortedBreakpoints { index: usize },

    #[error("breakpoints and values differ in length ({breakpoints} vs {values})")]
    LengthMismatch { breakpoints: usize, values: usize },

    #[error("NaN or -inf encountered in {context}")]
    NotExtendedReal { context: &'static str },

    #[error("function is +inf everywhere")]
    Improper,

    #[error("finite part of the function is not a contiguous breakpoint range")]
    NonContiguous,

    #[error("function is not convex at breakpoint {index}")]
    NonConvex { index: usize },

    #[error("linear extension needs at least two finite breakpoints on that side")]
    DegenerateExtension,

    #[error("level {level} unreachable on grid (span ends at {span_end})")]
    LevelUnreachable { level: f64, span_end: f64 },

    #[error("infimum convolution is unbounded below")]
    UnboundedBelow,

    #[error("cross-check mismatch at x = {x}: {first} vs {second}")]
    CrossCheck { x: f64, first: f64, second: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid tail function: {0}")]
    InvalidTail(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("precision target not met: {0}")]
    Precision(String),

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("lemma check failed: {0}")]
    LemmaViolation(String),
}
