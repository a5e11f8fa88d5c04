//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records every op in evaluation order; [`Tape::backward`] walks it
//! in reverse once. Every op output is checked for NaN/Inf.

mod gradcheck;
mod params;
mod sparse;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, rel_error, GradCheckEntry, GradCheckReport, REL_FLOOR};
pub use params::{BoundParams, Init, ParamSet, Parameter};
pub use sparse::CsrMatrix;
pub use tape::{logsumexp, sigmoid, Bags, Tape, Var, PROB_CLAMP};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("tensor of shape {shape:?} cannot hold {len} values")]
    BadLength { shape: (usize, usize), len: usize },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{op}: non-finite value produced")]
    NonFinite { op: &'static str },
    #[error("{op}: domain error: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("backward needs a scalar, got shape {shape:?}")]
    NotScalar { shape: (usize, usize) },
    #[error("bag {row} is empty")]
    EmptyBag { row: usize },
    #[error("duplicate parameter name `{0}`")]
    DuplicateParameter(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}
