//! Error types shared across the crate.

use alloc::string::String;
use core::fmt;

/// Errors produced by validation and construction paths.
///
/// Infinite divergences are not errors: they are legitimate values
/// represented by `f64::INFINITY` and propagate through comparisons.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible (alphabet or kernel dimensions).
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A pmf failed validation (negative entry or mass not summing to one).
    InvalidPmf { index: usize, detail: &'static str },
    /// An input was rejected before any computation ran.
    RejectedInput(String),
    /// The channel family violates the distinguishability assumptions:
    /// some pair of states is indistinguishable (or noise-free) at input `x`.
    DegenerateModel {
        s: usize,
        s_prime: usize,
        x: usize,
        detail: &'static str,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(
                f,
                "dimension mismatch in {what}: expected {expected}, got {got}"
            ),
            Error::InvalidPmf { index, detail } => {
                write!(f, "invalid pmf at entry {index}: {detail}")
            }
            Error::RejectedInput(msg) => write!(f, "rejected input: {msg}"),
            Error::DegenerateModel {
                s,
                s_prime,
                x,
                detail,
            } => write!(
                f,
                "degenerate model: states {s} and {s_prime} at input {x}: {detail}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
