use thiserror::Error;

/// Out-of-domain input to a special function.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("negative order {0}")]
    NegativeOrder(i32),
    #[error("non-finite argument {0}")]
    NonFinite(f64),
    #[error("argument {x} outside domain (zero allowed: {allow_zero})")]
    Argument { x: f64, allow_zero: bool },
    #[error("zero index must be at least 1")]
    ZeroIndex,
}
