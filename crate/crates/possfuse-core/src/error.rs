use alloc::string::String;
use core::fmt;

/// Errors raised by the constraint algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Two operands live on different state spaces.
    SpaceMismatch,
    /// A state space was built with no points or duplicated labels.
    InvalidSpace(String),
    /// A label was not found in the state space.
    UnknownLabel(String),
    /// A function value was negative, NaN or infinite.
    InvalidValue(String),
    /// Weights, masses or probabilities violate their invariants.
    InvalidWeights(String),
    /// The operation needs a grid embedding that the space does not carry.
    NotEmbedded,
    /// The operation needs a product space.
    NotProduct,
    /// A point map is not total or points outside its codomain.
    InvalidMap(String),
    /// Every component was pruned: the constraint has zero norm.
    ZeroConstraint,
    /// The fusion normaliser vanished (total conflict).
    IncompatibleConstraints { normalizer: f64 },
    /// An exhaustive subset enumeration was requested on a space that is too large.
    SpaceTooLarge { size: usize, limit: usize },
    /// The `(ℓ, θ)` kernel failed the associativity check.
    KernelNotAssociative,
    /// A fusion kernel violates its structural invariants.
    InvalidKernel(String),
    /// A scenario configuration failed validation.
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SpaceMismatch => f.write_str("operands are defined on different state spaces"),
            Error::InvalidSpace(msg) => write!(f, "invalid state space: {msg}"),
            Error::UnknownLabel(label) => write!(f, "unknown label `{label}`"),
            Error::InvalidValue(msg) => write!(f, "invalid function value: {msg}"),
            Error::InvalidWeights(msg) => write!(f, "invalid weights: {msg}"),
            Error::NotEmbedded => f.write_str("state space has no real grid embedding"),
            Error::NotProduct => f.write_str("state space is not a product space"),
            Error::InvalidMap(msg) => write!(f, "invalid point map: {msg}"),
            Error::ZeroConstraint => f.write_str("constraint has zero norm"),
            Error::IncompatibleConstraints { normalizer } => {
                write!(f, "incompatible constraints: fusion normalizer {normalizer:e} vanishes")
            }
            Error::SpaceTooLarge { size, limit } => {
                write!(f, "exhaustive check needs at most {limit} points, space has {size}")
            }
            Error::KernelNotAssociative => f.write_str("fusion kernel is not associative"),
            Error::InvalidKernel(msg) => write!(f, "invalid fusion kernel: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid scenario configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
