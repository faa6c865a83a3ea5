use thiserror::Error;

use crate::binning::SubsetRole;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("outcome dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("subset {role} contains outcome {element}, outside 0..{d}")]
    ElementOutOfRange {
        role: SubsetRole,
        element: usize,
        d: usize,
    },

    #[error("subset {role} lists outcome {element} more than once")]
    DuplicateElement { role: SubsetRole, element: usize },

    #[error(
        "subset {role} contains every outcome of a d={d} system; a constant binning is degenerate"
    )]
    FullSubset { role: SubsetRole, d: usize },

    #[error("dimension {d} exceeds the {what} limit of {limit}")]
    DimensionLimit {
        what: &'static str,
        d: usize,
        limit: usize,
    },

    #[error("outcome {value} out of range for d={d}")]
    OutcomeOutOfRange { value: usize, d: usize },

    #[error("tensor dimension {tensor} does not match {expected}")]
    DimensionMismatch { tensor: usize, expected: usize },

    #[error("cutoff s must be odd, got {0}")]
    EvenCutoff(usize),

    #[error("squeezing parameter must be finite and positive, got {0}")]
    InvalidSqueezing(f64),

    #[error("deficit delta must lie in (0, 2*sqrt(2) - 2), got {0}")]
    DeltaOutOfRange(f64),

    #[error("target Bell value must lie in (0, 2*sqrt(2)), got {0}")]
    TargetOutOfRange(f64),

    #[error("Fock cutoff {given} leaves tail mass {tail:e}; need at least {required}")]
    FockCutoffTooSmall {
        given: usize,
        required: usize,
        tail: f64,
    },

    #[error("phase index {k} out of range for cutoff {s}")]
    PhaseIndexOutOfRange { k: usize, s: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
