//! Binned Bell inequalities for two parties with `d` outcomes per
//! measurement.
//!
//! * [`binning`] and [`lr_polytope`]: coefficient tensors, exact
//!   local-realistic bounds and facet certificates.
//! * [`qudit`], [`bell_operator`] and [`phase_search`]: quantum values for
//!   the maximally entangled state in phase-shifted Fourier bases.
//! * [`cv`] and [`bw`]: truncated two-mode squeezed states measured with
//!   phase parity, and the displaced-parity comparison.

pub mod bell_operator;
pub mod binning;
pub mod bw;
pub mod cv;
pub mod error;
pub mod exact_rank;
pub mod lr_polytope;
pub mod phase_search;
pub mod qudit;
pub mod simplex;

pub use binning::{
    build_coefficients, BinningPreset, BinningSpec, CoefficientTensor, PresetKind, Setting,
    SignConvention, SubsetRole,
};
pub use error::{Error, Result};
pub use lr_polytope::{
    count_max_configs, deterministic_value, lr_max, m_formula, tightness_certificate,
    DeterministicConfig, EnumerationLimit, ExtremalVector, TightnessReport,
};
pub use qudit::{
    bell_expectation, correlation_functions, joint_probability, t1_cosine_form, PhaseSettings,
};

/// `2 * sqrt(2)`, the quantum bound of every inequality built here.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;
