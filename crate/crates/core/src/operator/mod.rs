//! Differentiation via connection coefficients and the non-standard form.

pub mod connection;
pub mod nsform;
pub mod sparse;

pub use connection::{connection_coeffs, required_moments, ConnectionCoefficients};
pub use nsform::{
    apply_nonstandard, build_nonstandard_form, threshold_sparsity, NonStandardForm, NsLevel,
    OperatorSpec, ThresholdStats,
};
pub use sparse::{SparseBlock, Stencil};
