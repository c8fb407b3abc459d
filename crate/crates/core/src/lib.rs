//! Wavelet-Galerkin machinery for phase-space (Wigner) dynamics.
//!
//! The crate is organized bottom-up:
//!
//! - [`wavelet`]: orthonormal filters, cascade evaluation, periodic transforms
//!   and entropy best-basis wavelet packets.
//! - [`mra`]: per-level projections, multiscale norms and cut-off selection.
//! - [`operator`]: connection-coefficient derivatives and the non-standard
//!   (almost diagonal) operator form.
//! - [`tensor2d`]: separable 2D bases over phase space, square and rectangle
//!   lattices.
//! - [`wigner`]: Wigner transform, Moyal and Lindblad right-hand sides, time
//!   integration, mixtures and quantumness measures.
//! - [`galerkin`]: reduction to mode-coefficient systems and their solution.
//! - [`patterns`]: synthesis from coefficient matrices and localization
//!   metrics.
//! - [`io`] and [`cli`]: file formats and the command-line front end.

pub mod cli;
pub mod error;
pub mod galerkin;
pub mod io;
pub(crate) mod linalg;
pub mod mra;
pub mod operator;
pub mod patterns;
pub mod tensor2d;
pub mod wavelet;
pub mod wigner;

pub use error::{Error, Result};
