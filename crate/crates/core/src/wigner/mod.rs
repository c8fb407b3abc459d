//! Phase-space (Wigner) dynamics.

mod evolve;
mod moyal;
mod ops;
mod potential;
mod state;

pub use evolve::{
    diagnostics_csv, estimate_stable_dt, evolve, mixture_evolve, poisson_weights, BoundaryMonitor, EvolveOptions, Integrator,
    MixtureComponent, MixtureSpec, MixtureTrajectory, StepDiagnostics, Stepper, Trajectory,
};
pub use moyal::{
    axes, compile_for, lindblad_operator, lindblad_rhs, lindblad_rhs_with, moyal_operator, moyal_rhs, moyal_rhs_with,
    moyal_series, series_cutoff, stationary_gaussian_widths, LindbladParams, MoyalTerm,
};
pub use ops::{AxisGrid, AxisOp, CompiledOperator, DerivativeBackend, PhaseSpaceOperator, SeparableTerm};
pub use potential::{Polynomial, PolynomialPotential};
pub use state::{
    coherent_state, gaussian_wigner, matched_momentum_grid, normalize_wavefunction, oscillator_eigenstate,
    oscillator_superposition, quantumness_metrics, wigner_transform, wigner_transform_with_mass, QuantumnessMetrics,
    WignerState,
};
