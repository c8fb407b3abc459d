use serde::{Deserialize, Serialize};

use super::ops::{AxisGrid, AxisOp, CompiledOperator, DerivativeBackend, PhaseSpaceOperator, SeparableTerm};
use super::potential::{Polynomial, PolynomialPotential};
use super::state::WignerState;
use crate::error::{Error, Result};
use crate::tensor2d::{Grid2D, GridSpec};

/// Damping and diffusion strengths of the open-system terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladParams {
    pub gamma: f64,
    pub diffusion: f64,
}

impl LindbladParams {
    pub fn new(gamma: f64, diffusion: f64) -> Result<Self> {
        let p = LindbladParams { gamma, diffusion };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.diffusion >= 0.0) || !self.gamma.is_finite() || !self.diffusion.is_finite() {
            return Err(Error::BadParams("gamma and D must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// One force term `c_l U^(2l+1)(q) d^(2l+1)/dp^(2l+1)` of the Moyal series.
#[derive(Debug, Clone, PartialEq)]
pub struct MoyalTerm {
    pub ell: usize,
    pub coefficient: f64,
    pub force: Polynomial,
}

impl MoyalTerm {
    pub fn p_derivative_order(&self) -> usize {
        2 * self.ell + 1
    }
}

/// Largest series index that can be nonzero for a degree-`d` potential.
pub fn series_cutoff(degree: usize) -> usize {
    degree.saturating_sub(1) / 2
}

/// Terms of the Moyal series for `U`; empty for a constant potential.
pub fn moyal_series(potential: &PolynomialPotential, hbar: f64) -> Vec<MoyalTerm> {
    let Some(degree) = potential.degree() else {
        return Vec::new();
    };
    if degree == 0 {
        return Vec::new();
    }
    (0..=series_cutoff(degree))
        .map(|ell| {
            let order = 2 * ell + 1;
            let factorial: f64 = (1..=order).map(|v| v as f64).product();
            let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
            MoyalTerm {
                ell,
                coefficient: sign * (hbar / 2.0).powi(2 * ell as i32) / factorial,
                force: potential.derivative(order),
            }
        })
        .filter(|t| !t.force.is_zero())
        .collect()
}

/// Generator of the Moyal equation as separable terms:
/// the streaming term first, then the series terms in order of `ell`.
pub fn moyal_operator(potential: &PolynomialPotential, mass: f64, hbar: f64) -> PhaseSpaceOperator {
    let mut terms = vec![SeparableTerm::linear(
        -1.0 / mass,
        AxisOp::Derivative(1),
        AxisOp::Multiply(Polynomial::x()),
    )];
    for t in moyal_series(potential, hbar) {
        terms.push(SeparableTerm::linear(
            t.coefficient,
            AxisOp::Multiply(t.force.clone()),
            AxisOp::Derivative(t.p_derivative_order()),
        ));
    }
    PhaseSpaceOperator::new(terms)
}

/// Moyal generator plus `2 gamma d/dp (p W) + D d^2W/dp^2`.
pub fn lindblad_operator(
    potential: &PolynomialPotential,
    mass: f64,
    hbar: f64,
    params: &LindbladParams,
) -> PhaseSpaceOperator {
    let mut op = moyal_operator(potential, mass, hbar);
    if params.gamma != 0.0 {
        op.terms.push(SeparableTerm::linear(
            2.0 * params.gamma,
            AxisOp::Identity,
            AxisOp::Compose(vec![AxisOp::Derivative(1), AxisOp::Multiply(Polynomial::x())]),
        ));
    }
    if params.diffusion != 0.0 {
        op.terms.push(SeparableTerm::linear(params.diffusion, AxisOp::Identity, AxisOp::Derivative(2)));
    }
    op
}

pub fn axes(spec: &GridSpec) -> (AxisGrid, AxisGrid) {
    (
        AxisGrid {
            n: spec.nq,
            origin: spec.q_min,
            step: spec.dq(),
        },
        AxisGrid {
            n: spec.np,
            origin: spec.p_min,
            step: spec.dp(),
        },
    )
}

pub fn compile_for(op: &PhaseSpaceOperator, spec: &GridSpec, backend: &DerivativeBackend) -> Result<CompiledOperator> {
    let (q, p) = axes(spec);
    CompiledOperator::new(op, q, p, backend)
}

/// `dW/dt` of the Moyal equation, derivatives from the default wavelet backend.
pub fn moyal_rhs(state: &WignerState, potential: &PolynomialPotential) -> Result<Grid2D> {
    moyal_rhs_with(state, potential, &DerivativeBackend::default())
}

pub fn moyal_rhs_with(state: &WignerState, potential: &PolynomialPotential, backend: &DerivativeBackend) -> Result<Grid2D> {
    let op = compile_for(&moyal_operator(potential, state.mass, state.hbar), &state.spec(), backend)?;
    Ok(state.grid.with_values(op.apply(&state.grid.values)))
}

pub fn lindblad_rhs(state: &WignerState, potential: &PolynomialPotential, params: &LindbladParams) -> Result<Grid2D> {
    lindblad_rhs_with(state, potential, params, &DerivativeBackend::default())
}

pub fn lindblad_rhs_with(
    state: &WignerState,
    potential: &PolynomialPotential,
    params: &LindbladParams,
    backend: &DerivativeBackend,
) -> Result<Grid2D> {
    params.validate()?;
    let op = compile_for(&lindblad_operator(potential, state.mass, state.hbar, params), &state.spec(), backend)?;
    Ok(state.grid.with_values(op.apply(&state.grid.values)))
}

/// Stationary Gaussian of the damped, diffusive oscillator: `(sigma_q, sigma_p)`.
pub fn stationary_gaussian_widths(mass: f64, omega: f64, params: &LindbladParams) -> Result<(f64, f64)> {
    if !(params.gamma > 0.0 && params.diffusion > 0.0) {
        return Err(Error::BadParams("stationary state needs gamma > 0 and D > 0".into()));
    }
    let sp2 = params.diffusion / (2.0 * params.gamma);
    let sq2 = sp2 / (mass * mass * omega * omega);
    Ok((sq2.sqrt(), sp2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_lengths_follow_degree() {
        assert!(moyal_series(&PolynomialPotential::free(), 1.0).is_empty());
        assert_eq!(moyal_series(&PolynomialPotential::harmonic(1.0, 1.0), 1.0).len(), 1);
        let q = moyal_series(&PolynomialPotential::quartic(0.5), 2.0);
        assert_eq!(q.len(), 2);
        // -(hbar/2)^2 / 3! * 24 lambda q = -hbar^2 lambda q
        let c = q[1].coefficient * q[1].force.coeffs[1];
        assert!((c + 4.0 * 0.5).abs() < 1e-14);
        let sextic = PolynomialPotential::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(moyal_series(&sextic, 1.0).len(), 3);
        assert_eq!(series_cutoff(6), 2);
    }

    #[test]
    fn quadratic_potential_gives_liouville() {
        let op = moyal_operator(&PolynomialPotential::harmonic(2.0, 3.0), 2.0, 1.0);
        assert_eq!(op.terms.len(), 2);
        assert_eq!(op.terms[1].coeff, 1.0);
        assert_eq!(op.terms[1].q, AxisOp::Multiply(Polynomial::new(vec![0.0, 18.0])));
    }

    #[test]
    fn zero_lindblad_reduces_to_moyal() {
        let spec = GridSpec::symmetric(32, 6.0);
        let s = super::super::state::coherent_state(&spec, 1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let u = PolynomialPotential::quartic(0.1);
        let a = moyal_rhs(&s, &u).unwrap();
        let b = lindblad_rhs(&s, &u, &LindbladParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
