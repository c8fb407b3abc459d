use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor2d::{Grid2D, GridSpec};

/// Wigner function on a periodic phase-space box.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerState {
    /// Rows index `q`, columns index `p`.
    pub grid: Grid2D,
    pub hbar: f64,
    pub mass: f64,
    pub time: f64,
}

impl WignerState {
    pub fn new(grid: Grid2D, hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) || !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::BadParams(format!("hbar = {hbar} and mass = {mass} must be positive")));
        }
        if grid.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams("Wigner values must be finite".into()));
        }
        Ok(WignerState {
            grid,
            hbar,
            mass,
            time: 0.0,
        })
    }

    /// Samples `f(q, p)` on `spec`.
    pub fn from_fn(spec: &GridSpec, hbar: f64, mass: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        spec.validate()?;
        WignerState::new(spec.sample(f), hbar, mass)
    }

    pub fn spec(&self) -> GridSpec {
        self.grid.spec()
    }

    /// `∬ W dq dp`.
    pub fn total_mass(&self) -> f64 {
        self.grid.integral()
    }

    /// Fails unless the total mass is within `tol` of one.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let m = self.total_mass();
        if (m - 1.0).abs() > tol {
            return Err(Error::NotNormalized(m));
        }
        Ok(())
    }

    /// Rescales the values to unit mass.
    pub fn normalized(mut self) -> Result<Self> {
        let m = self.total_mass();
        if m == 0.0 || !m.is_finite() {
            return Err(Error::NotNormalized(m));
        }
        self.grid.values.mapv_inplace(|v| v / m);
        Ok(self)
    }

    pub fn with_values(&self, values: Array2<f64>) -> Self {
        WignerState {
            grid: self.grid.with_values(values),
            ..self.clone()
        }
    }

    /// `∫ W dp` at each `q` node.
    pub fn position_marginal(&self) -> Vec<f64> {
        let dp = self.spec().dp();
        self.grid.values.rows().into_iter().map(|r| r.sum() * dp).collect()
    }

    /// `∫ W dq` at each `p` node.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let dq = self.spec().dq();
        self.grid.values.columns().into_iter().map(|c| c.sum() * dq).collect()
    }
}

/// Scalar measures of non-classicality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumnessMetrics {
    /// `∬|W| - ∬W`; zero for non-negative `W`.
    pub negativity_volume: f64,
    /// `2 pi hbar ∬ W^2`.
    pub purity: f64,
    pub min_value: f64,
}

pub fn quantumness_metrics(state: &WignerState) -> QuantumnessMetrics {
    let area = state.grid.cell_area();
    let (mut abs, mut sum, mut sq, mut min) = (0.0, 0.0, 0.0, f64::INFINITY);
    for &v in state.grid.values.iter() {
        abs += v.abs();
        sum += v;
        sq += v * v;
        min = min.min(v);
    }
    QuantumnessMetrics {
        negativity_volume: ((abs - sum) * area).max(0.0),
        purity: 2.0 * std::f64::consts::PI * state.hbar * sq * area,
        min_value: min,
    }
}

/// Discrete Wigner transform of a wavefunction sampled on the `q` nodes of `spec`.
///
/// Uses the chord sum `W(q_i, p) = (dq / pi hbar) sum_m psi*(q_{i+m}) psi(q_{i-m}) exp(2 i p m dq / hbar)`
/// with `psi` zero outside the box. Marginals are exact when the `p` box has
/// length `pi hbar / dq` and `np = nq` (see [`matched_momentum_grid`]).
pub fn wigner_transform(psi: &[Complex64], hbar: f64, spec: &GridSpec) -> Result<WignerState> {
    wigner_transform_with_mass(psi, hbar, 1.0, spec)
}

pub fn wigner_transform_with_mass(psi: &[Complex64], hbar: f64, mass: f64, spec: &GridSpec) -> Result<WignerState> {
    spec.validate()?;
    if psi.len() != spec.nq {
        return Err(Error::ShapeMismatch(format!(
            "wavefunction has {} samples, grid has {} q nodes",
            psi.len(),
            spec.nq
        )));
    }
    if !(hbar > 0.0) {
        return Err(Error::BadParams("hbar must be positive".into()));
    }
    let dq = spec.dq();
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dq;
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    let nq = spec.nq;
    let half = (nq - 1) / 2;
    // phase[k][m] = exp(2 i p_k m dq / hbar)
    let phase: Vec<Vec<Complex64>> = (0..spec.np)
        .map(|k| {
            let theta = 2.0 * spec.p(k) * dq / hbar;
            (0..=half).map(|m| Complex64::from_polar(1.0, theta * m as f64)).collect()
        })
        .collect();
    let pref = dq / (std::f64::consts::PI * hbar);
    let mut w = Array2::zeros((nq, spec.np));
    let mut chord = Vec::with_capacity(half + 1);
    for i in 0..nq {
        let reach = i.min(nq - 1 - i);
        chord.clear();
        chord.extend((0..=reach).map(|m| psi[i + m].conj() * psi[i - m]));
        for (k, ph) in phase.iter().enumerate() {
            let mut s = chord[0].re;
            for m in 1..=reach {
                s += 2.0 * (chord[m] * ph[m]).re;
            }
            w[(i, k)] = pref * s;
        }
    }
    WignerState::new(Grid2D::from_spec(spec, w), hbar, mass)
}

/// Grid whose momentum box makes the chord transform marginal-exact.
pub fn matched_momentum_grid(nq: usize, q_min: f64, q_max: f64, hbar: f64) -> GridSpec {
    let dq = (q_max - q_min) / nq as f64;
    let half = std::f64::consts::PI * hbar / dq / 2.0;
    GridSpec {
        nq,
        np: nq,
        q_min,
        q_max,
        p_min: -half,
        p_max: half,
    }
}

/// Energy eigenfunction `psi_n` of `p^2/2m + m w^2 q^2 / 2`.
pub fn oscillator_eigenstate(n: usize, q: f64, mass: f64, omega: f64, hbar: f64) -> f64 {
    let alpha = mass * omega / hbar;
    let xi = alpha.sqrt() * q;
    // normalized Hermite functions by the stable three-term recurrence
    let mut prev = 0.0;
    let mut cur = (alpha / std::f64::consts::PI).powf(0.25) * (-0.5 * xi * xi).exp();
    for k in 0..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * xi * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Superposition `sum_n c_n psi_n` sampled on the `q` nodes of `spec`.
pub fn oscillator_superposition(coeffs: &[Complex64], spec: &GridSpec, mass: f64, omega: f64, hbar: f64) -> Vec<Complex64> {
    (0..spec.nq)
        .map(|i| {
            let q = spec.q(i);
            coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| c * oscillator_eigenstate(n, q, mass, omega, hbar))
                .sum()
        })
        .collect()
}

/// Rescales `psi` so that `sum |psi|^2 dq = 1`.
pub fn normalize_wavefunction(psi: &mut [Complex64], dq: f64) -> Result<()> {
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dq;
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::NotNormalized(norm));
    }
    let s = norm.sqrt().recip();
    psi.iter_mut().for_each(|c| *c *= s);
    Ok(())
}

/// Product Gaussian centered at `(q0, p0)` with the given standard deviations.
pub fn gaussian_wigner(spec: &GridSpec, q0: f64, p0: f64, sigma_q: f64, sigma_p: f64, hbar: f64, mass: f64) -> Result<WignerState> {
    if !(sigma_q > 0.0 && sigma_p > 0.0) {
        return Err(Error::BadParams("Gaussian widths must be positive".into()));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_q * sigma_p);
    WignerState::from_fn(spec, hbar, mass, |q, p| {
        let a = (q - q0) / sigma_q;
        let b = (p - p0) / sigma_p;
        norm * (-0.5 * (a * a + b * b)).exp()
    })
}

/// Coherent state of the oscillator with frequency `omega`, displaced to `(q0, p0)`.
pub fn coherent_state(spec: &GridSpec, q0: f64, p0: f64, mass: f64, omega: f64, hbar: f64) -> Result<WignerState> {
    let sq = (hbar / (2.0 * mass * omega)).sqrt();
    let sp = (hbar * mass * omega / 2.0).sqrt();
    gaussian_wigner(spec, q0, p0, sq, sp, hbar, mass)
}
