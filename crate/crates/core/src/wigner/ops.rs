//! Separable linear operators on phase-space grids.
//!
//! Every operator used by the Wigner-type equations is a sum of terms
//! `c X(q) (x) Y(p)`, where each axis factor is a product of multiplications by
//! polynomials and derivatives. The same description drives the grid
//! right-hand sides and the Galerkin assembly.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::potential::Polynomial;
use crate::error::Result;
use crate::operator::connection_coeffs;
use crate::wavelet::{make_filter, Family, WaveletFilter};

/// How derivatives along an axis are discretized.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeBackend {
    /// Periodic connection-coefficient stencils of the given filter.
    Wavelet(WaveletFilter),
    /// FFT differentiation; exact for band-limited periodic data.
    Spectral,
}

impl Default for DerivativeBackend {
    fn default() -> Self {
        DerivativeBackend::Wavelet(make_filter(Family::Daubechies, 6).expect("db6 filter"))
    }
}

/// One factor of a separable term.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisOp {
    Identity,
    Derivative(usize),
    /// Multiplication by a polynomial in the axis coordinate.
    Multiply(Polynomial),
    /// Composition; the last entry acts first.
    Compose(Vec<AxisOp>),
}

impl AxisOp {
    fn primitives(&self, out: &mut Vec<AxisOp>) {
        match self {
            AxisOp::Identity => {}
            AxisOp::Compose(ops) => {
                for op in ops.iter().rev() {
                    op.primitives(out);
                }
            }
            other => out.push(other.clone()),
        }
    }

    /// Primitive steps in application order.
    fn steps(&self) -> Vec<AxisOp> {
        let mut out = Vec::new();
        self.primitives(&mut out);
        out
    }

    pub fn is_identity(&self) -> bool {
        self.steps().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    pub coeff: f64,
    pub q: AxisOp,
    pub p: AxisOp,
    /// Power of the unknown the term acts on; anything but 1 is nonlinear.
    pub state_power: u32,
}

impl SeparableTerm {
    pub fn linear(coeff: f64, q: AxisOp, p: AxisOp) -> Self {
        SeparableTerm {
            coeff,
            q,
            p,
            state_power: 1,
        }
    }
}

/// Sum of separable terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseSpaceOperator {
    pub terms: Vec<SeparableTerm>,
}

impl PhaseSpaceOperator {
    pub fn new(terms: Vec<SeparableTerm>) -> Self {
        PhaseSpaceOperator { terms }
    }

    pub fn identity() -> Self {
        PhaseSpaceOperator::new(vec![SeparableTerm::linear(1.0, AxisOp::Identity, AxisOp::Identity)])
    }

    pub fn scaled(&self, s: f64) -> Self {
        PhaseSpaceOperator::new(
            self.terms
                .iter()
                .map(|t| SeparableTerm {
                    coeff: t.coeff * s,
                    ..t.clone()
                })
                .collect(),
        )
    }

    /// `self + other` as a concatenation of terms.
    pub fn plus(&self, other: &PhaseSpaceOperator) -> Self {
        PhaseSpaceOperator::new(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(|t| t.state_power == 1)
    }
}

/// Axis discretization: periodic samples `x_i = origin + i step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisGrid {
    pub n: usize,
    pub origin: f64,
    pub step: f64,
}

impl AxisGrid {
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }
}

/// Precomputed primitive for one axis.
#[derive(Clone)]
enum Action {
    Scale(Vec<f64>),
    Stencil(Vec<(isize, f64)>),
    Spectral {
        multipliers: Vec<Complex64>,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
}

impl std::fmt::Debug for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Scale(v) => write!(f, "Scale({})", v.len()),
            Action::Stencil(s) => write!(f, "Stencil({} taps)", s.len()),
            Action::Spectral { .. } => write!(f, "Spectral"),
        }
    }
}

/// Builds and caches derivative actions for one axis.
pub(crate) struct AxisCompiler {
    axis: AxisGrid,
    backend: DerivativeBackend,
    cache: HashMap<usize, Action>,
    planner: FftPlanner<f64>,
}

impl AxisCompiler {
    pub(crate) fn new(axis: AxisGrid, backend: &DerivativeBackend) -> Self {
        AxisCompiler {
            axis,
            backend: backend.clone(),
            cache: HashMap::new(),
            planner: FftPlanner::new(),
        }
    }

    fn derivative(&mut self, order: usize) -> Result<Action> {
        if let Some(a) = self.cache.get(&order) {
            return Ok(a.clone());
        }
        let n = self.axis.n;
        let action = match &self.backend {
            DerivativeBackend::Wavelet(filter) => {
                let cc = connection_coeffs(filter, order)?;
                let scale = self.axis.step.powi(-(order as i32));
                Action::Stencil(cc.shifts().map(|(l, r)| (l, r * scale)).collect())
            }
            DerivativeBackend::Spectral => {
                let length = n as f64 * self.axis.step;
                let multipliers = (0..n)
                    .map(|m| {
                        let signed = if m <= n / 2 { m as isize } else { m as isize - n as isize };
                        if 2 * m == n && order % 2 == 1 {
                            return Complex64::new(0.0, 0.0);
                        }
                        let k = 2.0 * std::f64::consts::PI * signed as f64 / length;
                        Complex64::new(0.0, k).powu(order as u32) / n as f64
                    })
                    .collect();
                Action::Spectral {
                    multipliers,
                    forward: self.planner.plan_fft_forward(n),
                    inverse: self.planner.plan_fft_inverse(n),
                }
            }
        };
        self.cache.insert(order, action.clone());
        Ok(action)
    }

    fn compile(&mut self, op: &AxisOp) -> Result<Vec<Action>> {
        op.steps()
            .into_iter()
            .map(|s| match s {
                AxisOp::Derivative(k) if k == 0 => Ok(Action::Scale(vec![1.0; self.axis.n])),
                AxisOp::Derivative(k) => self.derivative(k),
                AxisOp::Multiply(poly) => Ok(Action::Scale(
                    (0..self.axis.n).map(|i| poly.eval(self.axis.coord(i))).collect(),
                )),
                _ => unreachable!("steps are primitive"),
            })
            .collect()
    }
}

fn apply_lane(actions: &[Action], lane: &mut [f64], scratch: &mut Vec<f64>) {
    let n = lane.len();
    for act in actions {
        match act {
            Action::Scale(v) => lane.iter_mut().zip(v).for_each(|(x, s)| *x *= s),
            Action::Stencil(taps) => {
                scratch.clear();
                scratch.resize(n, 0.0);
                for &(l, r) in taps {
                    // out[k] += r * lane[(k - l) mod n]
                    let shift = l.rem_euclid(n as isize) as usize;
                    for (k, o) in scratch.iter_mut().enumerate() {
                        let src = if k >= shift { k - shift } else { k + n - shift };
                        *o += r * lane[src];
                    }
                }
                lane.copy_from_slice(scratch);
            }
            Action::Spectral {
                multipliers,
                forward,
                inverse,
            } => {
                let mut buf: Vec<Complex64> = lane.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                forward.process(&mut buf);
                buf.iter_mut().zip(multipliers).for_each(|(b, m)| *b *= m);
                inverse.process(&mut buf);
                lane.iter_mut().zip(&buf).for_each(|(x, b)| *x = b.re);
            }
        }
    }
}

/// Applies actions down every column (the `q` axis) of a row-major grid.
fn apply_columns(actions: &[Action], w: &mut Array2<f64>) {
    let (nq, np) = w.dim();
    for act in actions {
        match act {
            Action::Scale(v) => {
                for (mut row, s) in w.rows_mut().into_iter().zip(v) {
                    row.mapv_inplace(|x| x * s);
                }
            }
            Action::Stencil(taps) => {
                let src = w.as_slice().expect("standard layout").to_vec();
                let out = w.as_slice_mut().expect("standard layout");
                out.iter_mut().for_each(|x| *x = 0.0);
                for i in 0..nq {
                    let dst = &mut out[i * np..(i + 1) * np];
                    for &(l, r) in taps {
                        let si = (i as isize - l).rem_euclid(nq as isize) as usize;
                        let s = &src[si * np..(si + 1) * np];
                        for (d, x) in dst.iter_mut().zip(s) {
                            *d += r * x;
                        }
                    }
                }
            }
            Action::Spectral { .. } => {
                let mut scratch = Vec::new();
                let mut lane = vec![0.0; nq];
                for k in 0..np {
                    for i in 0..nq {
                        lane[i] = w[(i, k)];
                    }
                    apply_lane(std::slice::from_ref(act), &mut lane, &mut scratch);
                    for i in 0..nq {
                        w[(i, k)] = lane[i];
                    }
                }
            }
        }
    }
}

fn apply_rows(actions: &[Action], w: &mut Array2<f64>) {
    let np = w.ncols();
    let mut scratch = Vec::with_capacity(np);
    for mut row in w.rows_mut() {
        let lane = row.as_slice_mut().expect("standard layout");
        apply_lane(actions, lane, &mut scratch);
    }
}

#[derive(Debug)]
struct CompiledTerm {
    coeff: f64,
    q: Vec<Action>,
    p: Vec<Action>,
}

/// A [`PhaseSpaceOperator`] bound to a grid and a derivative backend.
#[derive(Debug)]
pub struct CompiledOperator {
    terms: Vec<CompiledTerm>,
    pub q_axis: AxisGrid,
    pub p_axis: AxisGrid,
}

impl CompiledOperator {
    pub fn new(
        op: &PhaseSpaceOperator,
        q_axis: AxisGrid,
        p_axis: AxisGrid,
        backend: &DerivativeBackend,
    ) -> Result<Self> {
        if !op.is_linear() {
            return Err(crate::Error::UnsupportedNonlinearity(
                "grid operators must be linear in the state".into(),
            ));
        }
        let mut qc = AxisCompiler::new(q_axis, backend);
        let mut pc = AxisCompiler::new(p_axis, backend);
        let terms = op
            .terms
            .iter()
            .map(|t| {
                Ok(CompiledTerm {
                    coeff: t.coeff,
                    q: qc.compile(&t.q)?,
                    p: pc.compile(&t.p)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CompiledOperator {
            terms,
            q_axis,
            p_axis,
        })
    }

    /// `L W` for a grid of matching shape.
    pub fn apply(&self, w: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(w.raw_dim());
        for t in &self.terms {
            let mut tmp = w.clone();
            apply_rows(&t.p, &mut tmp);
            apply_columns(&t.q, &mut tmp);
            out.scaled_add(t.coeff, &tmp);
        }
        out
    }

    /// Per-term application, in term order.
    pub fn apply_terms(&self, w: &Array2<f64>) -> Vec<Array2<f64>> {
        self.terms
            .iter()
            .map(|t| {
                let mut tmp = w.clone();
                apply_rows(&t.p, &mut tmp);
                apply_columns(&t.q, &mut tmp);
                tmp * t.coeff
            })
            .collect()
    }

    /// Axis factors of each term applied to the columns of `basis`
    /// (`n x m`, column-major in the sense that column `c` is a vector).
    pub fn axis_images(&self, q_basis: &Array2<f64>, p_basis: &Array2<f64>) -> Vec<(f64, Array2<f64>, Array2<f64>)> {
        let image = |acts: &[Action], b: &Array2<f64>| {
            let mut out = b.clone();
            let mut scratch = Vec::new();
            let mut lane = vec![0.0; b.nrows()];
            for c in 0..b.ncols() {
                for i in 0..b.nrows() {
                    lane[i] = b[(i, c)];
                }
                apply_lane(acts, &mut lane, &mut scratch);
                for i in 0..b.nrows() {
                    out[(i, c)] = lane[i];
                }
            }
            out
        };
        self.terms
            .iter()
            .map(|t| (t.coeff, image(&t.q, q_basis), image(&t.p, p_basis)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(n: usize, len: f64) -> AxisGrid {
        AxisGrid {
            n,
            origin: -len / 2.0,
            step: len / n as f64,
        }
    }

    #[test]
    fn compose_applies_last_first() {
        // d/dp (p W) for W = exp(-p^2)
        let op = PhaseSpaceOperator::new(vec![SeparableTerm::linear(
            1.0,
            AxisOp::Identity,
            AxisOp::Compose(vec![AxisOp::Derivative(1), AxisOp::Multiply(Polynomial::x())]),
        )]);
        let ax = axis(64, 16.0);
        let c = CompiledOperator::new(&op, ax, ax, &DerivativeBackend::Spectral).unwrap();
        let w = Array2::from_shape_fn((64, 64), |(_, k)| (-ax.coord(k).powi(2)).exp());
        let r = c.apply(&w);
        for k in 0..64 {
            let p = ax.coord(k);
            let want = (1.0 - 2.0 * p * p) * (-p * p).exp();
            assert!((r[(3, k)] - want).abs() < 1e-8, "{k}: {} vs {want}", r[(3, k)]);
        }
    }

    #[test]
    fn wavelet_and_spectral_agree_on_smooth_data() {
        let ax = axis(64, 2.0 * std::f64::consts::PI);
        let op = PhaseSpaceOperator::new(vec![SeparableTerm::linear(
            1.0,
            AxisOp::Derivative(1),
            AxisOp::Derivative(2),
        )]);
        let w = Array2::from_shape_fn((64, 64), |(i, k)| (ax.coord(i)).sin() * (2.0 * ax.coord(k)).cos());
        let spec = CompiledOperator::new(&op, ax, ax, &DerivativeBackend::Spectral).unwrap();
        let wav = CompiledOperator::new(&op, ax, ax, &DerivativeBackend::default()).unwrap();
        let a = spec.apply(&w);
        let b = wav.apply(&w);
        let err = (&a - &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-6, "{err}");
        let exact = Array2::from_shape_fn((64, 64), |(i, k)| -4.0 * ax.coord(i).cos() * (2.0 * ax.coord(k)).cos());
        assert!((&a - &exact).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn nonlinear_terms_are_refused() {
        let mut t = SeparableTerm::linear(1.0, AxisOp::Identity, AxisOp::Identity);
        t.state_power = 2;
        let ax = axis(8, 1.0);
        assert!(CompiledOperator::new(&PhaseSpaceOperator::new(vec![t]), ax, ax, &DerivativeBackend::Spectral).is_err());
    }
}
