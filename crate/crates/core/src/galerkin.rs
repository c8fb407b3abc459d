//! Galerkin reduction of linear phase-space equations onto tensor wavelet modes.
//!
//! The unknown is `W = E_q a E_p^T`, where the columns of `E_q`, `E_p` are
//! discrete basis vectors (inverse transforms of unit coefficient vectors) and
//! `a` is the coefficient matrix. Projecting the residual of `dW/dt = L W`
//! onto the same modes yields `da/dt = M a` with
//! `M a = sum_t c_t (E_q^T X_t E_q) a (E_p^T Y_t E_p)^T`.

use ndarray::{Array1, Array2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::gmres;
use crate::tensor2d::GridSpec;
use crate::wavelet::{dyadic_exponent, idwt_flat, WaveletFilter};
use crate::wigner::{
    axes, lindblad_operator, moyal_operator, CompiledOperator, DerivativeBackend, Integrator, LindbladParams,
    PhaseSpaceOperator, PolynomialPotential, WignerState,
};

/// Selected modes along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBasis {
    /// Decomposition depth of the underlying transform.
    pub levels: usize,
    /// Indices into the flat coefficient layout (coarse first, then details).
    pub modes: Vec<usize>,
    /// `n x modes.len()` matrix whose columns are the basis vectors.
    pub vectors: Array2<f64>,
}

impl AxisBasis {
    pub fn new(filter: &WaveletFilter, n: usize, levels: usize, modes: Vec<usize>) -> Result<Self> {
        let j = dyadic_exponent(n)?;
        if levels > j {
            return Err(Error::TooManyLevels { requested: levels, max: j });
        }
        if modes.is_empty() {
            return Err(Error::BadParams("an axis basis needs at least one mode".into()));
        }
        let mut seen = vec![false; n];
        let mut vectors = Array2::zeros((n, modes.len()));
        let mut unit = vec![0.0; n];
        for (c, &m) in modes.iter().enumerate() {
            if m >= n || seen[m] {
                return Err(Error::IndexOutOfRange(format!("mode {m} on an axis of {n} coefficients")));
            }
            seen[m] = true;
            unit[m] = 1.0;
            let v = idwt_flat(&unit, filter, levels)?;
            unit[m] = 0.0;
            vectors.column_mut(c).assign(&Array1::from(v));
        }
        Ok(AxisBasis { levels, modes, vectors })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Tensor-product mode set over a phase-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAnsatz {
    pub filter: WaveletFilter,
    pub spec: GridSpec,
    pub q: AxisBasis,
    pub p: AxisBasis,
}

impl ModeAnsatz {
    pub fn new(filter: &WaveletFilter, spec: &GridSpec, q: AxisBasis, p: AxisBasis) -> Result<Self> {
        spec.validate()?;
        if q.vectors.nrows() != spec.nq || p.vectors.nrows() != spec.np {
            return Err(Error::ShapeMismatch("axis bases do not match the grid".into()));
        }
        Ok(ModeAnsatz {
            filter: filter.clone(),
            spec: spec.clone(),
            q,
            p,
        })
    }

    /// All scaling functions of level `level` on both axes (`2^level` per axis).
    pub fn scaling_level(filter: &WaveletFilter, spec: &GridSpec, level: usize) -> Result<Self> {
        let axis = |n: usize| -> Result<AxisBasis> {
            let j = dyadic_exponent(n)?;
            if level > j {
                return Err(Error::LevelOutOfRange { level, lo: 0, hi: j });
            }
            AxisBasis::new(filter, n, j - level, (0..1 << level).collect())
        };
        ModeAnsatz::new(filter, spec, axis(spec.nq)?, axis(spec.np)?)
    }

    /// Every mode of a `levels`-deep transform: a complete orthonormal basis.
    pub fn full(filter: &WaveletFilter, spec: &GridSpec, levels: usize) -> Result<Self> {
        let q = AxisBasis::new(filter, spec.nq, levels, (0..spec.nq).collect())?;
        let p = AxisBasis::new(filter, spec.np, levels, (0..spec.np).collect())?;
        ModeAnsatz::new(filter, spec, q, p)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.q.len(), self.p.len())
    }

    /// Grid values `E_q a E_p^T`.
    pub fn synthesize(&self, coeffs: &Array2<f64>) -> Result<Array2<f64>> {
        if coeffs.dim() != self.shape() {
            return Err(Error::ShapeMismatch(format!("coefficients {:?}, ansatz {:?}", coeffs.dim(), self.shape())));
        }
        Ok(self.q.vectors.dot(coeffs).dot(&self.p.vectors.t()))
    }

    pub fn synthesize_state(&self, coeffs: &Array2<f64>, template: &WignerState) -> Result<WignerState> {
        Ok(template.with_values(self.synthesize(coeffs)?))
    }
}

/// Equation whose generator is reduced.
#[derive(Debug, Clone, PartialEq)]
pub enum EquationSpec {
    Moyal {
        potential: PolynomialPotential,
        mass: f64,
        hbar: f64,
    },
    Lindblad {
        potential: PolynomialPotential,
        mass: f64,
        hbar: f64,
        params: LindbladParams,
    },
    Custom(PhaseSpaceOperator),
}

impl EquationSpec {
    pub fn operator(&self) -> PhaseSpaceOperator {
        match self {
            EquationSpec::Moyal { potential, mass, hbar } => moyal_operator(potential, *mass, *hbar),
            EquationSpec::Lindblad {
                potential,
                mass,
                hbar,
                params,
            } => lindblad_operator(potential, *mass, *hbar, params),
            EquationSpec::Custom(op) => op.clone(),
        }
    }
}

/// One Kronecker factor `c X (x) Y` of the reduced operator.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerTerm {
    pub coeff: f64,
    pub q: Array2<f64>,
    pub p: Array2<f64>,
}

/// Reduced algebraic system `da/dt = M a + rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub shape: (usize, usize),
    pub terms: Vec<KroneckerTerm>,
    pub rhs: Option<Array2<f64>>,
}

impl ReducedSystem {
    pub fn zero(shape: (usize, usize)) -> Self {
        ReducedSystem {
            shape,
            terms: Vec::new(),
            rhs: None,
        }
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    /// `M a`.
    pub fn apply(&self, a: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(self.shape);
        for t in &self.terms {
            out.scaled_add(t.coeff, &t.q.dot(a).dot(&t.p.t()));
        }
        out
    }

    /// Dense `M` acting on row-major flattened coefficients.
    pub fn to_dense(&self) -> Array2<f64> {
        let (mq, mp) = self.shape;
        let n = mq * mp;
        let mut m = Array2::zeros((n, n));
        for t in &self.terms {
            for i in 0..mq {
                for k in 0..mq {
                    let x = t.q[(i, k)];
                    if x == 0.0 {
                        continue;
                    }
                    for j in 0..mp {
                        for l in 0..mp {
                            m[(i * mp + j, k * mp + l)] += t.coeff * x * t.p[(j, l)];
                        }
                    }
                }
            }
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        ReducedSystem {
            shape: self.shape,
            terms: self
                .terms
                .iter()
                .map(|t| KroneckerTerm {
                    coeff: t.coeff * s,
                    ..t.clone()
                })
                .collect(),
            rhs: self.rhs.as_ref().map(|r| r * s),
        }
    }

    pub fn plus(&self, other: &ReducedSystem) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("reduced systems differ in shape".into()));
        }
        let rhs = match (&self.rhs, &other.rhs) {
            (Some(a), Some(b)) => Some(a + b),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        Ok(ReducedSystem {
            shape: self.shape,
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
            rhs,
        })
    }

    /// Upper bound on the spectral norm of `M`.
    pub fn norm_bound(&self) -> f64 {
        let two_norm_bound = |x: &Array2<f64>| {
            let one = x.axis_iter(Axis(1)).map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
            let inf = x.axis_iter(Axis(0)).map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
            (one * inf).sqrt()
        };
        self.terms
            .iter()
            .map(|t| t.coeff.abs() * two_norm_bound(&t.q) * two_norm_bound(&t.p))
            .sum()
    }

    /// Coordinate list `row,col,value` of the dense matrix, dropping `|v| <= tol`.
    pub fn to_coo_csv(&self, tol: f64) -> String {
        let m = self.to_dense();
        let mut s = String::from("row,col,value\n");
        for ((r, c), v) in m.indexed_iter() {
            if v.abs() > tol {
                s.push_str(&format!("{r},{c},{v:.16e}\n"));
            }
        }
        s
    }

    pub fn metadata(&self) -> ReducedSystemInfo {
        ReducedSystemInfo {
            modes_q: self.shape.0,
            modes_p: self.shape.1,
            unknowns: self.dim(),
            kronecker_terms: self.terms.len(),
            has_rhs: self.rhs.is_some(),
            ordering: "row-major: index = i_q * modes_p + i_p".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedSystemInfo {
    pub modes_q: usize,
    pub modes_p: usize,
    pub unknowns: usize,
    pub kronecker_terms: usize,
    pub has_rhs: bool,
    pub ordering: String,
}

/// Galerkin matrix of `equation` on `ansatz`, derivatives from `backend`.
pub fn assemble(equation: &EquationSpec, ansatz: &ModeAnsatz, backend: &DerivativeBackend) -> Result<ReducedSystem> {
    let op = equation.operator();
    if !op.is_linear() {
        return Err(Error::UnsupportedNonlinearity(
            "reduction is only defined for operators linear in W".into(),
        ));
    }
    let (qa, pa) = axes(&ansatz.spec);
    let compiled = CompiledOperator::new(&op, qa, pa, backend)?;
    let terms = compiled
        .axis_images(&ansatz.q.vectors, &ansatz.p.vectors)
        .into_iter()
        .map(|(coeff, xq, yp)| KroneckerTerm {
            coeff,
            q: ansatz.q.vectors.t().dot(&xq),
            p: ansatz.p.vectors.t().dot(&yp),
        })
        .collect();
    Ok(ReducedSystem {
        shape: ansatz.shape(),
        terms,
        rhs: None,
    })
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub coeffs: Array2<f64>,
    /// `||W - E_q a E_p^T|| / ||W||` on the grid.
    pub relative_error: f64,
    /// Energy of the retained coefficients relative to the grid energy.
    pub captured_energy: f64,
}

/// Orthogonal projection of a grid state onto the ansatz.
pub fn project_initial(state: &WignerState, ansatz: &ModeAnsatz) -> Result<Projection> {
    if state.spec() != ansatz.spec {
        return Err(Error::ShapeMismatch("state grid differs from the ansatz grid".into()));
    }
    let w = &state.grid.values;
    let coeffs = ansatz.q.vectors.t().dot(w).dot(&ansatz.p.vectors);
    let back = ansatz.synthesize(&coeffs)?;
    let total = w.iter().map(|v| v * v).sum::<f64>();
    let err = (w - &back).iter().map(|v| v * v).sum::<f64>();
    let kept = coeffs.iter().map(|v| v * v).sum::<f64>();
    let (relative_error, captured_energy) = if total > 0.0 {
        ((err / total).sqrt(), kept / total)
    } else {
        (0.0, 1.0)
    };
    Ok(Projection {
        coeffs,
        relative_error,
        captured_energy,
    })
}

/// `M a (+ rhs)`; zero exactly when `a` solves the stationary reduced system.
pub fn gdr_residual(system: &ReducedSystem, a: &Array2<f64>) -> Result<Array2<f64>> {
    if a.dim() != system.shape {
        return Err(Error::ShapeMismatch(format!("coefficients {:?}, system {:?}", a.dim(), system.shape)));
    }
    let mut r = system.apply(a);
    if let Some(rhs) = &system.rhs {
        r += rhs;
    }
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct CoefficientTrajectory {
    pub dt: f64,
    /// `(step, a)` for the retained steps.
    pub snapshots: Vec<(usize, Array2<f64>)>,
    /// `|a|^2` per step.
    pub energy: Vec<f64>,
    /// Largest `|(a_{n+1} - a_{n-1}) / 2dt - M a_n - rhs|` per interior step.
    pub residual: Vec<f64>,
}

impl CoefficientTrajectory {
    pub fn final_coeffs(&self) -> &Array2<f64> {
        &self.snapshots.last().expect("trajectory always has a state").1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub dt: f64,
    pub steps: usize,
    pub integrator: Integrator,
    pub snapshot_every: usize,
    pub solver_tol: f64,
}

impl SolveOptions {
    pub fn new(dt: f64, steps: usize) -> Self {
        SolveOptions {
            dt,
            steps,
            integrator: Integrator::Rk4,
            snapshot_every: 0,
            solver_tol: 1e-10,
        }
    }

    /// Explicit step limit for `system`, with a margin inside the RK4 stability region.
    pub fn stable_dt(system: &ReducedSystem) -> f64 {
        let b = system.norm_bound();
        if b > 0.0 {
            2.5 / b
        } else {
            f64::INFINITY
        }
    }
}

fn rate(system: &ReducedSystem, a: &Array2<f64>) -> Array2<f64> {
    let mut r = system.apply(a);
    if let Some(rhs) = &system.rhs {
        r += rhs;
    }
    r
}

/// Time-steps the reduced system from `a0`.
pub fn solve_evolution(system: &ReducedSystem, a0: &Array2<f64>, opts: &SolveOptions) -> Result<CoefficientTrajectory> {
    if a0.dim() != system.shape {
        return Err(Error::ShapeMismatch(format!("initial coefficients {:?}, system {:?}", a0.dim(), system.shape)));
    }
    let dt = opts.dt;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::BadParams(format!("dt must be positive, got {dt}")));
    }
    if opts.integrator == Integrator::Rk4 {
        let limit = SolveOptions::stable_dt(system);
        if dt > limit {
            return Err(Error::CflViolation { dt, limit });
        }
    }
    let keep = |s: usize| s == 0 || s == opts.steps || (opts.snapshot_every > 0 && s % opts.snapshot_every == 0);
    let mut a = a0.clone();
    let mut prev: Option<Array2<f64>> = None;
    let mut snapshots = vec![(0, a.clone())];
    let mut energy = vec![a.iter().map(|v| v * v).sum()];
    let mut residual = Vec::new();
    for step in 1..=opts.steps {
        let next = match opts.integrator {
            Integrator::Rk4 => {
                let k1 = rate(system, &a);
                let k2 = rate(system, &(&a + &(&k1 * (0.5 * dt))));
                let k3 = rate(system, &(&a + &(&k2 * (0.5 * dt))));
                let k4 = rate(system, &(&a + &(&k3 * dt)));
                &a + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * (dt / 6.0))
            }
            Integrator::CrankNicolson => {
                let shape = system.shape;
                let mut b = &a + &(system.apply(&a) * (0.5 * dt));
                if let Some(rhs) = &system.rhs {
                    b.scaled_add(dt, rhs);
                }
                let bflat: Vec<f64> = b.iter().copied().collect();
                let apply = |x: &[f64]| -> Vec<f64> {
                    let xa = Array2::from_shape_vec(shape, x.to_vec()).expect("shape");
                    let mx = system.apply(&xa);
                    x.iter().zip(mx.iter()).map(|(xi, mi)| xi - 0.5 * dt * mi).collect()
                };
                let x0: Vec<f64> = a.iter().copied().collect();
                let out = gmres(apply, &bflat, &x0, opts.solver_tol, 60, 5000);
                if !out.converged {
                    return Err(Error::SolverDivergence(format!(
                        "GMRES stopped at relative residual {:.3e}",
                        out.relative_residual
                    )));
                }
                Array2::from_shape_vec(shape, out.x).expect("shape")
            }
        };
        if let Some(p) = &prev {
            let d = (&next - p) / (2.0 * dt) - rate(system, &a);
            residual.push(d.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        prev = Some(std::mem::replace(&mut a, next));
        energy.push(a.iter().map(|v| v * v).sum());
        if keep(step) {
            snapshots.push((step, a.clone()));
        }
    }
    Ok(CoefficientTrajectory {
        dt,
        snapshots,
        energy,
        residual,
    })
}

/// Coefficients of a space-time Galerkin solution on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    pub horizon: f64,
    /// Coefficient matrix of each shifted Legendre polynomial in time.
    pub time_coeffs: Vec<Array2<f64>>,
    /// Least-squares residual of the stacked system.
    pub residual: f64,
}

fn legendre(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return p0;
    }
    for n in 1..k {
        let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n as f64 + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

impl SpaceTimeSolution {
    pub fn eval(&self, t: f64) -> Array2<f64> {
        let x = 2.0 * t / self.horizon - 1.0;
        let mut out = Array2::zeros(self.time_coeffs[0].raw_dim());
        for (k, c) in self.time_coeffs.iter().enumerate() {
            out.scaled_add(legendre(k, x), c);
        }
        out
    }
}

/// Space-time Galerkin solve with `time_modes` Legendre modes in time.
///
/// The time residual is tested against the first `time_modes - 1` modes and
/// the initial condition enters as `penalty`-weighted rows; the stacked
/// system is solved in the least-squares sense. Only for small systems.
pub fn solve_space_time(
    system: &ReducedSystem,
    a0: &Array2<f64>,
    horizon: f64,
    time_modes: usize,
    penalty: f64,
) -> Result<SpaceTimeSolution> {
    if a0.dim() != system.shape {
        return Err(Error::ShapeMismatch("initial coefficients do not match the system".into()));
    }
    if time_modes < 2 || !(horizon > 0.0) || !(penalty > 0.0) {
        return Err(Error::BadParams("need time_modes >= 2, horizon > 0 and penalty > 0".into()));
    }
    let n = system.dim();
    let unknowns = n * time_modes;
    if unknowns > 4096 {
        return Err(Error::BadParams(format!("space-time system with {unknowns} unknowns is too large")));
    }
    let m = system.to_dense();
    let rows = unknowns;
    let mut big = nalgebra::DMatrix::<f64>::zeros(rows, unknowns);
    let mut rhs = nalgebra::DVector::<f64>::zeros(rows);
    // test mode j: sum_k [int P_k' P_j] c_k - M sum_k [int P_k P_j] c_k = [int P_j] rhs
    for j in 0..time_modes - 1 {
        for k in 0..time_modes {
            let deriv = if k > j && (k + j) % 2 == 1 { 2.0 } else { 0.0 };
            let mass = if k == j { horizon / (2 * j + 1) as f64 } else { 0.0 };
            for r in 0..n {
                if deriv != 0.0 {
                    big[(j * n + r, k * n + r)] += deriv;
                }
                if mass != 0.0 {
                    for c in 0..n {
                        big[(j * n + r, k * n + c)] -= mass * m[(r, c)];
                    }
                }
            }
        }
        if let (Some(f), 0) = (&system.rhs, j) {
            for (r, v) in f.iter().enumerate() {
                rhs[r] += horizon * v;
            }
        }
    }
    // initial condition: sum_k P_k(-1) c_k = a0
    let last = (time_modes - 1) * n;
    for k in 0..time_modes {
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        for r in 0..n {
            big[(last + r, k * n + r)] = penalty * s;
        }
    }
    for (r, v) in a0.iter().enumerate() {
        rhs[last + r] = penalty * v;
    }
    let svd = big.clone().svd(true, true);
    let x = svd
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let residual = (&big * &x - &rhs).norm();
    let time_coeffs = (0..time_modes)
        .map(|k| Array2::from_shape_fn(system.shape, |(i, j)| x[k * n + i * system.shape.1 + j]))
        .collect();
    Ok(SpaceTimeSolution {
        horizon,
        time_coeffs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{make_filter, Family};
    use crate::wigner::{coherent_state, AxisOp, SeparableTerm};

    fn filter() -> WaveletFilter {
        make_filter(Family::Daubechies, 4).unwrap()
    }

    #[test]
    fn identity_reduces_to_identity() {
        let spec = GridSpec::symmetric(32, 4.0);
        let ans = ModeAnsatz::scaling_level(&filter(), &spec, 3).unwrap();
        let sys = assemble(&EquationSpec::Custom(PhaseSpaceOperator::identity()), &ans, &DerivativeBackend::Spectral).unwrap();
        let m = sys.to_dense();
        for ((i, j), v) in m.indexed_iter() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn nonlinear_operator_is_rejected() {
        let spec = GridSpec::symmetric(16, 4.0);
        let ans = ModeAnsatz::scaling_level(&filter(), &spec, 2).unwrap();
        let mut t = SeparableTerm::linear(1.0, AxisOp::Identity, AxisOp::Identity);
        t.state_power = 3;
        let r = assemble(&EquationSpec::Custom(PhaseSpaceOperator::new(vec![t])), &ans, &DerivativeBackend::Spectral);
        assert!(matches!(r, Err(Error::UnsupportedNonlinearity(_))));
    }

    #[test]
    fn zero_operator_keeps_coefficients() {
        let sys = ReducedSystem::zero((3, 3));
        let a0 = Array2::from_shape_fn((3, 3), |(i, j)| (i * 3 + j) as f64);
        let t = solve_evolution(&sys, &a0, &SolveOptions::new(0.1, 10)).unwrap();
        assert_eq!(t.final_coeffs(), &a0);
    }

    #[test]
    fn one_hot_projects_to_one_hot() {
        let spec = GridSpec::symmetric(32, 4.0);
        let ans = ModeAnsatz::scaling_level(&filter(), &spec, 4).unwrap();
        let mut a = Array2::zeros(ans.shape());
        a[(5, 9)] = 1.0;
        let w = WignerState::new(crate::tensor2d::Grid2D::from_spec(&spec, ans.synthesize(&a).unwrap()), 1.0, 1.0).unwrap();
        let p = project_initial(&w, &ans).unwrap();
        assert!((&p.coeffs - &a).iter().all(|v| v.abs() < 1e-12));
        assert!(p.relative_error < 1e-12);
    }

    #[test]
    fn space_time_matches_stepping_on_a_short_horizon() {
        let spec = GridSpec::symmetric(16, 6.0);
        let ans = ModeAnsatz::scaling_level(&filter(), &spec, 3).unwrap();
        let eq = EquationSpec::Moyal {
            potential: PolynomialPotential::harmonic(1.0, 1.0),
            mass: 1.0,
            hbar: 1.0,
        };
        let sys = assemble(&eq, &ans, &DerivativeBackend::Spectral).unwrap();
        let w0 = coherent_state(&spec, 1.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        let a0 = project_initial(&w0, &ans).unwrap().coeffs;
        let horizon = 0.2;
        let st = solve_space_time(&sys, &a0, horizon, 8, 1.0).unwrap();
        let steps = 200;
        let tr = solve_evolution(&sys, &a0, &SolveOptions::new(horizon / steps as f64, steps)).unwrap();
        let diff = (&st.eval(horizon) - tr.final_coeffs()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = a0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-6 * scale, "{diff}");
        assert!((&st.eval(0.0) - &a0).iter().all(|v| v.abs() < 1e-9 * scale));
    }
}
