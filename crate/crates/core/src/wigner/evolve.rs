use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::moyal::{compile_for, lindblad_operator, moyal_series, LindbladParams};
use super::ops::{CompiledOperator, DerivativeBackend};
use super::potential::PolynomialPotential;
use super::state::{quantumness_metrics, WignerState};
use crate::error::{Error, Result};
use crate::linalg::gmres;
use crate::tensor2d::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    CrankNicolson,
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "cn" | "crank_nicolson" | "crank-nicolson" => Ok(Integrator::CrankNicolson),
            _ => Err(Error::BadParams(format!("unknown integrator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub steps: usize,
    pub integrator: Integrator,
    pub backend: DerivativeBackend,
    /// Multiplier on the explicit stability limit.
    pub safety: f64,
    /// Keep every `k`-th state; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub solver_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    /// Worker threads for independent mixture components.
    pub threads: usize,
}

impl EvolveOptions {
    pub fn new(dt: f64, steps: usize) -> Self {
        EvolveOptions {
            dt,
            steps,
            integrator: Integrator::Rk4,
            backend: DerivativeBackend::default(),
            safety: 0.4,
            snapshot_every: 0,
            solver_tol: 1e-10,
            gmres_restart: 60,
            gmres_max_iter: 3000,
            threads: 1,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_backend(mut self, backend: DerivativeBackend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    fn keep(&self, step: usize) -> bool {
        step == 0 || step == self.steps || (self.snapshot_every > 0 && step % self.snapshot_every == 0)
    }
}

/// Largest explicit step allowed for the given equation on `spec`.
///
/// Every term with an `n`-th derivative along an axis of spacing `h` and
/// coefficient bounded by `c` contributes `h^n / (pi^(n-1) c)`; the result is
/// `safety` times the smallest contribution.
pub fn estimate_stable_dt(
    spec: &GridSpec,
    potential: &PolynomialPotential,
    mass: f64,
    hbar: f64,
    params: Option<&LindbladParams>,
    safety: f64,
) -> f64 {
    let (dq, dp) = (spec.dq(), spec.dp());
    let p_max = spec.p_min.abs().max(spec.p_max.abs()).max((spec.p_max - dp).abs());
    let pi = std::f64::consts::PI;
    let limit = |h: f64, order: usize, c: f64| {
        if c > 0.0 {
            h.powi(order as i32) / (pi.powi(order as i32 - 1) * c)
        } else {
            f64::INFINITY
        }
    };
    let mut best = limit(dq, 1, p_max / mass);
    for t in moyal_series(potential, hbar) {
        let cmax = (0..spec.nq).map(|i| t.force.eval(spec.q(i)).abs()).fold(0.0, f64::max);
        best = best.min(limit(dp, t.p_derivative_order(), t.coefficient.abs() * cmax));
    }
    if let Some(lp) = params {
        best = best.min(limit(dp, 1, 2.0 * lp.gamma * p_max));
        best = best.min(limit(dp, 2, lp.diffusion));
    }
    safety * best
}

/// Watches the outer band of the box for mass that could wrap around.
#[derive(Debug, Clone)]
pub struct BoundaryMonitor {
    pub band: usize,
    pub threshold: f64,
    warned: bool,
}

impl BoundaryMonitor {
    pub fn new(spec: &GridSpec) -> Self {
        BoundaryMonitor {
            band: (spec.nq.min(spec.np) / 32).max(1),
            threshold: 1e-10,
            warned: false,
        }
    }

    /// `max |W|` in the band over `max |W|`.
    pub fn leak(&self, w: &Array2<f64>) -> f64 {
        let (nq, np) = w.dim();
        let b = self.band;
        let mut edge = 0.0f64;
        let mut all = 0.0f64;
        for ((i, k), v) in w.indexed_iter() {
            let a = v.abs();
            all = all.max(a);
            if i < b || i >= nq - b || k < b || k >= np - b {
                edge = edge.max(a);
            }
        }
        if all == 0.0 {
            0.0
        } else {
            edge / all
        }
    }

    pub fn check(&mut self, w: &Array2<f64>, time: f64) -> f64 {
        let leak = self.leak(w);
        if leak > self.threshold && !self.warned {
            log::warn!("boundary band holds {leak:.3e} of the peak |W| at t = {time}; wrap-around may contaminate the solution");
            self.warned = true;
        }
        leak
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub l2_norm: f64,
    pub purity: f64,
    pub negativity: f64,
    pub min_value: f64,
    pub boundary_leak: f64,
    pub solver_residual: Option<f64>,
}

impl StepDiagnostics {
    fn measure(state: &WignerState, step: usize, leak: f64, residual: Option<f64>) -> Self {
        let q = quantumness_metrics(state);
        StepDiagnostics {
            step,
            time: state.time,
            mass: state.total_mass(),
            l2_norm: state.grid.l2_norm(),
            purity: q.purity,
            negativity: q.negativity_volume,
            min_value: q.min_value,
            boundary_leak: leak,
            solver_residual: residual,
        }
    }

    pub const CSV_HEADER: &'static str = "step,time,mass,purity,negativity,l2_norm,min_value,boundary_leak";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6e}",
            self.step, self.time, self.mass, self.purity, self.negativity, self.l2_norm, self.min_value, self.boundary_leak
        )
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Retained states, always including the initial and final ones.
    pub snapshots: Vec<WignerState>,
    /// One entry per step, starting with step 0.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn final_state(&self) -> &WignerState {
        self.snapshots.last().expect("trajectory always has a state")
    }

    /// `max_t |mass(t) - mass(0)|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.diagnostics[0].mass;
        self.diagnostics.iter().map(|d| (d.mass - m0).abs()).fold(0.0, f64::max)
    }

    pub fn diagnostics_csv(&self) -> String {
        diagnostics_csv(&self.diagnostics)
    }
}

pub fn diagnostics_csv(rows: &[StepDiagnostics]) -> String {
    let mut s = String::from(StepDiagnostics::CSV_HEADER);
    s.push('\n');
    for d in rows {
        s.push_str(&d.csv_row());
        s.push('\n');
    }
    s
}

/// Single-step integrator bound to one equation and grid.
pub struct Stepper {
    op: CompiledOperator,
    integrator: Integrator,
    dt: f64,
    solver_tol: f64,
    restart: usize,
    max_iter: usize,
    pub state: WignerState,
    pub last_residual: Option<f64>,
}

impl Stepper {
    pub fn new(
        state: WignerState,
        potential: &PolynomialPotential,
        params: Option<&LindbladParams>,
        opts: &EvolveOptions,
    ) -> Result<Self> {
        if !(opts.dt > 0.0 && opts.dt.is_finite()) {
            return Err(Error::BadParams(format!("dt must be positive, got {}", opts.dt)));
        }
        let lp = params.copied().unwrap_or_default();
        lp.validate()?;
        let spec = state.spec();
        if opts.integrator == Integrator::Rk4 {
            let limit = estimate_stable_dt(&spec, potential, state.mass, state.hbar, params, opts.safety);
            if opts.dt > limit {
                return Err(Error::CflViolation { dt: opts.dt, limit });
            }
        }
        let op = compile_for(&lindblad_operator(potential, state.mass, state.hbar, &lp), &spec, &opts.backend)?;
        Ok(Stepper {
            op,
            integrator: opts.integrator,
            dt: opts.dt,
            solver_tol: opts.solver_tol,
            restart: opts.gmres_restart,
            max_iter: opts.gmres_max_iter,
            state,
            last_residual: None,
        })
    }

    pub fn operator(&self) -> &CompiledOperator {
        &self.op
    }

    pub fn step(&mut self) -> Result<()> {
        let w = &self.state.grid.values;
        let dt = self.dt;
        let next = match self.integrator {
            Integrator::Rk4 => {
                let k1 = self.op.apply(w);
                let k2 = self.op.apply(&(w + &(&k1 * (0.5 * dt))));
                let k3 = self.op.apply(&(w + &(&k2 * (0.5 * dt))));
                let k4 = self.op.apply(&(w + &(&k3 * dt)));
                let mut out = w.clone();
                ndarray::Zip::from(&mut out)
                    .and(&k1)
                    .and(&k2)
                    .and(&k3)
                    .and(&k4)
                    .for_each(|o, a, b, c, d| *o += dt / 6.0 * (a + 2.0 * b + 2.0 * c + d));
                out
            }
            Integrator::CrankNicolson => {
                let shape = w.raw_dim();
                let lw = self.op.apply(w);
                let b: Vec<f64> = w.iter().zip(lw.iter()).map(|(x, l)| x + 0.5 * dt * l).collect();
                let op = &self.op;
                let apply = |x: &[f64]| -> Vec<f64> {
                    let xa = Array2::from_shape_vec(shape, x.to_vec()).expect("shape");
                    let lx = op.apply(&xa);
                    x.iter().zip(lx.iter()).map(|(xi, li)| xi - 0.5 * dt * li).collect()
                };
                let x0: Vec<f64> = w.iter().copied().collect();
                let out = gmres(apply, &b, &x0, self.solver_tol, self.restart, self.max_iter);
                self.last_residual = Some(out.relative_residual);
                if !out.converged {
                    return Err(Error::SolverDivergence(format!(
                        "GMRES stopped at relative residual {:.3e} after {} iterations",
                        out.relative_residual, out.iterations
                    )));
                }
                Array2::from_shape_vec(shape, out.x).expect("shape")
            }
        };
        self.state.grid.values = next;
        self.state.time += dt;
        Ok(())
    }
}

/// Integrates the Moyal (or, with `params`, Lindblad) equation.
pub fn evolve(
    state: &WignerState,
    potential: &PolynomialPotential,
    params: Option<&LindbladParams>,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(state.clone(), potential, params, opts)?;
    let mut monitor = BoundaryMonitor::new(&state.spec());
    let leak = monitor.check(&state.grid.values, state.time);
    let mut diagnostics = vec![StepDiagnostics::measure(state, 0, leak, None)];
    let mut snapshots = vec![state.clone()];
    for step in 1..=opts.steps {
        stepper.step()?;
        let leak = monitor.check(&stepper.state.grid.values, stepper.state.time);
        diagnostics.push(StepDiagnostics::measure(&stepper.state, step, leak, stepper.last_residual));
        if opts.keep(step) {
            snapshots.push(stepper.state.clone());
        }
    }
    Ok(Trajectory { snapshots, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub potential: PolynomialPotential,
}

/// Incoherent superposition `W = sum_n w_n W_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::BadParams("mixture needs at least one component".into()));
        }
        if self.components.iter().any(|c| !(c.weight >= 0.0) || !c.weight.is_finite()) {
            return Err(Error::BadParams("mixture weights must be non-negative".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadParams(format!("mixture weights sum to {total}, expected 1")));
        }
        Ok(())
    }

    /// Fock-sector mixture: `U_n = n U0 g(q)` with Poisson weights of mean `mean`.
    pub fn fock(mean: f64, n_max: usize, u0: f64, profile: &super::potential::Polynomial) -> Self {
        MixtureSpec {
            components: poisson_weights(mean, n_max)
                .into_iter()
                .enumerate()
                .map(|(n, weight)| MixtureComponent {
                    weight,
                    potential: PolynomialPotential::fock_sector(n, u0, profile),
                })
                .collect(),
        }
    }
}

/// Poisson probabilities for `n = 0..=n_max`, renormalized to sum to one.
pub fn poisson_weights(mean: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut p = (-mean).exp();
    for n in 0..=n_max {
        if n > 0 {
            p *= mean / n as f64;
        }
        w.push(p);
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

#[derive(Debug, Clone)]
pub struct MixtureTrajectory {
    pub combined: Vec<WignerState>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub components: Vec<Trajectory>,
}

impl MixtureTrajectory {
    pub fn final_state(&self) -> &WignerState {
        self.combined.last().expect("trajectory always has a state")
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.diagnostics[0].mass;
        self.diagnostics.iter().map(|d| (d.mass - m0).abs()).fold(0.0, f64::max)
    }
}

fn combine(mix: &MixtureSpec, states: &[&WignerState]) -> WignerState {
    let mut values = Array2::zeros(states[0].grid.values.raw_dim());
    for (c, s) in mix.components.iter().zip(states) {
        values.scaled_add(c.weight, &s.grid.values);
    }
    let mut out = states[0].with_values(values);
    out.time = states[0].time;
    out
}

fn step_all(steppers: &mut [Stepper], threads: usize) -> Result<()> {
    if threads <= 1 || steppers.len() <= 1 {
        return steppers.iter_mut().try_for_each(Stepper::step);
    }
    let chunk = steppers.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = steppers
            .chunks_mut(chunk)
            .map(|part| scope.spawn(move || part.iter_mut().try_for_each(Stepper::step)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mixture worker panicked"))
            .collect::<Result<Vec<()>>>()
            .map(|_| ())
    })
}

/// Evolves each component under its own potential and mixes the results.
pub fn mixture_evolve(
    mix: &MixtureSpec,
    initial: &[WignerState],
    params: Option<&LindbladParams>,
    opts: &EvolveOptions,
) -> Result<MixtureTrajectory> {
    mix.validate()?;
    if initial.len() != mix.components.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} initial states for {} components",
            initial.len(),
            mix.components.len()
        )));
    }
    let spec = initial[0].spec();
    if initial.iter().any(|s| s.spec() != spec || s.hbar != initial[0].hbar || s.mass != initial[0].mass) {
        return Err(Error::ShapeMismatch("mixture components must share grid, hbar and mass".into()));
    }
    let mut steppers = mix
        .components
        .iter()
        .zip(initial)
        .map(|(c, s)| Stepper::new(s.clone(), &c.potential, params, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut monitor = BoundaryMonitor::new(&spec);
    let mut component_monitors: Vec<BoundaryMonitor> = initial.iter().map(|_| BoundaryMonitor::new(&spec)).collect();

    let record = |steppers: &[Stepper], step: usize, monitor: &mut BoundaryMonitor, cms: &mut [BoundaryMonitor]| {
        let states: Vec<&WignerState> = steppers.iter().map(|s| &s.state).collect();
        let combined = combine(mix, &states);
        let leak = monitor.check(&combined.grid.values, combined.time);
        let diag = StepDiagnostics::measure(&combined, step, leak, None);
        let comps: Vec<StepDiagnostics> = steppers
            .iter()
            .zip(cms.iter_mut())
            .map(|(s, m)| {
                let leak = m.leak(&s.state.grid.values);
                StepDiagnostics::measure(&s.state, step, leak, s.last_residual)
            })
            .collect();
        (combined, diag, comps)
    };

    let (c0, d0, comps0) = record(&steppers, 0, &mut monitor, &mut component_monitors);
    let mut combined = vec![c0];
    let mut diagnostics = vec![d0];
    let mut components: Vec<Trajectory> = comps0
        .into_iter()
        .zip(initial)
        .map(|(d, s)| Trajectory {
            snapshots: vec![s.clone()],
            diagnostics: vec![d],
        })
        .collect();
    for step in 1..=opts.steps {
        step_all(&mut steppers, opts.threads)?;
        let (c, d, comps) = record(&steppers, step, &mut monitor, &mut component_monitors);
        diagnostics.push(d);
        for ((traj, cd), s) in components.iter_mut().zip(comps).zip(&steppers) {
            traj.diagnostics.push(cd);
            if opts.keep(step) {
                traj.snapshots.push(s.state.clone());
            }
        }
        if opts.keep(step) {
            combined.push(c);
        }
    }
    Ok(MixtureTrajectory {
        combined,
        diagnostics,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::super::state::coherent_state;
    use super::*;

    fn small() -> (GridSpec, WignerState) {
        let spec = GridSpec::symmetric(64, 8.0);
        let s = coherent_state(&spec, 1.5, 0.0, 1.0, 1.0, 1.0).unwrap();
        (spec, s)
    }

    #[test]
    fn zero_steps_is_identity() {
        let (_, s) = small();
        let t = evolve(&s, &PolynomialPotential::harmonic(1.0, 1.0), None, &EvolveOptions::new(1e-3, 0)).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.final_state(), &s);
        assert_eq!(t.diagnostics.len(), 1);
    }

    #[test]
    fn cfl_guard_rejects_large_steps() {
        let (spec, s) = small();
        let u = PolynomialPotential::harmonic(1.0, 1.0);
        let limit = estimate_stable_dt(&spec, &u, 1.0, 1.0, None, 0.4);
        assert!(matches!(
            evolve(&s, &u, None, &EvolveOptions::new(limit * 1.01, 1)),
            Err(Error::CflViolation { .. })
        ));
        assert!(evolve(&s, &u, None, &EvolveOptions::new(limit, 1)).is_ok());
    }

    #[test]
    fn crank_nicolson_tracks_rk4() {
        let (spec, s) = small();
        let u = PolynomialPotential::harmonic(1.0, 1.0);
        let dt = estimate_stable_dt(&spec, &u, 1.0, 1.0, None, 0.4);
        let a = evolve(&s, &u, None, &EvolveOptions::new(dt, 20)).unwrap();
        let b = evolve(&s, &u, None, &EvolveOptions::new(dt, 20).with_integrator(Integrator::CrankNicolson)).unwrap();
        let diff = (&a.final_state().grid.values - &b.final_state().grid.values)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-4, "{diff}");
        assert!(b.diagnostics.iter().skip(1).all(|d| d.solver_residual.unwrap() < 1e-10));
    }

    #[test]
    fn mixture_validation() {
        let bad = MixtureSpec {
            components: vec![MixtureComponent {
                weight: 0.7,
                potential: PolynomialPotential::free(),
            }],
        };
        assert!(bad.validate().is_err());
        let w = poisson_weights(1.0, 2);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn threaded_mixture_matches_serial() {
        let (spec, s) = small();
        let mix = MixtureSpec::fock(1.0, 2, 0.5, &super::super::potential::Polynomial::new(vec![0.0, 0.0, 1.0]));
        let dt = 0.002;
        let _ = spec;
        let init = vec![s.clone(), s.clone(), s];
        let serial = mixture_evolve(&mix, &init, None, &EvolveOptions::new(dt, 5)).unwrap();
        let mut opts = EvolveOptions::new(dt, 5);
        opts.threads = 3;
        let par = mixture_evolve(&mix, &init, None, &opts).unwrap();
        assert_eq!(serial.final_state(), par.final_state());
    }
}
