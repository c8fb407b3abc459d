//! Reduces the harmonic Moyal equation onto symmlet scaling modes of several
//! levels and compares each reduced solution with the full grid solution.

use waveleton::galerkin::{assemble, project_initial, solve_evolution, EquationSpec, ModeAnsatz, SolveOptions};
use waveleton::tensor2d::GridSpec;
use waveleton::wavelet::{make_filter, Family};
use waveleton::wigner::{coherent_state, estimate_stable_dt, evolve, DerivativeBackend, EvolveOptions, PolynomialPotential};

fn main() -> waveleton::Result<()> {
    let spec = GridSpec::symmetric(256, 8.0);
    let w0 = coherent_state(&spec, 2.0, 0.0, 1.0, 1.0, 1.0)?;
    let u = PolynomialPotential::harmonic(1.0, 1.0);
    let period = 2.0 * std::f64::consts::PI;
    let backend = DerivativeBackend::default();

    let steps = (period / estimate_stable_dt(&spec, &u, 1.0, 1.0, None, 0.4)).ceil() as usize;
    let grid = evolve(&w0, &u, None, &EvolveOptions::new(period / steps as f64, steps))?;
    let reference = &grid.final_state().grid.values;
    let ref_norm = reference.mapv(|v| v * v).sum().sqrt();

    let filter = make_filter(Family::Symmlet, 8)?;
    let eq = EquationSpec::Moyal {
        potential: u.clone(),
        mass: 1.0,
        hbar: 1.0,
    };
    for level in 3..=6 {
        let ansatz = ModeAnsatz::scaling_level(&filter, &spec, level)?;
        let system = assemble(&eq, &ansatz, &backend)?;
        let proj = project_initial(&w0, &ansatz)?;
        let n = (period / SolveOptions::stable_dt(&system)).ceil() as usize;
        let traj = solve_evolution(&system, &proj.coeffs, &SolveOptions::new(period / n as f64, n))?;
        let w = ansatz.synthesize(traj.final_coeffs())?;
        let gap = (&w - reference).mapv(|v| v * v).sum().sqrt() / ref_norm;
        println!(
            "level {level}: {:>4} modes, projection error {:.3e}, gap after one period {:.3e}",
            ansatz.shape().0 * ansatz.shape().1,
            proj.relative_error,
            gap
        );
    }
    Ok(())
}
