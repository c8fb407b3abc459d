//! A displaced cat-like state relaxes under damping and diffusion toward the
//! stationary Gaussian; negativity disappears along the way.

use num_complex::Complex64;
use waveleton::wigner::{
    gaussian_wigner, matched_momentum_grid, normalize_wavefunction, oscillator_superposition, quantumness_metrics,
    stationary_gaussian_widths, wigner_transform, estimate_stable_dt, evolve, EvolveOptions, LindbladParams, PolynomialPotential,
};

fn main() -> waveleton::Result<()> {
    let spec = matched_momentum_grid(128, -8.0, 8.0, 1.0);
    let c = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.8, 0.0)];
    let mut psi = oscillator_superposition(&c, &spec, 1.0, 1.0, 1.0);
    normalize_wavefunction(&mut psi, spec.dq())?;
    let w0 = wigner_transform(&psi, 1.0, &spec)?;
    let u = PolynomialPotential::harmonic(1.0, 1.0);
    let params = LindbladParams::new(0.25, 0.4)?;
    let dt = estimate_stable_dt(&spec, &u, 1.0, 1.0, Some(&params), 0.4);
    let steps = (30.0 / dt).ceil() as usize;
    let traj = evolve(&w0, &u, Some(&params), &EvolveOptions::new(30.0 / steps as f64, steps).with_snapshots(steps / 6))?;
    for s in &traj.snapshots {
        let q = quantumness_metrics(s);
        println!("t = {:>5.2}: purity {:.4}, negativity {:.2e}", s.time, q.purity, q.negativity_volume);
    }
    let (sq, sp) = stationary_gaussian_widths(1.0, 1.0, &params)?;
    let target = gaussian_wigner(&spec, 0.0, 0.0, sq, sp, 1.0, 1.0)?;
    let gap = (&traj.final_state().grid.values - &target.grid.values).mapv(|v| v * v).sum().sqrt() / target.grid.l2_norm();
    println!("distance to stationary Gaussian (sigma_q = {sq:.3}, sigma_p = {sp:.3}): {gap:.2e}");
    println!("mass drift {:.2e}", traj.mass_drift());
    Ok(())
}
