//! Rotates a coherent state once around the harmonic oscillator and reports
//! how far the grid solution drifts from its starting point.

use std::time::Instant;

use waveleton::tensor2d::GridSpec;
use waveleton::wigner::{coherent_state, estimate_stable_dt, evolve, EvolveOptions, PolynomialPotential};

fn main() -> waveleton::Result<()> {
    let spec = GridSpec::symmetric(256, 8.0);
    let w0 = coherent_state(&spec, 2.0, 0.0, 1.0, 1.0, 1.0)?;
    let u = PolynomialPotential::harmonic(1.0, 1.0);
    let period = 2.0 * std::f64::consts::PI;
    let limit = estimate_stable_dt(&spec, &u, 1.0, 1.0, None, 0.4);
    let steps = (period / limit).ceil() as usize;
    let dt = period / steps as f64;
    let start = Instant::now();
    let traj = evolve(&w0, &u, None, &EvolveOptions::new(dt, steps))?;
    let last = traj.final_state();
    let gap = (&last.grid.values - &w0.grid.values).mapv(|v| v * v).sum().sqrt() / w0.grid.values.mapv(|v| v * v).sum().sqrt();
    println!("steps        {steps} (dt = {dt:.5})");
    println!("L2 deviation {gap:.3e}");
    println!("mass drift   {:.3e}", traj.mass_drift());
    println!("elapsed      {:.2?}", start.elapsed());
    Ok(())
}
