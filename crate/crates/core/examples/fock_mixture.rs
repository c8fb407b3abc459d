//! Incoherent mixture over photon-number sectors: each sector n feels the
//! potential n U0 g(q) and the sectors are weighted by a Poisson distribution.

use waveleton::tensor2d::GridSpec;
use waveleton::wigner::{coherent_state, estimate_stable_dt, mixture_evolve, quantumness_metrics, EvolveOptions, MixtureSpec, Polynomial};

fn main() -> waveleton::Result<()> {
    let spec = GridSpec::symmetric(128, 8.0);
    let mix = MixtureSpec::fock(2.0, 5, 0.3, &Polynomial::new(vec![0.0, 0.0, 1.0]));
    for (n, c) in mix.components.iter().enumerate() {
        println!("sector {n}: weight {:.4}", c.weight);
    }
    let w0 = coherent_state(&spec, 2.0, 0.0, 1.0, 1.0, 1.0)?;
    let dt = mix
        .components
        .iter()
        .map(|c| estimate_stable_dt(&spec, &c.potential, 1.0, 1.0, None, 0.4))
        .fold(f64::INFINITY, f64::min);
    let steps = (6.0 / dt).ceil() as usize;
    let mut opts = EvolveOptions::new(6.0 / steps as f64, steps).with_snapshots(steps / 4);
    opts.threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let init = vec![w0; mix.components.len()];
    let traj = mixture_evolve(&mix, &init, None, &opts)?;
    for s in &traj.combined {
        let q = quantumness_metrics(s);
        println!("t = {:>4.2}: mass {:.10}, purity {:.4}", s.time, s.total_mass(), q.purity);
    }
    println!("mass drift {:.2e}", traj.mass_drift());
    Ok(())
}
