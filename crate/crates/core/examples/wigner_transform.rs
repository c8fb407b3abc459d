//! Wigner functions of oscillator superpositions with their marginals and negativity.

use num_complex::Complex64;
use waveleton::io::write_pgm;
use waveleton::wigner::{matched_momentum_grid, normalize_wavefunction, oscillator_superposition, quantumness_metrics, wigner_transform};

fn main() -> waveleton::Result<()> {
    let spec = matched_momentum_grid(128, -8.0, 8.0, 1.0);
    let cases: [(&str, Vec<f64>); 3] = [("ground", vec![1.0]), ("first excited", vec![0.0, 1.0]), ("cat-like", vec![0.7, 0.0, 0.0, 0.7])];
    for (name, amps) in cases {
        let c: Vec<Complex64> = amps.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let mut psi = oscillator_superposition(&c, &spec, 1.0, 1.0, 1.0);
        normalize_wavefunction(&mut psi, spec.dq())?;
        let w = wigner_transform(&psi, 1.0, &spec)?;
        let marginal_err = w
            .position_marginal()
            .iter()
            .zip(&psi)
            .map(|(m, z)| (m - z.norm_sqr()).abs())
            .fold(0.0, f64::max);
        let q = quantumness_metrics(&w);
        println!(
            "{name:<14} mass {:.6}, marginal error {marginal_err:.1e}, purity {:.6}, negativity {:.4}, min {:.4}",
            w.total_mass(),
            q.purity,
            q.negativity_volume,
            q.min_value
        );
        let path = std::env::temp_dir().join(format!("wigner_{}.pgm", name.replace(' ', "_")));
        write_pgm(&path, &w.grid)?;
        println!("{:<14} heatmap {}", "", path.display());
    }
    Ok(())
}
