//! Periodic DWT of a chirp with a spike, then the entropy-optimal packet basis.

use waveleton::wavelet::{dwt_periodic, dwt_tiling, idwt_periodic, packet_best_basis, WaveletFilter};

fn main() -> waveleton::Result<()> {
    let n = 1024;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (2.0 * std::f64::consts::PI * (20.0 * t + 60.0 * t * t)).sin() + if i == 700 { 3.0 } else { 0.0 }
        })
        .collect();
    let f = WaveletFilter::from_name("sym8")?;
    let d = dwt_periodic(&x, &f, 5)?;
    let back = idwt_periodic(&d, &f)?;
    let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("coarse level {}, {} detail levels, round-trip error {err:.1e}", d.coarse_level, d.details.len());

    let tree = packet_best_basis(&x, &f, 5)?;
    println!("wavelet basis cost {:.4}", tree.tiling_cost(&dwt_tiling(5)));
    println!("best basis cost    {:.4}", tree.chosen_cost());
    for (level, path) in &tree.chosen_basis {
        println!("  node level {level} path {path:0width$b}", width = (*level).max(1));
    }
    Ok(())
}
