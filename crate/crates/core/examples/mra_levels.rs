//! Splits the demo signals into per-level pieces and finds the cutoff level.

use waveleton::mra::{cutoff_level, demo_signal, multi_norm, reconstruct_level, slots, DemoSignal};
use waveleton::wavelet::{dwt_periodic, WaveletFilter};

fn main() -> waveleton::Result<()> {
    let n = 1024;
    let f = WaveletFilter::from_name("sym8")?;
    let signals = [
        DemoSignal::kick(0.5, n),
        DemoSignal::Multikick {
            kicks: vec![(0.2, 1.0), (0.6, -0.5)],
            width: 0.004,
        },
        DemoSignal::rw_default(),
    ];
    for s in &signals {
        let x = demo_signal(s, n)?;
        let d = dwt_periodic(&x, &f, 7)?;
        let norms = multi_norm(&d);
        let cut = cutoff_level(&d, 1e-3)?;
        let mut sum = vec![0.0; n];
        for slot in slots(&d) {
            for (a, v) in sum.iter_mut().zip(reconstruct_level(&d, &f, slot)?) {
                *a += v;
            }
        }
        let err = x.iter().zip(&sum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{:<10} energy by level {:?}", s.name(), norms.per_level_energy.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>());
        println!("{:<10} cutoff {:?}, sum of levels error {err:.1e}", "", cut);
    }
    Ok(())
}
