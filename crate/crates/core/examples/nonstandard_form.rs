//! Non-standard form of d/dx and of a smooth integral kernel, before and after thresholding.

use waveleton::operator::{apply_nonstandard, build_nonstandard_form, threshold_sparsity, OperatorSpec};
use waveleton::wavelet::WaveletFilter;

fn main() -> waveleton::Result<()> {
    let f = WaveletFilter::from_name("db6")?;
    let n = 1024;
    let x: Vec<f64> = (0..n).map(|i| (-((i as f64 / n as f64 - 0.5) / 0.1).powi(2)).exp()).collect();
    let kernel = OperatorSpec::sampled_kernel(n, |x, y| 1.0 / (1.0 + 20.0 * (std::f64::consts::PI * (x - y)).sin().powi(2)));
    for (name, spec) in [("d/dx", OperatorSpec::Derivative { order: 1 }), ("kernel", kernel)] {
        let nsf = build_nonstandard_form(&spec, &f, 5, n)?;
        let exact = apply_nonstandard(&nsf, &x)?;
        println!("{name}: {} nonzeros over {} levels", nsf.nnz(), nsf.levels());
        for eps in [1e-12, 1e-8, 1e-4] {
            let (thin, stats) = threshold_sparsity(&nsf, eps)?;
            let approx = apply_nonstandard(&thin, &x)?;
            let err = exact.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("  eps {eps:.0e}: {:>7} nonzeros, apply error {err:.2e}, bound {:.2e}", stats.nonzeros_after, stats.max_apply_error_bound);
        }
        for (level, block, b) in nsf.labeled_blocks().into_iter().take(4) {
            println!("  level {level} {block}: nnz {}, bandwidth {}", b.nnz(), b.bandwidth());
        }
    }
    Ok(())
}
