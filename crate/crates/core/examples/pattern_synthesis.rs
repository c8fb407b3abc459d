//! Synthesizes fields from coefficient matrices in a symmlet basis and sorts
//! them into localized and equidistributed classes.

use waveleton::io::write_pgm;
use waveleton::patterns::{classify, compute_metrics_in_basis, generate_matrix, synthesize, ClassifyThresholds, CoefficientMatrix, MatrixGenerator};
use waveleton::tensor2d::GridSpec;
use waveleton::wavelet::WaveletFilter;

fn main() -> waveleton::Result<()> {
    let f = WaveletFilter::from_name("symmlet8")?;
    let spec = GridSpec::unit(512, 512);
    let th = ClassifyThresholds::default();
    let cases = [
        ("ones", generate_matrix(&MatrixGenerator::Ones, 512)?),
        ("band", generate_matrix(&MatrixGenerator::BandDiagonal { width: 8, band: 5.0, off: 1.0 }, 512)?),
        ("triangular", generate_matrix(&MatrixGenerator::BandTriangular { width: 8, band: 5.0, off: 1.0 }, 64)?),
        ("random", generate_matrix(&MatrixGenerator::Random { seed: 1 }, 512)?),
        ("one_hot", CoefficientMatrix::one_hot(512, 384, 384)?),
    ];
    println!("{:<11} {:>9} {:>9} {:>9} {:>9}  class", "matrix", "c50", "PR", "entropy", "sep");
    for (name, m) in &cases {
        let g = synthesize(m, &f, 6, &spec)?;
        let metrics = compute_metrics_in_basis(&g, &f, 6)?;
        println!(
            "{name:<11} {:>9.2e} {:>9.2e} {:>9.4} {:>9.4}  {}",
            metrics.concentration_50,
            metrics.participation_ratio,
            metrics.coeff_entropy,
            metrics.separability_defect,
            classify(&metrics, &th)
        );
        write_pgm(&std::env::temp_dir().join(format!("pattern_{name}.pgm")), &g)?;
    }
    Ok(())
}
