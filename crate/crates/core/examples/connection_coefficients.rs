//! Derivative stencils from connection coefficients and their convergence on sin(2 pi x).

use waveleton::operator::connection_coeffs;
use waveleton::wavelet::WaveletFilter;

fn main() -> waveleton::Result<()> {
    for name in ["db3", "db4", "db6"] {
        let f = WaveletFilter::from_name(name)?;
        let cc = connection_coeffs(&f, 1)?;
        println!("{name}: r_l for l = 1..{} = {:?}", cc.half_width, (1..=cc.half_width as isize).map(|l| cc.r(l)).collect::<Vec<_>>());
        let tau = 2.0 * std::f64::consts::PI;
        let mut last: Option<f64> = None;
        for n in [32, 64, 128, 256] {
            let x: Vec<f64> = (0..n).map(|i| (tau * i as f64 / n as f64).sin()).collect();
            let d = cc.apply_periodic(&x, 1.0 / n as f64);
            let err = (0..n).map(|i| (d[i] - tau * (tau * i as f64 / n as f64).cos()).abs()).fold(0.0, f64::max) / tau;
            let rate = last.map(|e| (e / err).log2());
            println!("  N = {n:>4}: max relative error {err:.2e}, observed order {}", rate.map_or("-".into(), |r| format!("{r:.2}")));
            last = Some(err);
        }
    }
    Ok(())
}
