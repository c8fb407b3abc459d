#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// `d^order/dp^order` along rows (the p axis) by FFT, Nyquist dropped for odd orders.
pub fn spectral_dp(values: &Array2<f64>, dp: f64, order: u32) -> Array2<f64> {
    let (nq, np) = values.dim();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(np);
    let inv = planner.plan_fft_inverse(np);
    let period = dp * np as f64;
    let mut out = Array2::zeros((nq, np));
    for i in 0..nq {
        let mut row: Vec<Complex64> = values.row(i).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut row);
        for (k, c) in row.iter_mut().enumerate() {
            let kk = if k <= np / 2 { k as f64 } else { k as f64 - np as f64 };
            if order % 2 == 1 && k == np / 2 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let w = Complex64::new(0.0, 2.0 * std::f64::consts::PI * kk / period);
            *c *= w.powu(order);
        }
        inv.process(&mut row);
        for (k, c) in row.iter().enumerate() {
            out[[i, k]] = c.re / np as f64;
        }
    }
    out
}

pub fn rel_l2(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Small deterministic generator for test fixtures.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
