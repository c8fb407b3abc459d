//! Dyadic evaluation of the scaling function and wavelet.

use nalgebra::{DMatrix, DVector};

use super::filter::{Family, WaveletFilter};
use crate::error::{Error, Result};

/// Samples of `phi` and `psi` at `x_i = i / 2^depth` over `[0, L-1]`.
#[derive(Debug, Clone)]
pub struct CascadeSamples {
    pub depth: usize,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl CascadeSamples {
    /// Trapezoid-rule integral of `phi`.
    pub fn phi_integral(&self) -> f64 {
        trapezoid(&self.phi, 1.0 / (1u64 << self.depth) as f64)
    }
}

fn trapezoid(v: &[f64], step: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    step * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

/// Values of `phi` at the integers `0..=L-1`.
///
/// These are the eigenvector at eigenvalue 1 of `M_ij = sqrt2 h_{2i-j}`,
/// normalized to unit sum. Haar's eigenspace is degenerate; its values are the
/// indicator of `[0, 1)`.
pub fn integer_values(filter: &WaveletFilter) -> Result<Vec<f64>> {
    let l = filter.len();
    if filter.family == Family::Haar {
        return Ok(vec![1.0, 0.0]);
    }
    // interior nodes 1..=L-2; phi vanishes at both ends for continuous phi
    let n = l - 2;
    let s2 = std::f64::consts::SQRT_2;
    let mut a = DMatrix::<f64>::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            let idx = 2 * (i + 1) as isize - (j + 1) as isize;
            if (0..l as isize).contains(&idx) {
                a[(i, j)] = s2 * filter.h[idx as usize];
            }
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n + 1);
    b[n] = 1.0;
    let svd = a.svd(true, true);
    let v = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let mut out = vec![0.0; l];
    for j in 0..n {
        out[j + 1] = v[j];
    }
    Ok(out)
}

/// Evaluates `phi` and `psi` on the dyadic grid of the given depth.
///
/// Returns `2^depth * support_length + 1` samples of each.
pub fn cascade_eval(filter: &WaveletFilter, dyadic_depth: usize) -> Result<CascadeSamples> {
    if !(1..=16).contains(&dyadic_depth) {
        return Err(Error::BadParams(format!(
            "dyadic depth {dyadic_depth} outside 1..=16"
        )));
    }
    let support = filter.support_length;
    let s2 = std::f64::consts::SQRT_2;
    // phi on the grid of spacing 2^-d, stored as values at i / 2^d
    let mut phi = integer_values(filter)?;
    for d in 1..=dyadic_depth {
        let count = (support << d) + 1;
        let prev_scale = 1usize << (d - 1);
        let mut next = vec![0.0; count];
        for (i, slot) in next.iter_mut().enumerate() {
            if i % 2 == 0 {
                *slot = phi[i / 2];
                continue;
            }
            // phi(x) = sqrt2 sum h_n phi(2x - n), with 2x - n on the previous grid
            let mut s = 0.0;
            for (n, &hn) in filter.h.iter().enumerate() {
                let idx = i as isize - (n * prev_scale) as isize;
                if idx >= 0 && (idx as usize) < phi.len() {
                    s += hn * phi[idx as usize];
                }
            }
            *slot = s2 * s;
        }
        phi = next;
    }
    // psi(x) = sqrt2 sum g_n phi(2x - n): x = i/2^d maps to index 2i - n 2^d
    let scale = 1usize << dyadic_depth;
    let count = support * scale + 1;
    let psi: Vec<f64> = (0..count)
        .map(|i| {
            let s: f64 = filter
                .g
                .iter()
                .enumerate()
                .filter_map(|(n, &gn)| {
                    let idx = 2 * i as isize - (n * scale) as isize;
                    (idx >= 0 && (idx as usize) < phi.len()).then(|| gn * phi[idx as usize])
                })
                .sum();
            s2 * s
        })
        .collect();
    let x = (0..count).map(|i| i as f64 / scale as f64).collect();
    Ok(CascadeSamples {
        depth: dyadic_depth,
        x,
        phi,
        psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::filter::make_filter;

    #[test]
    fn haar_scaling_function_is_indicator() {
        let f = make_filter(Family::Haar, 1).unwrap();
        for depth in [1, 4, 9] {
            let c = cascade_eval(&f, depth).unwrap();
            assert_eq!(c.phi.len(), (1 << depth) + 1);
            for (x, v) in c.x.iter().zip(&c.phi) {
                assert!((v - if *x < 1.0 { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
            for (x, v) in c.x.iter().zip(&c.psi) {
                let want = if *x < 0.5 { 1.0 } else if *x < 1.0 { -1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn db2_integrates_to_one() {
        let f = make_filter(Family::Daubechies, 2).unwrap();
        let c = cascade_eval(&f, 10).unwrap();
        assert_eq!(c.phi.len(), (1 << 10) * 3 + 1);
        assert!((c.phi_integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn db2_integer_values_closed_form() {
        // phi(1) = (1+sqrt3)/2, phi(2) = (1-sqrt3)/2
        let f = make_filter(Family::Daubechies, 2).unwrap();
        let v = integer_values(&f).unwrap();
        let s3 = 3f64.sqrt();
        assert!(v[0].abs() < 1e-14 && v[3].abs() < 1e-14);
        assert!((v[1] - (1.0 + s3) / 2.0).abs() < 1e-13);
        assert!((v[2] - (1.0 - s3) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_depth() {
        let f = make_filter(Family::Daubechies, 2).unwrap();
        assert!(cascade_eval(&f, 0).is_err());
        assert!(cascade_eval(&f, 17).is_err());
    }
}
