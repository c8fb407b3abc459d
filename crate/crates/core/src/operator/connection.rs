//! Connection coefficients for derivatives in a Daubechies-type basis.
//!
//! For `rho_l = int phi^(n)(y) phi(y - l) dy` the refinement relation gives the
//! homogeneous two-scale system
//!
//! ```text
//! rho_l = 2^n sum_m a_m rho_{2l + m},    a_m = sum_i h_i h_{i+m},
//! ```
//!
//! on `|l| <= L - 2`, fixed up to scale. The scale is pinned by the moment
//! condition `sum_l l^n rho_l = (-1)^n n!`, which makes the induced stencil
//! `(D s)_k = sum_l rho_l s_{k-l}` differentiate `t^n` exactly.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::wavelet::{Family, WaveletFilter};

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionCoefficients {
    pub derivative_order: usize,
    pub filter_name: String,
    /// Largest shift with a nonzero coefficient, `L - 2`.
    pub half_width: usize,
    /// Values for `l = -half_width ..= half_width`.
    pub values: Vec<f64>,
    /// Residual of the two-scale system at the returned solution.
    pub refinement_residual: f64,
}

impl ConnectionCoefficients {
    /// Coefficient at shift `l` (zero outside the support).
    pub fn r(&self, l: isize) -> f64 {
        let idx = l + self.half_width as isize;
        if idx < 0 || idx as usize >= self.values.len() {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    pub fn shifts(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        let w = self.half_width as isize;
        self.values.iter().enumerate().map(move |(i, &v)| (i as isize - w, v))
    }

    /// Applies the periodic stencil scaled for grid spacing `step`.
    pub fn apply_periodic(&self, f: &[f64], step: f64) -> Vec<f64> {
        let n = f.len() as isize;
        let scale = step.powi(-(self.derivative_order as i32));
        (0..n)
            .map(|k| {
                scale
                    * self
                        .shifts()
                        .map(|(l, r)| r * f[(k - l).rem_euclid(n) as usize])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Minimum vanishing moments accepted for derivative order `n`.
pub fn required_moments(n: usize) -> usize {
    (n + 1).div_ceil(2) + 1
}

/// Autocorrelation `a_m` of the low-pass filter for `m = -(L-1)..=L-1`.
pub(crate) fn autocorrelation(h: &[f64]) -> Vec<f64> {
    let l = h.len() as isize;
    (-(l - 1)..l)
        .map(|m| {
            (0..l)
                .filter(|&i| (0..l).contains(&(i + m)))
                .map(|i| h[i as usize] * h[(i + m) as usize])
                .sum()
        })
        .collect()
}

/// Solves the two-scale system for derivative order `n >= 1`.
pub fn connection_coeffs(filter: &WaveletFilter, n: usize) -> Result<ConnectionCoefficients> {
    if n == 0 {
        return Err(Error::BadParams("derivative order must be at least 1".into()));
    }
    let needed = required_moments(n);
    if filter.family == Family::Haar || filter.order < needed {
        return Err(Error::InsufficientRegularity {
            order: n,
            needed,
            have: filter.order,
        });
    }
    let len = filter.len() as isize;
    let w = len - 2;
    let size = (2 * w + 1) as usize;
    let a = autocorrelation(&filter.h);
    let a_at = |m: isize| -> f64 {
        let idx = m + len - 1;
        if idx < 0 || idx as usize >= a.len() {
            0.0
        } else {
            a[idx as usize]
        }
    };
    let scale = 2f64.powi(n as i32);
    // rows: 2^n sum_m a_m rho_{2l+m} - rho_l = 0
    let mut sys = DMatrix::<f64>::zeros(size, size);
    for l in -w..=w {
        let row = (l + w) as usize;
        for k in -w..=w {
            sys[(row, (k + w) as usize)] += scale * a_at(k - 2 * l);
        }
        sys[(row, row)] -= 1.0;
    }
    let sv = sys.clone().svd(false, false).singular_values;
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let top = sorted.last().copied().unwrap_or(1.0);
    if sorted.len() > 1 && sorted[1] < 1e-10 * top {
        return Err(Error::SingularSystem(format!(
            "two-scale system for order {n} has a null space of dimension > 1"
        )));
    }
    // append the moment normalization and solve in the least-squares sense
    let mut full = DMatrix::<f64>::zeros(size + 1, size);
    full.view_mut((0, 0), (size, size)).copy_from(&sys);
    let mut rhs = DVector::<f64>::zeros(size + 1);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    for l in -w..=w {
        full[(size, (l + w) as usize)] = (l as f64).powi(n as i32);
    }
    rhs[size] = if n % 2 == 0 { fact } else { -fact };
    let sol = full
        .svd(true, true)
        .solve(&rhs, 1e-15)
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let mut values: Vec<f64> = sol.iter().copied().collect();
    // symmetrize to remove roundoff asymmetry
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    for i in 0..size / 2 {
        let j = size - 1 - i;
        let avg = 0.5 * (values[i] + sign * values[j]);
        values[i] = avg;
        values[j] = sign * avg;
    }
    if n % 2 == 1 {
        values[size / 2] = 0.0;
    }
    let resid = (&sys * DVector::from_column_slice(&values)).amax();
    if resid > 1e-10 {
        return Err(Error::SingularSystem(format!(
            "two-scale residual {resid:e} too large for order {n}"
        )));
    }
    Ok(ConnectionCoefficients {
        derivative_order: n,
        filter_name: filter.name(),
        half_width: w as usize,
        values,
        refinement_residual: resid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::make_filter;

    #[test]
    fn haar_is_rejected() {
        let f = make_filter(Family::Haar, 1).unwrap();
        assert!(matches!(
            connection_coeffs(&f, 1),
            Err(Error::InsufficientRegularity { .. })
        ));
    }

    #[test]
    fn regularity_threshold() {
        assert_eq!(required_moments(1), 2);
        assert_eq!(required_moments(2), 3);
        assert_eq!(required_moments(3), 3);
        assert_eq!(required_moments(4), 4);
        let db2 = make_filter(Family::Daubechies, 2).unwrap();
        assert!(connection_coeffs(&db2, 2).is_err());
    }

    #[test]
    fn db2_first_derivative_is_fourth_order_central_difference() {
        let f = make_filter(Family::Daubechies, 2).unwrap();
        let c = connection_coeffs(&f, 1).unwrap();
        assert_eq!(c.half_width, 2);
        assert!(c.r(0).abs() < 1e-15);
        for (l, want) in [(-2, -1.0 / 12.0), (-1, 2.0 / 3.0), (1, -2.0 / 3.0), (2, 1.0 / 12.0)] {
            assert!((c.r(l) - want).abs() < 1e-12, "r_{l} = {}", c.r(l));
        }
    }

    #[test]
    fn parity_holds_for_all_orders() {
        for m in 3..=8 {
            let f = make_filter(Family::Daubechies, m).unwrap();
            for n in 1..=4 {
                if f.order < required_moments(n) {
                    continue;
                }
                let c = connection_coeffs(&f, n).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                for l in 0..=c.half_width as isize {
                    assert!((c.r(-l) - sign * c.r(l)).abs() < 1e-12);
                }
                assert!(c.refinement_residual < 1e-10);
            }
        }
    }
}
