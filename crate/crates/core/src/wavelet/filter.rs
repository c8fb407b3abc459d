//! Orthonormal quadrature-mirror filter construction.
//!
//! Daubechies and symmlet low-pass filters are obtained by spectral
//! factorization of the Daubechies half-band polynomial
//! `P(y) = sum_{k<M} C(M-1+k, k) y^k`, `y = sin^2(w/2)`. Each root `y_i` maps to
//! a reciprocal pair `z, 1/z` on `z + 1/z = 2 - 4 y_i`; picking one member of
//! every pair yields a valid spectral factor. Daubechies takes the
//! extremal-phase choice, symmlets the choice with the most linear phase.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Haar,
    Daubechies,
    Symmlet,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Haar => "haar",
            Family::Daubechies => "daubechies",
            Family::Symmlet => "symmlet",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Family::Haar),
            "daubechies" | "db" => Ok(Family::Daubechies),
            "symmlet" | "sym" | "symlet" => Ok(Family::Symmlet),
            other => Err(Error::BadParams(format!("unknown filter family '{other}'"))),
        }
    }
}

/// A compactly supported orthonormal wavelet filter pair.
///
/// `g` is derived from `h` with the fixed convention `g_k = (-1)^k h_{L-1-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    pub family: Family,
    /// Number of vanishing moments.
    pub order: usize,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    /// Width of the scaling-function support, `L - 1`.
    pub support_length: usize,
}

impl WaveletFilter {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Short name such as `db3` or `sym8`.
    pub fn name(&self) -> String {
        match self.family {
            Family::Haar => "haar".to_string(),
            Family::Daubechies => format!("db{}", self.order),
            Family::Symmlet => format!("sym{}", self.order),
        }
    }

    /// Parses `haar`, `dbN`, `daubechiesN`, `symN`, `symmletN`.
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        if lower == "haar" {
            return make_filter(Family::Haar, 1);
        }
        let split = lower
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| Error::BadParams(format!("filter name '{name}' has no order")))?;
        let (fam, ord) = lower.split_at(split);
        let order: usize = ord
            .parse()
            .map_err(|_| Error::BadParams(format!("bad filter order in '{name}'")))?;
        make_filter(fam.parse()?, order)
    }

    /// JSON export `{family, order, h[], g[]}` with 17 significant digits.
    pub fn to_json(&self) -> String {
        let fmt_arr = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "{{\n  \"family\": \"{}\",\n  \"order\": {},\n  \"h\": [{}],\n  \"g\": [{}]\n}}\n",
            self.family,
            self.order,
            fmt_arr(&self.h),
            fmt_arr(&self.g)
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            family: Family,
            order: usize,
            h: Vec<f64>,
            g: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        if raw.h.len() != raw.g.len() || raw.h.len() < 2 || raw.h.len() % 2 != 0 {
            return Err(Error::Format("filter h/g lengths inconsistent".into()));
        }
        let expected = highpass_from_lowpass(&raw.h);
        if expected
            .iter()
            .zip(&raw.g)
            .any(|(a, b)| (a - b).abs() > 1e-14)
        {
            return Err(Error::Format("g does not follow the alternating flip of h".into()));
        }
        Ok(WaveletFilter {
            family: raw.family,
            order: raw.order,
            support_length: raw.h.len() - 1,
            h: raw.h,
            g: raw.g,
        })
    }

    /// Largest violation of `sum h = sqrt 2` and the double-shift orthonormality.
    pub fn orthonormality_defect(&self) -> f64 {
        let l = self.h.len();
        let mut worst = (self.h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs();
        for m in 0..l / 2 {
            let s: f64 = (0..l - 2 * m).map(|k| self.h[k] * self.h[k + 2 * m]).sum();
            let target = if m == 0 { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
        worst
    }

    /// Largest `|sum_k g_k k^m|` for `m < order`, scaled by `sum_k |g_k| k^m`.
    pub fn moment_defect(&self) -> f64 {
        (0..self.order)
            .map(|m| {
                let (s, scale) = self
                    .g
                    .iter()
                    .enumerate()
                    .fold((0.0, 0.0), |(s, a), (k, &gk)| {
                        let p = (k as f64).powi(m as i32);
                        (s + gk * p, a + gk.abs() * p)
                    });
                (s / scale.max(1.0)).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn highpass_from_lowpass(h: &[f64]) -> Vec<f64> {
    let l = h.len();
    (0..l)
        .map(|k| if k % 2 == 0 { h[l - 1 - k] } else { -h[l - 1 - k] })
        .collect()
}

/// Builds a filter of the given family and number of vanishing moments.
///
/// Haar takes order 1; Daubechies and symmlets take orders 2..=10.
pub fn make_filter(family: Family, order: usize) -> Result<WaveletFilter> {
    let unsupported = || Error::UnsupportedOrder {
        family: family.to_string(),
        order,
    };
    let h = match family {
        Family::Haar => {
            if order != 1 {
                return Err(unsupported());
            }
            vec![std::f64::consts::FRAC_1_SQRT_2; 2]
        }
        Family::Daubechies => {
            if !(2..=10).contains(&order) {
                return Err(unsupported());
            }
            daubechies_lowpass(order)
        }
        Family::Symmlet => {
            if !(2..=10).contains(&order) {
                return Err(unsupported());
            }
            symmlet_lowpass(order)
        }
    };
    let filter = WaveletFilter {
        family,
        order,
        g: highpass_from_lowpass(&h),
        support_length: h.len() - 1,
        h,
    };
    if filter.orthonormality_defect() > 1e-12 || filter.moment_defect() > 1e-10 {
        return Err(Error::SingularSystem(format!(
            "constructed {} filter failed validation",
            filter.name()
        )));
    }
    Ok(filter)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Roots of the half-band polynomial in `y`, polished by Newton steps.
fn halfband_roots(m: usize) -> Vec<Complex64> {
    let coeffs: Vec<f64> = (0..m).map(|k| binomial(m - 1 + k, k)).collect();
    let deg = m - 1;
    if deg == 0 {
        return Vec::new();
    }
    // companion matrix of the monic polynomial
    let lead = coeffs[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let eig = comp.complex_eigenvalues();
    let eval = |z: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    eig.iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..8 {
                let (p, dp) = eval(z);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                z -= step;
                if step.norm() < 1e-17 * z.norm().max(1.0) {
                    break;
                }
            }
            z
        })
        .collect()
}

/// Groups of z-roots: a real y-root gives one real z; a conjugate pair of
/// y-roots gives a conjugate pair of z. Each group stores the root inside the
/// unit circle; the alternative is its reciprocal.
fn inner_root_groups(m: usize) -> Vec<Vec<Complex64>> {
    let ys = halfband_roots(m);
    let mut groups = Vec::new();
    let mut used = vec![false; ys.len()];
    for i in 0..ys.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let y = ys[i];
        let a = Complex64::new(1.0, 0.0) - y * 2.0;
        let disc = (a * a - 1.0).sqrt();
        let mut z = a + disc;
        if z.norm() > 1.0 {
            z = a - disc;
        }
        if y.im.abs() < 1e-9 * y.norm().max(1.0) {
            groups.push(vec![Complex64::new(z.re, 0.0)]);
        } else {
            // find the conjugate partner
            if let Some(j) = (i + 1..ys.len())
                .filter(|&j| !used[j])
                .min_by(|&a, &b| {
                    (ys[a] - y.conj())
                        .norm()
                        .partial_cmp(&(ys[b] - y.conj()).norm())
                        .unwrap()
                })
            {
                used[j] = true;
            }
            groups.push(vec![z, z.conj()]);
        }
    }
    groups
}

/// Expands `(1 + z)^m * prod (z - r)` and normalizes to `sum h = sqrt 2`.
fn lowpass_from_roots(m: usize, roots: &[Complex64]) -> Vec<f64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mul = |poly: &mut Vec<Complex64>, r: Complex64| {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, &c) in poly.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * r;
        }
        *poly = next;
    };
    for _ in 0..m {
        mul(&mut poly, Complex64::new(-1.0, 0.0));
    }
    for &r in roots {
        mul(&mut poly, r);
    }
    let h: Vec<f64> = poly.iter().map(|c| c.re).collect();
    let s: f64 = h.iter().sum();
    h.iter().map(|x| x * std::f64::consts::SQRT_2 / s).collect()
}

fn choose_roots(groups: &[Vec<Complex64>], mask: u64) -> Vec<Complex64> {
    groups
        .iter()
        .enumerate()
        .flat_map(|(i, g)| {
            let outside = mask >> i & 1 == 1;
            g.iter()
                .map(move |&z| if outside { z.inv() } else { z })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn daubechies_lowpass(m: usize) -> Vec<f64> {
    let groups = inner_root_groups(m);
    // zeros inside the unit circle in z give the maximally back-loaded filter;
    // reverse to the classical front-loaded (minimum-phase) ordering
    let mut h = lowpass_from_roots(m, &choose_roots(&groups, 0));
    h.reverse();
    h
}

/// Deviation of the filter phase from a straight line over the passband.
fn phase_nonlinearity(h: &[f64]) -> f64 {
    let samples = 256;
    let mut phases = Vec::with_capacity(samples);
    let mut freqs = Vec::with_capacity(samples);
    let mut prev: Option<f64> = None;
    let mut offset = 0.0;
    for s in 1..samples {
        // stay clear of w = pi where |H| vanishes to high order
        let w = std::f64::consts::PI * 0.9 * s as f64 / samples as f64;
        let resp: Complex64 = h
            .iter()
            .enumerate()
            .map(|(k, &hk)| Complex64::from_polar(hk, -(k as f64) * w))
            .sum();
        let mut ph = resp.arg();
        if let Some(p) = prev {
            while ph + offset - p > std::f64::consts::PI {
                offset -= 2.0 * std::f64::consts::PI;
            }
            while ph + offset - p < -std::f64::consts::PI {
                offset += 2.0 * std::f64::consts::PI;
            }
        }
        ph += offset;
        prev = Some(ph);
        phases.push(ph);
        freqs.push(w);
    }
    let n = freqs.len() as f64;
    let mx = freqs.iter().sum::<f64>() / n;
    let my = phases.iter().sum::<f64>() / n;
    let sxy: f64 = freqs.iter().zip(&phases).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = freqs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    freqs
        .iter()
        .zip(&phases)
        .map(|(x, y)| {
            let r = y - my - slope * (x - mx);
            r * r
        })
        .sum::<f64>()
        / n
}

fn symmlet_lowpass(m: usize) -> Vec<f64> {
    let groups = inner_root_groups(m);
    let combos = 1u64 << groups.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    // masks and their complements give time-reversed filters with equal phase
    // deviation; scanning only the lower half fixes the orientation
    for mask in 0..combos.div_ceil(2).max(1) {
        let h = lowpass_from_roots(m, &choose_roots(&groups, mask));
        let cost = phase_nonlinearity(&h);
        if best.as_ref().is_none_or(|(c, _)| cost < *c - 1e-12) {
            best = Some((cost, h));
        }
    }
    best.map(|(_, h)| h).unwrap_or_default()
}
