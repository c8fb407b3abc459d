//! Periodic fast wavelet transform.
//!
//! Analysis keeps the even-indexed outputs of the circular correlation:
//! `a_k = sum_n h_n x_{(2k+n) mod N}`, `d_k = sum_n g_n x_{(2k+n) mod N}`.

use serde::{Deserialize, Serialize};

use super::filter::WaveletFilter;
use crate::error::{Error, Result};

/// Coarse plus per-level detail coefficients of a dyadic signal.
///
/// Levels use the convention that level `j` holds `2^j` coefficients, so the
/// coarse space is `V_c` with `c = J - levels` and `details[i]` belongs to
/// level `c + i`, coarse first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MraDecomposition {
    pub coarse_level: usize,
    pub coarse: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub original_length: usize,
}

impl MraDecomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Index of the finest stored level, `J - 1`.
    pub fn finest_level(&self) -> usize {
        self.coarse_level + self.details.len().saturating_sub(1)
    }

    /// Detail coefficients at absolute level `j`.
    pub fn detail(&self, j: usize) -> Option<&[f64]> {
        j.checked_sub(self.coarse_level)
            .and_then(|i| self.details.get(i))
            .map(Vec::as_slice)
    }

    /// Coefficients in the standard flat layout: coarse, then levels ascending.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.original_length);
        out.extend_from_slice(&self.coarse);
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }

    /// Inverse of [`MraDecomposition::to_flat`].
    pub fn from_flat(flat: &[f64], levels: usize) -> Result<Self> {
        let n = flat.len();
        let j = dyadic_exponent(n)?;
        if levels > j {
            return Err(Error::TooManyLevels { requested: levels, max: j });
        }
        let c = j - levels;
        let mut pos = 1usize << c;
        let coarse = flat[..pos].to_vec();
        let mut details = Vec::with_capacity(levels);
        for lev in c..j {
            let len = 1usize << lev;
            details.push(flat[pos..pos + len].to_vec());
            pos += len;
        }
        Ok(MraDecomposition {
            coarse_level: c,
            coarse,
            details,
            original_length: n,
        })
    }

    pub fn energy(&self) -> f64 {
        self.coarse.iter().map(|x| x * x).sum::<f64>()
            + self
                .details
                .iter()
                .flat_map(|d| d.iter())
                .map(|x| x * x)
                .sum::<f64>()
    }

    fn check_consistent(&self) -> Result<()> {
        let j = dyadic_exponent(self.original_length)?;
        if self.coarse_level + self.details.len() != j || self.coarse.len() != 1 << self.coarse_level
        {
            return Err(Error::ShapeMismatch(format!(
                "coarse level {} with {} detail levels does not tile length {}",
                self.coarse_level,
                self.details.len(),
                self.original_length
            )));
        }
        for (i, d) in self.details.iter().enumerate() {
            if d.len() != 1 << (self.coarse_level + i) {
                return Err(Error::ShapeMismatch(format!(
                    "detail level {} has {} coefficients",
                    self.coarse_level + i,
                    d.len()
                )));
            }
        }
        Ok(())
    }
}

/// `log2 n` for a power of two, `BadLength` otherwise.
pub fn dyadic_exponent(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::BadLength(n));
    }
    Ok(n.trailing_zeros() as usize)
}

/// One analysis step: returns (coarse, detail), each of half length.
pub fn analysis_step(x: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        let mut sa = 0.0;
        let mut sd = 0.0;
        for (t, (&hn, &gn)) in filter.h.iter().zip(&filter.g).enumerate() {
            let v = x[(2 * k + t) % n];
            sa += hn * v;
            sd += gn * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

/// One synthesis step, the adjoint of [`analysis_step`].
pub fn synthesis_step(a: &[f64], d: &[f64], filter: &WaveletFilter) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for k in 0..a.len() {
        for (t, (&hn, &gn)) in filter.h.iter().zip(&filter.g).enumerate() {
            x[(2 * k + t) % n] += hn * a[k] + gn * d[k];
        }
    }
    x
}

/// Forward periodic transform over `levels` dyadic steps.
pub fn dwt_periodic(
    signal: &[f64],
    filter: &WaveletFilter,
    levels: usize,
) -> Result<MraDecomposition> {
    let n = signal.len();
    let j = dyadic_exponent(n)?;
    if levels > j {
        return Err(Error::TooManyLevels { requested: levels, max: j });
    }
    if n < filter.support_length {
        return Err(Error::BadLength(n));
    }
    let mut current = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&current, filter);
        details.push(d);
        current = a;
    }
    details.reverse();
    Ok(MraDecomposition {
        coarse_level: j - levels,
        coarse: current,
        details,
        original_length: n,
    })
}

/// Inverse of [`dwt_periodic`].
pub fn idwt_periodic(decomp: &MraDecomposition, filter: &WaveletFilter) -> Result<Vec<f64>> {
    decomp.check_consistent()?;
    let mut current = decomp.coarse.clone();
    for d in &decomp.details {
        current = synthesis_step(&current, d, filter);
    }
    Ok(current)
}

/// Forward transform returning the flat coefficient layout.
pub fn dwt_flat(signal: &[f64], filter: &WaveletFilter, levels: usize) -> Result<Vec<f64>> {
    Ok(dwt_periodic(signal, filter, levels)?.to_flat())
}

/// Inverse transform from the flat coefficient layout.
pub fn idwt_flat(coeffs: &[f64], filter: &WaveletFilter, levels: usize) -> Result<Vec<f64>> {
    idwt_periodic(&MraDecomposition::from_flat(coeffs, levels)?, filter)
}
