//! Per-scale projections, multiscale norms, accuracy cut-offs and the demo
//! signals (kicks and the Riemann-Weierstrass fractal).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::dwt::{dyadic_exponent, idwt_periodic};
use crate::wavelet::WaveletFilter;

pub use crate::wavelet::dwt::MraDecomposition;

/// Which piece of a decomposition to project onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSlot {
    /// `P_c f`, the coarse approximation.
    Coarse,
    /// `Q_j f` at absolute level `j`.
    Detail(usize),
}

/// Reconstructs the contribution of a single level.
pub fn reconstruct_level(
    decomp: &MraDecomposition,
    filter: &WaveletFilter,
    slot: LevelSlot,
) -> Result<Vec<f64>> {
    let mut masked = MraDecomposition {
        coarse_level: decomp.coarse_level,
        coarse: vec![0.0; decomp.coarse.len()],
        details: decomp.details.iter().map(|d| vec![0.0; d.len()]).collect(),
        original_length: decomp.original_length,
    };
    match slot {
        LevelSlot::Coarse => masked.coarse.copy_from_slice(&decomp.coarse),
        LevelSlot::Detail(j) => {
            let lo = decomp.coarse_level;
            let hi = decomp.finest_level();
            if decomp.details.is_empty() || j < lo || j > hi {
                return Err(Error::LevelOutOfRange { level: j, lo, hi });
            }
            masked.details[j - lo].copy_from_slice(&decomp.details[j - lo]);
        }
    }
    idwt_periodic(&masked, filter)
}

/// All slots of a decomposition, coarse first.
pub fn slots(decomp: &MraDecomposition) -> Vec<LevelSlot> {
    std::iter::once(LevelSlot::Coarse)
        .chain((0..decomp.levels()).map(|i| LevelSlot::Detail(decomp.coarse_level + i)))
        .collect()
}

/// Per-level energies of a single signal (coarse first) and their total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiNorm {
    pub per_level_energy: Vec<f64>,
    pub total: f64,
}

pub fn multi_norm(decomp: &MraDecomposition) -> MultiNorm {
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let per_level_energy: Vec<f64> = std::iter::once(sq(&decomp.coarse))
        .chain(decomp.details.iter().map(|d| sq(d)))
        .collect();
    let total = per_level_energy.iter().sum();
    MultiNorm {
        per_level_energy,
        total,
    }
}

/// Result of [`cutoff_level`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cutoff {
    pub level: usize,
    /// False when even the finest stored level exceeds the tolerance.
    pub converged: bool,
}

/// Smallest level `N` such that every refinement step beyond it is below
/// `eps`.
///
/// `W^N` is the reconstruction through detail level `N`; the step
/// `W^{N+1} - W^N` is `Q_{N+1} f`, whose discrete L2 norm is the square root of
/// that level's energy by orthonormality.
pub fn cutoff_level(decomp: &MraDecomposition, eps: f64) -> Result<Cutoff> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::BadParams(format!("tolerance must be positive, got {eps}")));
    }
    let c = decomp.coarse_level;
    let norms: Vec<f64> = decomp
        .details
        .iter()
        .map(|d| d.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut level = c;
    for (i, &n) in norms.iter().enumerate().skip(1) {
        if n > eps {
            level = c + i;
        }
    }
    let converged = norms.last().is_none_or(|&n| n <= eps) || norms.len() <= 1;
    Ok(Cutoff { level, converged })
}

/// Demo signals on `t_i = i / n`, `i < n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemoSignal {
    /// Periodic Gaussian bump; `width` is the standard deviation in `t`.
    Kick { center: f64, width: f64 },
    /// Sum of amplitude-weighted kicks sharing one width.
    Multikick { kicks: Vec<(f64, f64)>, width: f64 },
    /// `sum_{n<terms} a^n cos(b^n pi t)`.
    RwFractal { a: f64, b: u32, terms: u32 },
}

impl DemoSignal {
    /// Kick centered at `center` with the default width of four grid cells.
    pub fn kick(center: f64, length: usize) -> Self {
        DemoSignal::Kick {
            center,
            width: 4.0 / length as f64,
        }
    }

    /// The fractal with defaults `a = 0.5`, `b = 3`, 20 terms.
    pub fn rw_default() -> Self {
        DemoSignal::RwFractal {
            a: 0.5,
            b: 3,
            terms: 20,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DemoSignal::Kick { .. } => "kick",
            DemoSignal::Multikick { .. } => "multikick",
            DemoSignal::RwFractal { .. } => "rw_fractal",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadParams(m));
        match self {
            DemoSignal::Kick { center, width } => {
                if !(0.0..1.0).contains(center) {
                    return bad(format!("kick center {center} outside [0, 1)"));
                }
                if width.is_nan() || *width <= 0.0 {
                    return bad(format!("kick width {width} must be positive"));
                }
            }
            DemoSignal::Multikick { kicks, width } => {
                if width.is_nan() || *width <= 0.0 {
                    return bad(format!("kick width {width} must be positive"));
                }
                if let Some((c, _)) = kicks.iter().find(|(c, _)| !(0.0..1.0).contains(c)) {
                    return bad(format!("kick center {c} outside [0, 1)"));
                }
                if kicks.iter().any(|(_, a)| !a.is_finite()) {
                    return bad("kick amplitudes must be finite".into());
                }
            }
            DemoSignal::RwFractal { a, b, terms } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return bad(format!("fractal a = {a} outside (0, 1)"));
                }
                if *b < 2 {
                    return bad(format!("fractal b = {b} must be an integer >= 2"));
                }
                if a * *b as f64 <= 1.0 {
                    return bad(format!("fractal needs a*b > 1, got {}", a * *b as f64));
                }
                if *terms < 1 {
                    return bad("fractal needs at least one term".into());
                }
            }
        }
        Ok(())
    }
}

fn periodic_gaussian(t: f64, center: f64, width: f64) -> f64 {
    let mut d = (t - center).rem_euclid(1.0);
    if d > 0.5 {
        d -= 1.0;
    }
    (-0.5 * (d / width).powi(2)).exp()
}

/// Samples a demo signal on a dyadic grid.
pub fn demo_signal(kind: &DemoSignal, length: usize) -> Result<Vec<f64>> {
    dyadic_exponent(length)?;
    kind.validate()?;
    let t = |i: usize| i as f64 / length as f64;
    let out = match kind {
        DemoSignal::Kick { center, width } => (0..length)
            .map(|i| periodic_gaussian(t(i), *center, *width))
            .collect(),
        DemoSignal::Multikick { kicks, width } => (0..length)
            .map(|i| {
                kicks
                    .iter()
                    .map(|(c, amp)| amp * periodic_gaussian(t(i), *c, *width))
                    .sum()
            })
            .collect(),
        DemoSignal::RwFractal { a, b, terms } => (0..length)
            .map(|i| {
                let mut amp = 1.0;
                let mut freq = 1.0;
                let mut s = 0.0;
                for _ in 0..*terms {
                    s += amp * (freq * std::f64::consts::PI * t(i)).cos();
                    amp *= a;
                    freq *= *b as f64;
                }
                s
            })
            .collect(),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{dwt_periodic, make_filter, Family};

    #[test]
    fn single_term_fractal_is_cosine() {
        let x = demo_signal(&DemoSignal::RwFractal { a: 0.5, b: 3, terms: 1 }, 64).unwrap();
        for (i, v) in x.iter().enumerate() {
            assert!((v - (std::f64::consts::PI * i as f64 / 64.0).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn fractal_at_origin_is_geometric_sum() {
        let x = demo_signal(&DemoSignal::rw_default(), 256).unwrap();
        assert!((x[0] - 2.0 * (1.0 - 0.5f64.powi(20))).abs() < 1e-14);
    }

    #[test]
    fn empty_multikick_is_zero() {
        let x = demo_signal(
            &DemoSignal::Multikick {
                kicks: vec![],
                width: 0.01,
            },
            32,
        )
        .unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bad_params_are_rejected() {
        let cases = [
            DemoSignal::Kick { center: 1.0, width: 0.1 },
            DemoSignal::Kick { center: 0.5, width: 0.0 },
            DemoSignal::RwFractal { a: 0.3, b: 3, terms: 5 },
            DemoSignal::RwFractal { a: 0.5, b: 1, terms: 5 },
            DemoSignal::RwFractal { a: 0.5, b: 3, terms: 0 },
        ];
        for c in cases {
            assert!(matches!(demo_signal(&c, 64), Err(Error::BadParams(_))), "{c:?}");
        }
        assert!(matches!(
            demo_signal(&DemoSignal::rw_default(), 100),
            Err(Error::BadLength(100))
        ));
    }

    #[test]
    fn constant_signal_detail_reconstructions_vanish() {
        let f = make_filter(Family::Daubechies, 4).unwrap();
        let d = dwt_periodic(&[2.0; 64], &f, 3).unwrap();
        for s in slots(&d).into_iter().skip(1) {
            let r = reconstruct_level(&d, &f, s).unwrap();
            assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn level_out_of_range() {
        let f = make_filter(Family::Haar, 1).unwrap();
        let d = dwt_periodic(&[1.0; 16], &f, 2).unwrap();
        assert!(matches!(
            reconstruct_level(&d, &f, LevelSlot::Detail(1)),
            Err(Error::LevelOutOfRange { .. })
        ));
        assert!(reconstruct_level(&d, &f, LevelSlot::Detail(3)).is_ok());
    }

    #[test]
    fn zero_signal_norm() {
        let f = make_filter(Family::Haar, 1).unwrap();
        let n = multi_norm(&dwt_periodic(&[0.0; 8], &f, 3).unwrap());
        assert_eq!(n.total, 0.0);
        assert!(n.per_level_energy.iter().all(|&e| e == 0.0));
        assert_eq!(n.per_level_energy.len(), 4);
    }

    #[test]
    fn cutoff_large_tolerance_returns_coarsest() {
        let f = make_filter(Family::Daubechies, 2).unwrap();
        let x = demo_signal(&DemoSignal::rw_default(), 128).unwrap();
        let d = dwt_periodic(&x, &f, 5).unwrap();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c = cutoff_level(&d, norm).unwrap();
        assert_eq!(c.level, d.coarse_level);
        assert!(c.converged);
        assert!(cutoff_level(&d, 0.0).is_err());
    }
}
