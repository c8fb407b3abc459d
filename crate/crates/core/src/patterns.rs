//! Pattern synthesis from coefficient matrices and localization metrics.

use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor2d::{dwt2, idwt2, Coefficients2D, Decomposition2D, Grid2D, GridSpec, Lattice};
use crate::wavelet::{dyadic_exponent, WaveletFilter};
use crate::wigner::{evolve, EvolveOptions, LindbladParams, PolynomialPotential, WignerState};

/// Recipe for a coefficient matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixGenerator {
    Ones,
    /// `band` where `|i - j| < width`, `off` elsewhere.
    BandDiagonal { width: usize, band: f64, off: f64 },
    /// `band` where `0 <= j - i < width`, `off` elsewhere.
    BandTriangular { width: usize, band: f64, off: f64 },
    /// Uniform on `[0, 1)` from a seeded ChaCha stream, row-major.
    Random { seed: u64 },
    Explicit,
}

impl FromStr for MatrixGenerator {
    type Err = Error;

    /// `ones`, `band:w,bv,ov`, `tri:w,bv,ov` or `random:seed`.
    fn from_str(s: &str) -> Result<Self> {
        let band_args = |rest: &str| -> Result<(usize, f64, f64)> {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::BadSpec(format!("expected w,bv,ov in {s:?}")));
            }
            let w = parts[0].parse().map_err(|_| Error::BadSpec(format!("bad width in {s:?}")))?;
            let bv = parts[1].parse().map_err(|_| Error::BadSpec(format!("bad band value in {s:?}")))?;
            let ov = parts[2].parse().map_err(|_| Error::BadSpec(format!("bad off value in {s:?}")))?;
            Ok((w, bv, ov))
        };
        match s.split_once(':') {
            None if s == "ones" => Ok(MatrixGenerator::Ones),
            Some(("band", rest)) => {
                let (width, band, off) = band_args(rest)?;
                Ok(MatrixGenerator::BandDiagonal { width, band, off })
            }
            Some(("tri", rest)) => {
                let (width, band, off) = band_args(rest)?;
                Ok(MatrixGenerator::BandTriangular { width, band, off })
            }
            Some(("random", seed)) => Ok(MatrixGenerator::Random {
                seed: seed.trim().parse().map_err(|_| Error::BadSpec(format!("bad seed in {s:?}")))?,
            }),
            _ => Err(Error::BadSpec(format!("unknown matrix spec {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub values: Array2<f64>,
    pub generator: MatrixGenerator,
}

impl CoefficientMatrix {
    pub fn explicit(values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() < 2 {
            return Err(Error::BadSpec(format!("matrix must be square with N >= 2, got {:?}", values.dim())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadSpec("matrix entries must be finite".into()));
        }
        Ok(CoefficientMatrix {
            values,
            generator: MatrixGenerator::Explicit,
        })
    }

    pub fn one_hot(n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange(format!("({i}, {j}) in a {n} x {n} matrix")));
        }
        let mut values = Array2::zeros((n, n));
        values[(i, j)] = 1.0;
        CoefficientMatrix::explicit(values)
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    /// Parses comma-separated rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::BadSpec(format!("bad number {v:?}"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::BadSpec("CSV matrix must be square".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        CoefficientMatrix::explicit(Array2::from_shape_vec((n, n), flat).map_err(|e| Error::BadSpec(e.to_string()))?)
    }
}

pub fn generate_matrix(generator: &MatrixGenerator, n: usize) -> Result<CoefficientMatrix> {
    if n < 2 {
        return Err(Error::BadSpec(format!("matrix size must be at least 2, got {n}")));
    }
    let band_check = |width: usize, band: f64, off: f64| {
        if width == 0 || width >= n {
            return Err(Error::BadSpec(format!("band width {width} must be in 1..{n}")));
        }
        if !band.is_finite() || !off.is_finite() {
            return Err(Error::BadSpec("band values must be finite".into()));
        }
        Ok(())
    };
    let values = match *generator {
        MatrixGenerator::Ones => Array2::ones((n, n)),
        MatrixGenerator::BandDiagonal { width, band, off } => {
            band_check(width, band, off)?;
            Array2::from_shape_fn((n, n), |(i, j)| if i.abs_diff(j) < width { band } else { off })
        }
        MatrixGenerator::BandTriangular { width, band, off } => {
            band_check(width, band, off)?;
            Array2::from_shape_fn((n, n), |(i, j)| if j >= i && j - i < width { band } else { off })
        }
        MatrixGenerator::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let flat: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
            Array2::from_shape_vec((n, n), flat).expect("n x n")
        }
        MatrixGenerator::Explicit => {
            return Err(Error::BadSpec("explicit matrices are built with CoefficientMatrix::explicit".into()))
        }
    };
    Ok(CoefficientMatrix {
        values,
        generator: generator.clone(),
    })
}

/// Sums `a_ij U_i(q) V_j(p)` over the leading modes of a `levels`-deep
/// rectangle-lattice basis on `spec`.
///
/// Modes are ordered coarse first, then detail levels ascending, shifts
/// ascending; an `n x n` matrix covers the first `n` modes of each axis, so
/// its size fixes the finest dilation level that enters the sum.
pub fn synthesize(matrix: &CoefficientMatrix, filter: &WaveletFilter, levels: usize, spec: &GridSpec) -> Result<Grid2D> {
    spec.validate()?;
    let n = matrix.size();
    let coarse_q = spec.nq >> levels.min(dyadic_exponent(spec.nq)?);
    let coarse_p = spec.np >> levels.min(dyadic_exponent(spec.np)?);
    if !n.is_power_of_two() || n > spec.nq.min(spec.np) || n < coarse_q.max(coarse_p) {
        return Err(Error::ShapeMismatch(format!(
            "a {n} x {n} matrix does not cover whole levels of a {}-level basis on {} x {}",
            levels, spec.nq, spec.np
        )));
    }
    let mut coeffs = Array2::zeros((spec.nq, spec.np));
    coeffs.slice_mut(ndarray::s![..n, ..n]).assign(&matrix.values);
    let decomp = Decomposition2D {
        levels,
        spec: spec.clone(),
        coefficients: Coefficients2D::Rectangle(coeffs),
    };
    idwt2(&decomp, filter)
}

/// Rectangle-lattice coefficients of `grid`, the inverse of [`synthesize`]
/// for a full-size matrix.
pub fn analyze(grid: &Grid2D, filter: &WaveletFilter, levels: usize) -> Result<Array2<f64>> {
    match dwt2(grid, filter, levels, Lattice::Rectangle)?.coefficients {
        Coefficients2D::Rectangle(c) => Ok(c),
        Coefficients2D::Square { .. } => unreachable!("rectangle lattice requested"),
    }
}

/// Localization measures of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    /// Smallest fraction of cells holding half of the energy.
    pub concentration_50: f64,
    /// `(sum c^2)^2 / sum c^4` over the expansion coefficients, divided by their count.
    pub participation_ratio: f64,
    /// Shannon entropy of `c^2 / sum c^2` over the log of the coefficient count.
    pub coeff_entropy: f64,
    pub max_cell_share: f64,
    /// `1 - s1^2 / sum s^2`: distance to the best rank-1 field.
    pub separability_defect: f64,
}

fn leading_singular_value_sq(w: &Array2<f64>) -> f64 {
    let nc = w.ncols();
    let mut v = ndarray::Array1::from_shape_fn(nc, |k| 1.0 + (k as f64 * 0.618_033_988_749_895).fract());
    let mut lambda = 0.0;
    for _ in 0..500 {
        let u = w.dot(&v);
        let next = w.t().dot(&u);
        let norm = next.dot(&next).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let new_lambda = v.dot(&next) / v.dot(&v);
        v = next / norm;
        if (new_lambda - lambda).abs() <= 1e-13 * new_lambda.abs() {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda
}

/// `(participation / count, entropy / ln(count))` of the squared values.
fn spread(values: &Array2<f64>) -> Result<(f64, f64)> {
    let count = values.len() as f64;
    let total: f64 = values.iter().map(|v| v * v).sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::ZeroField);
    }
    let sum4: f64 = values.iter().map(|v| v.powi(4)).sum();
    let entropy: f64 = values
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| {
            let p = v * v / total;
            -p * p.ln()
        })
        .sum();
    let normalized = if count > 1.0 { entropy / count.ln() } else { 1.0 };
    Ok((total * total / sum4 / count, normalized))
}

/// Metrics with the grid cells as expansion coefficients.
pub fn compute_metrics(grid: &Grid2D) -> Result<PatternMetrics> {
    let (participation_ratio, coeff_entropy) = spread(&grid.values)?;
    cell_metrics(grid, participation_ratio, coeff_entropy)
}

/// Metrics with participation and entropy taken over the rectangle-lattice
/// coefficients of `grid` (`levels` deep); area measures stay on the cells.
pub fn compute_metrics_in_basis(grid: &Grid2D, filter: &WaveletFilter, levels: usize) -> Result<PatternMetrics> {
    let coeffs = analyze(grid, filter, levels)?;
    let (participation_ratio, coeff_entropy) = spread(&coeffs)?;
    cell_metrics(grid, participation_ratio, coeff_entropy)
}

fn cell_metrics(grid: &Grid2D, participation_ratio: f64, coeff_entropy: f64) -> Result<PatternMetrics> {
    let cells = grid.values.len() as f64;
    let mut e: Vec<f64> = grid.values.iter().map(|v| v * v).collect();
    let total: f64 = e.iter().sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::ZeroField);
    }
    e.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut count = 0usize;
    for x in &e {
        acc += x;
        count += 1;
        if acc >= 0.5 * total {
            break;
        }
    }
    let s1 = leading_singular_value_sq(&grid.values);
    Ok(PatternMetrics {
        concentration_50: count as f64 / cells,
        participation_ratio,
        coeff_entropy,
        max_cell_share: e[0] / total,
        separability_defect: (1.0 - s1 / total).clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternClass {
    Waveleton,
    ChaoticLike,
    Intermediate,
}

impl std::fmt::Display for PatternClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PatternClass::Waveleton => "waveleton",
            PatternClass::ChaoticLike => "chaotic_like",
            PatternClass::Intermediate => "intermediate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyThresholds {
    pub c_lo: f64,
    pub e_lo: f64,
    pub e_hi: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        ClassifyThresholds {
            c_lo: 0.05,
            e_lo: 0.5,
            e_hi: 0.9,
        }
    }
}

pub fn classify(metrics: &PatternMetrics, thresholds: &ClassifyThresholds) -> PatternClass {
    if metrics.concentration_50 <= thresholds.c_lo && metrics.coeff_entropy <= thresholds.e_lo {
        PatternClass::Waveleton
    } else if metrics.coeff_entropy >= thresholds.e_hi {
        PatternClass::ChaoticLike
    } else {
        PatternClass::Intermediate
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistenceReport {
    /// `(time, metrics)` at each retained snapshot.
    pub samples: Vec<(f64, PatternMetrics)>,
    /// Whether `concentration_50 <= c_lo` at every sample.
    pub stays_localized: bool,
}

/// Evolves a synthesized pattern and tracks its metrics.
///
/// Fields with nonzero total mass are rescaled to unit mass first.
pub fn waveleton_persistence(
    initial: &Grid2D,
    potential: &PolynomialPotential,
    params: Option<&LindbladParams>,
    hbar: f64,
    mass: f64,
    opts: &EvolveOptions,
    thresholds: &ClassifyThresholds,
) -> Result<PersistenceReport> {
    let mut state = WignerState::new(initial.clone(), hbar, mass)?;
    if state.total_mass().abs() > 1e-300 {
        state = state.normalized()?;
    }
    let traj = evolve(&state, potential, params, opts)?;
    let samples = traj
        .snapshots
        .iter()
        .map(|s| Ok((s.time, compute_metrics(&s.grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let stays_localized = samples.iter().all(|(_, m)| m.concentration_50 <= thresholds.c_lo);
    Ok(PersistenceReport {
        samples,
        stays_localized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{make_filter, Family};

    #[test]
    fn generators_by_hand() {
        let m = generate_matrix(&MatrixGenerator::BandDiagonal { width: 1, band: 5.0, off: 1.0 }, 4).unwrap();
        for ((i, j), v) in m.values.indexed_iter() {
            assert_eq!(*v, if i == j { 5.0 } else { 1.0 });
        }
        let t = generate_matrix(&MatrixGenerator::BandTriangular { width: 2, band: 3.0, off: 0.0 }, 3).unwrap();
        assert_eq!(t.values.row(0).to_vec(), vec![3.0, 3.0, 0.0]);
        assert_eq!(t.values.row(2).to_vec(), vec![0.0, 0.0, 3.0]);
        assert_eq!(generate_matrix(&MatrixGenerator::Ones, 4).unwrap().values, Array2::<f64>::ones((4, 4)));
        let a = generate_matrix(&MatrixGenerator::Random { seed: 7 }, 8).unwrap();
        let b = generate_matrix(&MatrixGenerator::Random { seed: 7 }, 8).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn bad_specs() {
        assert!(generate_matrix(&MatrixGenerator::Ones, 1).is_err());
        assert!(generate_matrix(&MatrixGenerator::BandDiagonal { width: 4, band: 5.0, off: 1.0 }, 4).is_err());
        assert!("band:8,5".parse::<MatrixGenerator>().is_err());
        assert!("stripes".parse::<MatrixGenerator>().is_err());
        assert_eq!(
            "band:8,5,1".parse::<MatrixGenerator>().unwrap(),
            MatrixGenerator::BandDiagonal { width: 8, band: 5.0, off: 1.0 }
        );
        assert_eq!("random:42".parse::<MatrixGenerator>().unwrap(), MatrixGenerator::Random { seed: 42 });
    }

    #[test]
    fn uniform_field_is_maximally_spread() {
        let g = GridSpec::unit(16, 16).sample(|q, p| if (q * 37.0 + p * 11.0).sin() > 0.0 { 2.0 } else { -2.0 });
        let m = compute_metrics(&g).unwrap();
        assert!((m.participation_ratio - 1.0).abs() < 1e-12);
        assert!((m.coeff_entropy - 1.0).abs() < 1e-12);
        assert_eq!(classify(&m, &ClassifyThresholds::default()), PatternClass::ChaoticLike);
        let scaled = g.with_values(&g.values * 10.0);
        assert_eq!(compute_metrics(&scaled).unwrap(), m);
    }

    #[test]
    fn zero_field_is_an_error() {
        assert!(matches!(compute_metrics(&GridSpec::unit(4, 4).zeros()), Err(Error::ZeroField)));
    }

    #[test]
    fn synthesis_size_checks() {
        let f = make_filter(Family::Symmlet, 4).unwrap();
        let spec = GridSpec::unit(64, 64);
        let m = generate_matrix(&MatrixGenerator::Ones, 4).unwrap();
        // 3 levels on 64 leave 8 coarse modes, more than the matrix covers
        assert!(matches!(synthesize(&m, &f, 3, &spec), Err(Error::ShapeMismatch(_))));
        let m = generate_matrix(&MatrixGenerator::Ones, 12).unwrap();
        assert!(synthesize(&m, &f, 3, &spec).is_err());
        let m = generate_matrix(&MatrixGenerator::Ones, 16).unwrap();
        assert!(synthesize(&m, &f, 3, &spec).is_ok());
    }

    #[test]
    fn rank_one_field_is_separable() {
        let g = GridSpec::unit(32, 32).sample(|q, p| (3.0 * q).sin() * (1.0 + p * p));
        assert!(compute_metrics(&g).unwrap().separability_defect < 1e-10);
    }

    #[test]
    fn basis_metrics_see_the_matrix() {
        let f = make_filter(Family::Symmlet, 4).unwrap();
        let spec = GridSpec::unit(64, 64);
        let ones = synthesize(&generate_matrix(&MatrixGenerator::Ones, 64).unwrap(), &f, 3, &spec).unwrap();
        let m = compute_metrics_in_basis(&ones, &f, 3).unwrap();
        assert!((m.coeff_entropy - 1.0).abs() < 1e-9);
        assert!((m.participation_ratio - 1.0).abs() < 1e-9);
        let hot = synthesize(&CoefficientMatrix::one_hot(64, 40, 50).unwrap(), &f, 3, &spec).unwrap();
        let m = compute_metrics_in_basis(&hot, &f, 3).unwrap();
        assert!(m.coeff_entropy < 1e-6);
    }
}
