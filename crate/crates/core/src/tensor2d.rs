//! Separable 2D wavelet bases over phase space.
//!
//! Rows index `q`, columns index `p`, storage is row-major. Two lattices are
//! supported: the square (isotropic) Mallat pyramid with three detail families
//! per level, and the rectangle lattice where each axis is decomposed
//! independently so that coefficient `(i, j)` pairs a `q`-mode of one scale
//! with a `p`-mode of another.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::dwt::{analysis_step, dwt_flat, dyadic_exponent, idwt_flat, synthesis_step};
use crate::wavelet::WaveletFilter;

/// Sampled field on a periodic phase-space box.
///
/// Sample `(i, k)` sits at `q_i = q_min + i dq`, `p_k = p_min + k dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub values: Array2<f64>,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// Dimensions and extents of a grid, without values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nq: usize,
    pub np: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl GridSpec {
    /// Square box `[-half, half)^2` with `n x n` samples.
    pub fn symmetric(n: usize, half: f64) -> Self {
        GridSpec {
            nq: n,
            np: n,
            q_min: -half,
            q_max: half,
            p_min: -half,
            p_max: half,
        }
    }

    /// Unit-square grid, used when only the shape matters.
    pub fn unit(nq: usize, np: usize) -> Self {
        GridSpec {
            nq,
            np,
            q_min: 0.0,
            q_max: 1.0,
            p_min: 0.0,
            p_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nq.is_power_of_two() || !self.np.is_power_of_two() {
            return Err(Error::BadShape(format!(
                "grid dims {}x{} must be powers of two",
                self.nq, self.np
            )));
        }
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && hi > lo;
        if !ok(self.q_min, self.q_max) || !ok(self.p_min, self.p_max) {
            return Err(Error::BadShape("grid extents must be finite with max > min".into()));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.nq as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, k: usize) -> f64 {
        self.p_min + k as f64 * self.dp()
    }

    pub fn q_axis(&self) -> Vec<f64> {
        (0..self.nq).map(|i| self.q(i)).collect()
    }

    pub fn p_axis(&self) -> Vec<f64> {
        (0..self.np).map(|k| self.p(k)).collect()
    }

    pub fn zeros(&self) -> Grid2D {
        Grid2D::from_spec(self, Array2::zeros((self.nq, self.np)))
    }

    /// Samples `f(q, p)` on the grid.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Grid2D {
        let (qs, ps) = (self.q_axis(), self.p_axis());
        Grid2D::from_spec(self, Array2::from_shape_fn((self.nq, self.np), |(i, k)| f(qs[i], ps[k])))
    }
}

impl Grid2D {
    pub fn from_spec(spec: &GridSpec, values: Array2<f64>) -> Self {
        Grid2D {
            values,
            q_min: spec.q_min,
            q_max: spec.q_max,
            p_min: spec.p_min,
            p_max: spec.p_max,
        }
    }

    pub fn new(values: Array2<f64>, q: (f64, f64), p: (f64, f64)) -> Result<Self> {
        let g = Grid2D {
            values,
            q_min: q.0,
            q_max: q.1,
            p_min: p.0,
            p_max: p.1,
        };
        g.spec().validate()?;
        Ok(g)
    }

    pub fn nq(&self) -> usize {
        self.values.nrows()
    }

    pub fn np(&self) -> usize {
        self.values.ncols()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            nq: self.nq(),
            np: self.np(),
            q_min: self.q_min,
            q_max: self.q_max,
            p_min: self.p_min,
            p_max: self.p_max,
        }
    }

    pub fn cell_area(&self) -> f64 {
        let s = self.spec();
        s.dq() * s.dp()
    }

    /// `sum W dq dp`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.cell_area()
    }

    /// `sum W^2` without area weighting.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Discrete L2 norm with area weighting.
    pub fn l2_norm(&self) -> f64 {
        (self.energy() * self.cell_area()).sqrt()
    }

    pub fn with_values(&self, values: Array2<f64>) -> Self {
        Grid2D {
            values,
            q_min: self.q_min,
            q_max: self.q_max,
            p_min: self.p_min,
            p_max: self.p_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    Square,
    Rectangle,
}

/// The three detail families of one square-lattice level.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareLevel {
    /// Absolute level pair `(jq, jp)` of this band.
    pub level: (usize, usize),
    /// `phi(q) psi(p)`.
    pub phi_psi: Array2<f64>,
    /// `psi(q) phi(p)`.
    pub psi_phi: Array2<f64>,
    /// `psi(q) psi(p)`.
    pub psi_psi: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients2D {
    Square {
        coarse: Array2<f64>,
        /// Coarsest level first.
        levels: Vec<SquareLevel>,
    },
    /// Full coefficient matrix in the 1D flat layout along each axis.
    Rectangle(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition2D {
    pub levels: usize,
    pub spec: GridSpec,
    pub coefficients: Coefficients2D,
}

impl Decomposition2D {
    pub fn mode(&self) -> Lattice {
        match self.coefficients {
            Coefficients2D::Square { .. } => Lattice::Square,
            Coefficients2D::Rectangle(_) => Lattice::Rectangle,
        }
    }

    /// Sum of squared coefficients.
    pub fn energy(&self) -> f64 {
        let sq = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>();
        match &self.coefficients {
            Coefficients2D::Square { coarse, levels } => {
                sq(coarse)
                    + levels
                        .iter()
                        .map(|l| sq(&l.phi_psi) + sq(&l.psi_phi) + sq(&l.psi_psi))
                        .sum::<f64>()
            }
            Coefficients2D::Rectangle(c) => sq(c),
        }
    }
}

fn check_levels(spec: &GridSpec, levels: usize, filter: &WaveletFilter) -> Result<()> {
    spec.validate()?;
    let jq = dyadic_exponent(spec.nq)?;
    let jp = dyadic_exponent(spec.np)?;
    if levels > jq.min(jp) {
        return Err(Error::BadShape(format!(
            "{levels} levels exceed grid {}x{}",
            spec.nq, spec.np
        )));
    }
    if spec.nq.min(spec.np) < filter.support_length {
        return Err(Error::BadShape(format!(
            "grid {}x{} smaller than the {} support",
            spec.nq,
            spec.np,
            filter.name()
        )));
    }
    Ok(())
}

/// Applies a 1D map to every row (axis 1) or every column (axis 0).
fn map_lanes(a: &Array2<f64>, axis: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(a.raw_dim());
    for (src, mut dst) in a.lanes(Axis(axis)).into_iter().zip(out.lanes_mut(Axis(axis))) {
        let v: Vec<f64> = src.iter().copied().collect();
        dst.assign(&Array1::from(f(&v)));
    }
    out
}

/// Forward 2D transform.
pub fn dwt2(
    grid: &Grid2D,
    filter: &WaveletFilter,
    levels: usize,
    mode: Lattice,
) -> Result<Decomposition2D> {
    let spec = grid.spec();
    check_levels(&spec, levels, filter)?;
    let coefficients = match mode {
        Lattice::Rectangle => {
            let rows = map_lanes(&grid.values, 1, |r| dwt_flat(r, filter, levels).unwrap());
            Coefficients2D::Rectangle(map_lanes(&rows, 0, |c| {
                dwt_flat(c, filter, levels).unwrap()
            }))
        }
        Lattice::Square => {
            let mut cur = grid.values.clone();
            let mut bands = Vec::with_capacity(levels);
            let (jq, jp) = (spec.nq.trailing_zeros() as usize, spec.np.trailing_zeros() as usize);
            for step in 1..=levels {
                let (nq, np) = cur.dim();
                let (hq, hp) = (nq / 2, np / 2);
                // rows (p axis) then columns (q axis)
                let mut lo_p = Array2::zeros((nq, hp));
                let mut hi_p = Array2::zeros((nq, hp));
                for i in 0..nq {
                    let row: Vec<f64> = cur.row(i).to_vec();
                    let (a, d) = analysis_step(&row, filter);
                    lo_p.row_mut(i).assign(&Array1::from(a));
                    hi_p.row_mut(i).assign(&Array1::from(d));
                }
                let split_cols = |m: &Array2<f64>| {
                    let mut lo = Array2::zeros((hq, hp));
                    let mut hi = Array2::zeros((hq, hp));
                    for k in 0..hp {
                        let col: Vec<f64> = m.column(k).to_vec();
                        let (a, d) = analysis_step(&col, filter);
                        lo.column_mut(k).assign(&Array1::from(a));
                        hi.column_mut(k).assign(&Array1::from(d));
                    }
                    (lo, hi)
                };
                let (ll, hl) = split_cols(&lo_p);
                let (lh, hh) = split_cols(&hi_p);
                bands.push(SquareLevel {
                    level: (jq - step, jp - step),
                    phi_psi: lh,
                    psi_phi: hl,
                    psi_psi: hh,
                });
                cur = ll;
            }
            bands.reverse();
            Coefficients2D::Square {
                coarse: cur,
                levels: bands,
            }
        }
    };
    Ok(Decomposition2D {
        levels,
        spec,
        coefficients,
    })
}

/// Inverse 2D transform.
pub fn idwt2(decomp: &Decomposition2D, filter: &WaveletFilter) -> Result<Grid2D> {
    let spec = decomp.spec;
    check_levels(&spec, decomp.levels, filter)?;
    let values = match &decomp.coefficients {
        Coefficients2D::Rectangle(c) => {
            if c.dim() != (spec.nq, spec.np) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient matrix {:?} vs grid {}x{}",
                    c.dim(),
                    spec.nq,
                    spec.np
                )));
            }
            let cols = map_lanes(c, 0, |v| idwt_flat(v, filter, decomp.levels).unwrap());
            map_lanes(&cols, 1, |v| idwt_flat(v, filter, decomp.levels).unwrap())
        }
        Coefficients2D::Square { coarse, levels } => {
            if levels.len() != decomp.levels {
                return Err(Error::ShapeMismatch("square level count".into()));
            }
            let mut cur = coarse.clone();
            for band in levels {
                let (hq, hp) = cur.dim();
                for m in [&band.phi_psi, &band.psi_phi, &band.psi_psi] {
                    if m.dim() != (hq, hp) {
                        return Err(Error::ShapeMismatch(format!(
                            "band {:?} has shape {:?}, expected {:?}",
                            band.level,
                            m.dim(),
                            (hq, hp)
                        )));
                    }
                }
                let merge_cols = |lo: &Array2<f64>, hi: &Array2<f64>| {
                    let mut out = Array2::zeros((2 * hq, hp));
                    for k in 0..hp {
                        let a = lo.column(k).to_vec();
                        let d = hi.column(k).to_vec();
                        out.column_mut(k).assign(&Array1::from(synthesis_step(&a, &d, filter)));
                    }
                    out
                };
                let lo_p = merge_cols(&cur, &band.psi_phi);
                let hi_p = merge_cols(&band.phi_psi, &band.psi_psi);
                let mut next = Array2::zeros((2 * hq, 2 * hp));
                for i in 0..2 * hq {
                    let a = lo_p.row(i).to_vec();
                    let d = hi_p.row(i).to_vec();
                    next.row_mut(i).assign(&Array1::from(synthesis_step(&a, &d, filter)));
                }
                cur = next;
            }
            if cur.dim() != (spec.nq, spec.np) {
                return Err(Error::ShapeMismatch("square reconstruction size".into()));
            }
            cur
        }
    };
    Ok(Grid2D::from_spec(&spec, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorFamily {
    PhiPhi,
    PhiPsi,
    PsiPhi,
    PsiPsi,
}

/// One axis factor of a tensor basis function: `phi` or `psi` at absolute
/// level `level` (2^level functions on the axis) with the given shift.
pub fn basis_function_1d(
    filter: &WaveletFilter,
    is_wavelet: bool,
    level: usize,
    shift: usize,
    n: usize,
) -> Result<Vec<f64>> {
    let j = dyadic_exponent(n)?;
    if level >= j + usize::from(!is_wavelet) || shift >= 1 << level {
        return Err(Error::IndexOutOfRange(format!(
            "level {level}, shift {shift} on an axis of {n} samples"
        )));
    }
    let levels = j - level;
    let mut flat = vec![0.0; n];
    let idx = if is_wavelet { (1 << level) + shift } else { shift };
    flat[idx] = 1.0;
    // a wavelet at `level` needs at least j - level decomposition steps
    idwt_flat(&flat, filter, levels)
}

/// Samples a separable basis function `u(q) v(p)` with unit discrete norm.
pub fn basis_function_2d(
    filter: &WaveletFilter,
    family: TensorFamily,
    level_q: usize,
    level_p: usize,
    shift_q: usize,
    shift_p: usize,
    spec: &GridSpec,
) -> Result<Grid2D> {
    spec.validate()?;
    let (wq, wp) = match family {
        TensorFamily::PhiPhi => (false, false),
        TensorFamily::PhiPsi => (false, true),
        TensorFamily::PsiPhi => (true, false),
        TensorFamily::PsiPsi => (true, true),
    };
    let u = basis_function_1d(filter, wq, level_q, shift_q, spec.nq)?;
    let v = basis_function_1d(filter, wp, level_p, shift_p, spec.np)?;
    let values = Array2::from_shape_fn((spec.nq, spec.np), |(i, k)| u[i] * v[k]);
    Ok(Grid2D::from_spec(spec, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{make_filter, Family};

    #[test]
    fn haar_psi_psi_is_four_quadrants() {
        let f = make_filter(Family::Haar, 1).unwrap();
        let spec = GridSpec::unit(8, 8);
        let b = basis_function_2d(&f, TensorFamily::PsiPsi, 0, 0, 0, 0, &spec).unwrap();
        for ((i, k), v) in b.values.indexed_iter() {
            let sign = if (i < 4) == (k < 4) { 1.0 } else { -1.0 };
            assert!((v - sign / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_grid_has_no_square_details() {
        let f = make_filter(Family::Daubechies, 3).unwrap();
        let g = GridSpec::unit(32, 64).sample(|_, _| 2.5);
        let d = dwt2(&g, &f, 3, Lattice::Square).unwrap();
        if let Coefficients2D::Square { levels, .. } = &d.coefficients {
            for l in levels {
                for m in [&l.phi_psi, &l.psi_phi, &l.psi_psi] {
                    assert!(m.iter().all(|v| v.abs() < 1e-12));
                }
            }
        } else {
            panic!("wrong mode");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let f = make_filter(Family::Haar, 1).unwrap();
        let g = GridSpec::unit(8, 8).zeros();
        assert!(matches!(dwt2(&g, &f, 4, Lattice::Square), Err(Error::BadShape(_))));
        let spec = GridSpec::unit(8, 8);
        assert!(matches!(
            basis_function_2d(&f, TensorFamily::PsiPsi, 3, 0, 8, 0, &spec),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(Grid2D::new(Array2::zeros((6, 8)), (0.0, 1.0), (0.0, 1.0)).is_err());
    }
}
