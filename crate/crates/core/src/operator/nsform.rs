//! Non-standard form of operators in a periodic wavelet basis.
//!
//! Starting from the matrix `T_0` of an operator on `V_J` (grid samples read
//! as finest-scale coefficients), one decimation step splits it into
//!
//! ```text
//! A = G T G^T,  B = G T H^T,  Gamma = H T G^T,  T_next = H T H^T
//! ```
//!
//! and the recursion continues on `T_next`. Applying the form needs the full
//! pyramid of coarse and detail coefficients of the input.

use serde::Serialize;

use super::connection::connection_coeffs;
use super::sparse::{SparseBlock, Stencil};
use crate::error::{Error, Result};
use crate::wavelet::dwt::{analysis_step, dyadic_exponent, synthesis_step};
use crate::wavelet::WaveletFilter;

/// Operator to be represented, on the periodic unit interval `[0, 1)`.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    /// `d^n/dx^n` via connection coefficients.
    Derivative { order: usize },
    /// Any translation-invariant matrix given by its stencil.
    Circulant(Stencil),
    /// Integral operator from samples `K(x_i, y_j)` (row-major, `n x n`),
    /// discretized with the one-point rule `sum_j K_ij f_j / n`.
    Kernel { values: Vec<f64> },
    /// Explicit finest-level matrix (row-major).
    Dense { values: Vec<f64> },
}

impl OperatorSpec {
    /// Samples a kernel function on the `n`-point grid.
    pub fn sampled_kernel(n: usize, k: impl Fn(f64, f64) -> f64) -> Self {
        let h = 1.0 / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(k(i as f64 * h, j as f64 * h));
            }
        }
        OperatorSpec::Kernel { values }
    }

    /// Stencil of the finest-level matrix for translation-invariant specs.
    fn finest_stencil(&self, filter: &WaveletFilter, n: usize) -> Result<Option<Stencil>> {
        Ok(match self {
            OperatorSpec::Derivative { order } => {
                let cc = connection_coeffs(filter, *order)?;
                let scale = (n as f64).powi(*order as i32);
                Some(Stencil::from_pairs(cc.shifts().map(|(l, r)| (l, r * scale))))
            }
            OperatorSpec::Circulant(s) => Some(s.clone()),
            _ => None,
        })
    }

    /// The finest-level matrix as dense row-major `n x n`.
    pub fn dense_matrix(&self, filter: &WaveletFilter, n: usize) -> Result<Vec<f64>> {
        if let Some(st) = self.finest_stencil(filter, n)? {
            return Ok(SparseBlock::from_stencil(n, &st).to_dense());
        }
        match self {
            OperatorSpec::Kernel { values } => {
                check_square(values, n)?;
                let h = 1.0 / n as f64;
                Ok(values.iter().map(|v| v * h).collect())
            }
            OperatorSpec::Dense { values } => {
                check_square(values, n)?;
                Ok(values.clone())
            }
            _ => unreachable!(),
        }
    }
}

fn check_square(values: &[f64], n: usize) -> Result<()> {
    if values.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "operator has {} entries, expected {}",
            values.len(),
            n * n
        )));
    }
    Ok(())
}

/// Blocks acting on one detail space `D_j` and its companion `V_j`.
#[derive(Debug, Clone)]
pub struct NsLevel {
    /// Absolute level `j`: the spaces hold `2^j` coefficients.
    pub level: usize,
    /// `D_j -> D_j`.
    pub a: SparseBlock,
    /// `V_j -> D_j`.
    pub b: SparseBlock,
    /// `D_j -> V_j`.
    pub gamma: SparseBlock,
}

#[derive(Debug, Clone)]
pub struct NonStandardForm {
    pub grid_len: usize,
    pub filter: WaveletFilter,
    /// Finest level first.
    pub blocks: Vec<NsLevel>,
    /// `T` restricted to the coarsest space.
    pub coarse: SparseBlock,
}

impl NonStandardForm {
    pub fn levels(&self) -> usize {
        self.blocks.len()
    }

    pub fn nnz(&self) -> usize {
        self.coarse.nnz()
            + self
                .blocks
                .iter()
                .map(|b| b.a.nnz() + b.b.nnz() + b.gamma.nnz())
                .sum::<usize>()
    }

    /// Every block paired with its label, finest level first, coarse last.
    pub fn labeled_blocks(&self) -> Vec<(usize, &'static str, &SparseBlock)> {
        let mut out = Vec::new();
        for lv in &self.blocks {
            out.push((lv.level, "A", &lv.a));
            out.push((lv.level, "B", &lv.b));
            out.push((lv.level, "Gamma", &lv.gamma));
        }
        let coarse_level = self.blocks.last().map_or_else(
            || self.grid_len.trailing_zeros() as usize,
            |b| b.level,
        );
        out.push((coarse_level, "T", &self.coarse));
        out
    }

    /// CSV triplets `level,block,row,col,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,block,row,col,value\n");
        for (level, name, blk) in self.labeled_blocks() {
            for (i, j, v) in blk.entries() {
                s.push_str(&format!("{level},{name},{i},{j},{v:.17e}\n"));
            }
        }
        s
    }
}

fn validate_grid(filter: &WaveletFilter, levels: usize, n: usize) -> Result<usize> {
    let j = dyadic_exponent(n)?;
    if levels > j {
        return Err(Error::TooManyLevels { requested: levels, max: j });
    }
    if n < (1usize << levels) * filter.support_length {
        return Err(Error::ShapeMismatch(format!(
            "grid of {n} points too small for {levels} levels of {}",
            filter.name()
        )));
    }
    Ok(j)
}

/// Builds the non-standard form on an `n`-point grid.
pub fn build_nonstandard_form(
    spec: &OperatorSpec,
    filter: &WaveletFilter,
    levels: usize,
    n: usize,
) -> Result<NonStandardForm> {
    let j = validate_grid(filter, levels, n)?;
    let (h, g) = (&filter.h, &filter.g);
    let mut blocks = Vec::with_capacity(levels);
    if let Some(mut st) = spec.finest_stencil(filter, n)? {
        for step in 1..=levels {
            let size = n >> step;
            blocks.push(NsLevel {
                level: j - step,
                a: SparseBlock::from_stencil(size, &st.decimate(g, g)),
                b: SparseBlock::from_stencil(size, &st.decimate(g, h)),
                gamma: SparseBlock::from_stencil(size, &st.decimate(h, g)),
            });
            st = st.decimate(h, h);
        }
        return Ok(NonStandardForm {
            grid_len: n,
            filter: filter.clone(),
            blocks,
            coarse: SparseBlock::from_stencil(n >> levels, &st),
        });
    }
    let mut t = spec.dense_matrix(filter, n)?;
    let mut size = n;
    for step in 1..=levels {
        let (tt, a, b, gamma) = split_dense(&t, size, filter);
        size /= 2;
        blocks.push(NsLevel {
            level: j - step,
            a: SparseBlock::from_dense(size, &a),
            b: SparseBlock::from_dense(size, &b),
            gamma: SparseBlock::from_dense(size, &gamma),
        });
        t = tt;
    }
    Ok(NonStandardForm {
        grid_len: n,
        filter: filter.clone(),
        blocks,
        coarse: SparseBlock::from_dense(size, &t),
    })
}

/// One decimation of a dense `n x n` matrix: returns `(HTH', GTG', GTH', HTG')`.
fn split_dense(
    t: &[f64],
    n: usize,
    filter: &WaveletFilter,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let half = n / 2;
    // row transforms: T H^T and T G^T
    let mut th = vec![0.0; n * half];
    let mut tg = vec![0.0; n * half];
    for i in 0..n {
        let (lo, hi) = analysis_step(&t[i * n..(i + 1) * n], filter);
        th[i * half..(i + 1) * half].copy_from_slice(&lo);
        tg[i * half..(i + 1) * half].copy_from_slice(&hi);
    }
    // column transforms
    let mut hth = vec![0.0; half * half];
    let mut gth = vec![0.0; half * half];
    let mut htg = vec![0.0; half * half];
    let mut gtg = vec![0.0; half * half];
    let mut col = vec![0.0; n];
    for c in 0..half {
        for i in 0..n {
            col[i] = th[i * half + c];
        }
        let (lo, hi) = analysis_step(&col, filter);
        for k in 0..half {
            hth[k * half + c] = lo[k];
            gth[k * half + c] = hi[k];
        }
        for i in 0..n {
            col[i] = tg[i * half + c];
        }
        let (lo, hi) = analysis_step(&col, filter);
        for k in 0..half {
            htg[k * half + c] = lo[k];
            gtg[k * half + c] = hi[k];
        }
    }
    (hth, gtg, gth, htg)
}

/// Applies the form to grid samples `f`.
pub fn apply_nonstandard(nsf: &NonStandardForm, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != nsf.grid_len {
        return Err(Error::ShapeMismatch(format!(
            "input length {} does not match form size {}",
            f.len(),
            nsf.grid_len
        )));
    }
    let levels = nsf.levels();
    // pyramid: s[k], d[k] for k = 1..=levels (index k - 1)
    let mut coarse = Vec::with_capacity(levels);
    let mut detail = Vec::with_capacity(levels);
    let mut s = f.to_vec();
    for _ in 0..levels {
        let (a, d) = analysis_step(&s, &nsf.filter);
        coarse.push(a.clone());
        detail.push(d);
        s = a;
    }
    if levels == 0 {
        return Ok(nsf.coarse.apply(f));
    }
    let mut out = nsf.coarse.apply(&coarse[levels - 1]);
    for k in (0..levels).rev() {
        let lv = &nsf.blocks[k];
        lv.gamma.apply_add(&detail[k], &mut out);
        let mut dhat = lv.a.apply(&detail[k]);
        lv.b.apply_add(&coarse[k], &mut dhat);
        out = synthesis_step(&out, &dhat, &nsf.filter);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdStats {
    pub nonzeros_before: usize,
    pub nonzeros_after: usize,
    /// Bound on `|apply(thresholded) - apply(original)|_2 / |f|_2`: the sum
    /// over blocks of the Frobenius norm of the dropped entries.
    pub max_apply_error_bound: f64,
}

/// Zeroes every block entry with `|v| < eps`.
pub fn threshold_sparsity(
    nsf: &NonStandardForm,
    eps: f64,
) -> Result<(NonStandardForm, ThresholdStats)> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::BadParams(format!("threshold must be >= 0, got {eps}")));
    }
    let mut bound = 0.0;
    let mut cut = |b: &SparseBlock| {
        let (t, dropped) = b.thresholded(eps);
        bound += dropped.sqrt();
        t
    };
    let blocks = nsf
        .blocks
        .iter()
        .map(|lv| NsLevel {
            level: lv.level,
            a: cut(&lv.a),
            b: cut(&lv.b),
            gamma: cut(&lv.gamma),
        })
        .collect();
    let coarse = cut(&nsf.coarse);
    let out = NonStandardForm {
        grid_len: nsf.grid_len,
        filter: nsf.filter.clone(),
        blocks,
        coarse,
    };
    let stats = ThresholdStats {
        nonzeros_before: nsf.nnz(),
        nonzeros_after: out.nnz(),
        max_apply_error_bound: bound,
    };
    Ok((out, stats))
}
