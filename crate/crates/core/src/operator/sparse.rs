//! Square sparse blocks in compressed-row form, plus translation-invariant
//! stencils.

use std::collections::BTreeMap;

/// Translation-invariant operator `T[k][k'] = t(k - k')`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stencil {
    pub taps: BTreeMap<isize, f64>,
}

impl Stencil {
    pub fn identity() -> Self {
        Stencil {
            taps: BTreeMap::from([(0, 1.0)]),
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (isize, f64)>) -> Self {
        let mut taps = BTreeMap::new();
        for (d, v) in pairs {
            *taps.entry(d).or_insert(0.0) += v;
        }
        Stencil { taps }
    }

    pub fn get(&self, d: isize) -> f64 {
        self.taps.get(&d).copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Stencil {
            taps: self.taps.iter().map(|(&d, &v)| (d, v * s)).collect(),
        }
    }

    /// `c(d) = sum_{a,b} x_a y_b t(2d + a - b)`: the stencil of `X T Y^T` for
    /// decimating filters `x`, `y`.
    pub fn decimate(&self, x: &[f64], y: &[f64]) -> Stencil {
        let mut out: BTreeMap<isize, f64> = BTreeMap::new();
        for (&d0, &t) in &self.taps {
            for (a, &xa) in x.iter().enumerate() {
                for (b, &yb) in y.iter().enumerate() {
                    // 2d + a - b = d0
                    let num = d0 - a as isize + b as isize;
                    if num.rem_euclid(2) == 0 {
                        *out.entry(num / 2).or_insert(0.0) += xa * yb * t;
                    }
                }
            }
        }
        Stencil { taps: out }
    }
}

/// Square `n x n` matrix in CSR form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseBlock {
    pub fn zeros(n: usize) -> Self {
        SparseBlock {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Periodic circulant of size `n`; taps wrapping onto the same column add.
    pub fn from_stencil(n: usize, stencil: &Stencil) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for k in 0..n {
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for (&d, &v) in &stencil.taps {
                let c = (k as isize - d).rem_euclid(n as isize) as usize;
                *row.entry(c).or_insert(0.0) += v;
            }
            for (c, v) in row {
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseBlock {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// From a dense row-major matrix, keeping exact nonzeros.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseBlock {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for (i, j, v) in self.entries() {
            d[i * self.n + j] = v;
        }
        d
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.vals[p]))
        })
    }

    /// `y += M x`.
    pub fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            *yi += s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_add(x, &mut y);
        y
    }

    /// Drops entries with `|v| < eps`; returns the block and the squared
    /// Frobenius norm of what was dropped.
    pub fn thresholded(&self, eps: f64) -> (SparseBlock, f64) {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut dropped = 0.0;
        row_ptr.push(0);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.vals[p];
                if v.abs() < eps {
                    dropped += v * v;
                } else {
                    cols.push(self.cols[p]);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        (
            SparseBlock {
                n: self.n,
                row_ptr,
                cols,
                vals,
            },
            dropped,
        )
    }

    /// Largest `|v|` among entries whose periodic distance from the diagonal
    /// exceeds `band`.
    pub fn max_beyond_band(&self, band: usize) -> f64 {
        self.entries()
            .filter(|&(i, j, _)| {
                let d = i.abs_diff(j);
                d.min(self.n - d) > band
            })
            .map(|(_, _, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Largest periodic distance from the diagonal of any stored entry.
    pub fn bandwidth(&self) -> usize {
        self.entries()
            .map(|(i, j, _)| {
                let d = i.abs_diff(j);
                d.min(self.n - d)
            })
            .max()
            .unwrap_or(0)
    }
}
