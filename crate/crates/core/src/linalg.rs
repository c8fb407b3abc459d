//! Small dense and matrix-free linear algebra helpers.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// `||b - A x|| / ||b||` (absolute when `b = 0`).
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Restarted GMRES with Givens rotations.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut x = x0.to_vec();
    let mut iterations = 0;
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = apply(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let mut r = residual(&x);
    let mut rel = norm(&r) / scale;
    while rel > tol && iterations < max_iter {
        let beta = norm(&r);
        let m = restart.min(max_iter - iterations).max(1);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            iterations += 1;
            let mut w = apply(&v[k]);
            for (i, vi) in v.iter().enumerate() {
                h[i][k] = dot(&w, vi);
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= h[i][k] * vj);
            }
            // second pass of Gram-Schmidt
            for (i, vi) in v.iter().enumerate() {
                let c = dot(&w, vi);
                h[i][k] += c;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= c * vj);
            }
            h[k + 1][k] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() / scale <= tol * 0.5 || iterations >= max_iter {
                break;
            }
            let wn = norm(&w);
            if wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wj| wj / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = ((i + 1)..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, vi) in y.iter().zip(&v) {
            x.iter_mut().zip(vi).for_each(|(xj, vj)| *xj += yi * vj);
        }
        r = residual(&x);
        let new_rel = norm(&r) / scale;
        if k_used == 0 || !(new_rel < rel) && new_rel > tol {
            rel = new_rel;
            break;
        }
        rel = new_rel;
    }
    debug_assert_eq!(x.len(), n);
    GmresOutcome {
        converged: rel <= tol,
        x,
        relative_residual: rel,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 50;
        let a = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut s = 3.0 * x[i];
                    if i > 0 {
                        s += 0.7 * x[i - 1];
                    }
                    if i + 1 < n {
                        s -= 0.4 * x[i + 1];
                    }
                    s
                })
                .collect()
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a(&truth);
        let out = gmres(a, &b, &vec![0.0; n], 1e-12, 20, 500);
        assert!(out.converged, "{}", out.relative_residual);
        for (x, t) in out.x.iter().zip(&truth) {
            assert!((x - t).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let out = gmres(|x| x.to_vec(), &[0.0; 4], &[0.0; 4], 1e-10, 5, 10);
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }
}
