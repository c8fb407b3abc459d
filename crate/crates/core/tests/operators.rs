use waveleton::operator::{
    apply_nonstandard, build_nonstandard_form, connection_coeffs, threshold_sparsity, OperatorSpec,
};
use waveleton::wavelet::{make_filter, Family, WaveletFilter};
use waveleton::Error;

fn dense_apply(m: &[f64], f: &[f64]) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * f[j]).sum()).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn test_signal(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            (2.0 * std::f64::consts::PI * x).sin() + 0.3 * (-((x - 0.4) / 0.05).powi(2)).exp() + 0.01 * ((i * 7919) % 13) as f64
        })
        .collect()
}

#[test]
fn stencil_parity() {
    for (m, order) in [(3, 1), (4, 2), (5, 3), (6, 4), (8, 1)] {
        let f = make_filter(Family::Daubechies, m).unwrap();
        let cc = connection_coeffs(&f, order).unwrap();
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        for (l, r) in cc.shifts() {
            assert!((cc.r(-l) - sign * r).abs() < 1e-12, "db{m} order {order} shift {l}");
        }
        assert!(cc.refinement_residual < 1e-10);
        assert!(cc.half_width <= f.len() - 2);
    }
}

#[test]
fn stencil_differentiates_polynomials_exactly() {
    for (f, order) in [
        (make_filter(Family::Daubechies, 3).unwrap(), 1),
        (make_filter(Family::Daubechies, 4).unwrap(), 2),
        (make_filter(Family::Symmlet, 6).unwrap(), 3),
        (make_filter(Family::Daubechies, 6).unwrap(), 4),
    ] {
        let cc = connection_coeffs(&f, order).unwrap();
        let n = 256usize;
        let c = n as f64 / 2.0;
        for m in 0..=order + f.order - 1 {
            let samples: Vec<f64> = (0..n).map(|i| ((i as f64 - c) / 16.0).powi(m as i32)).collect();
            let d = cc.apply_periodic(&samples, 1.0 / 16.0);
            let w = cc.half_width;
            let r_abs: f64 = cc.values.iter().map(|r| r.abs()).sum();
            let size = r_abs * 16f64.powi(order as i32) * max_abs(&samples);
            for i in w + 1..n - w - 1 {
                let t = (i as f64 - c) / 16.0;
                let falling: f64 = (0..order).map(|k| m as f64 - k as f64).product();
                let exact = if m >= order { falling * t.powi((m - order) as i32) } else { 0.0 };
                assert!(
                    (d[i] - exact).abs() < 1e-8 * exact.abs() + 1e-13 * size,
                    "{} order {order} degree {m} at {i}: {} vs {exact}",
                    f.name(),
                    d[i]
                );
            }
        }
    }
}

#[test]
fn regularity_is_enforced() {
    let haar = make_filter(Family::Haar, 1).unwrap();
    assert!(matches!(connection_coeffs(&haar, 1), Err(Error::InsufficientRegularity { .. })));
    let db2 = make_filter(Family::Daubechies, 2).unwrap();
    assert!(matches!(connection_coeffs(&db2, 3), Err(Error::InsufficientRegularity { .. })));
}

fn check_against_dense(spec: &OperatorSpec, f: &WaveletFilter, levels: usize, n: usize) {
    let nsf = build_nonstandard_form(spec, f, levels, n).unwrap();
    let dense = spec.dense_matrix(f, n).unwrap();
    let x = test_signal(n);
    let want = dense_apply(&dense, &x);
    let got = apply_nonstandard(&nsf, &x).unwrap();
    let err = max_abs(&want.iter().zip(&got).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(err < 1e-10 * max_abs(&want).max(1.0), "levels {levels} n {n}: {err}");
}

#[test]
fn nonstandard_form_matches_dense_derivatives() {
    let f = make_filter(Family::Daubechies, 6).unwrap();
    for order in 1..=4 {
        for levels in 2..=6 {
            let n = ((1usize << levels) * f.support_length).next_power_of_two().max(128);
            check_against_dense(&OperatorSpec::Derivative { order }, &f, levels, n);
        }
    }
}

#[test]
fn nonstandard_form_matches_dense_kernels() {
    let f = make_filter(Family::Symmlet, 4).unwrap();
    let kernel = OperatorSpec::sampled_kernel(128, |x, y| {
        let d = (x - y + 0.5).rem_euclid(1.0) - 0.5;
        (-d * d / 0.01).exp() * (1.0 + x * y)
    });
    for levels in 0..=3 {
        check_against_dense(&kernel, &f, levels, 128);
    }
    let mut values = vec![0.0; 64 * 64];
    for (k, v) in values.iter_mut().enumerate() {
        *v = ((k * 2654435761) % 1000) as f64 / 1000.0 - 0.5;
    }
    let haar = make_filter(Family::Haar, 1).unwrap();
    for levels in 0..=5 {
        check_against_dense(&OperatorSpec::Dense { values: values.clone() }, &haar, levels, 64);
    }
}

#[test]
fn thresholding_error_stays_inside_its_bound() {
    let f = make_filter(Family::Daubechies, 4).unwrap();
    let n = 512;
    let spec = OperatorSpec::sampled_kernel(n, |x, y| 1.0 / (1.0 + 40.0 * ((x - y + 0.5).rem_euclid(1.0) - 0.5).abs()));
    let nsf = build_nonstandard_form(&spec, &f, 4, n).unwrap();
    let x = test_signal(n);
    let exact = apply_nonstandard(&nsf, &x).unwrap();
    for eps in [1e-8, 1e-5, 1e-3] {
        let (thin, stats) = threshold_sparsity(&nsf, eps).unwrap();
        assert!(stats.nonzeros_after <= stats.nonzeros_before);
        assert_eq!(stats.nonzeros_after, thin.nnz());
        let approx = apply_nonstandard(&thin, &x).unwrap();
        let diff: f64 = exact.iter().zip(&approx).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diff <= stats.max_apply_error_bound * norm * (1.0 + 1e-9) + 1e-15, "eps {eps}");
    }
}
