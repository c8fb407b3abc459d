use std::collections::BTreeSet;

use ndarray::Array2;
use proptest::prelude::*;
use waveleton::mra::{multi_norm, reconstruct_level, slots};
use waveleton::tensor2d::{dwt2, idwt2, Coefficients2D, Grid2D, GridSpec, Lattice};
use waveleton::wavelet::{
    dwt_flat, dwt_periodic, dwt_tiling, idwt_flat, idwt_periodic, make_filter, packet_best_basis, Family, NodeId,
    PacketTree, WaveletFilter,
};

fn all_filters() -> Vec<WaveletFilter> {
    let mut v = vec![make_filter(Family::Haar, 1).unwrap()];
    for m in 2..=10 {
        v.push(make_filter(Family::Daubechies, m).unwrap());
    }
    for m in 4..=10 {
        v.push(make_filter(Family::Symmlet, m).unwrap());
    }
    v
}

fn filter_strategy() -> impl Strategy<Value = WaveletFilter> {
    (0usize..17).prop_map(|i| all_filters().swap_remove(i))
}

/// Signal length and level count valid for `f`.
fn sized_signal(f: &WaveletFilter) -> impl Strategy<Value = (Vec<f64>, usize)> {
    let min_exp = (f.support_length as f64).log2().ceil() as u32;
    (min_exp.max(3)..=10).prop_flat_map(|e| {
        let n = 1usize << e;
        (prop::collection::vec(-10.0f64..10.0, n), 0..=e as usize)
    })
}

#[test]
fn filter_invariants_for_every_supported_order() {
    for f in all_filters() {
        let s: f64 = f.h.iter().sum();
        assert!((s - 2f64.sqrt()).abs() < 1e-12, "{}", f.name());
        let l = f.h.len();
        for m in 0..l / 2 {
            let dot: f64 = (0..l - 2 * m).map(|k| f.h[k] * f.h[k + 2 * m]).sum();
            let want = if m == 0 { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-12, "{} shift {m}", f.name());
        }
        for p in 0..f.order {
            let mom: f64 = f.g.iter().enumerate().map(|(k, g)| g * (k as f64).powi(p as i32)).sum();
            let scale: f64 = f.g.iter().enumerate().map(|(k, g)| (g * (k as f64).powi(p as i32)).abs()).sum();
            assert!(mom.abs() < 1e-10 * scale.max(1.0), "{} moment {p}: {mom}", f.name());
        }
        for (k, g) in f.g.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(*g, sign * f.h[l - 1 - k]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_and_parseval((f, (x, levels)) in filter_strategy().prop_flat_map(|f| (Just(f.clone()), sized_signal(&f)))) {
        let d = dwt_periodic(&x, &f, levels).unwrap();
        let back = idwt_periodic(&d, &f).unwrap();
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9, "round trip error {err}");
        let e0: f64 = x.iter().map(|v| v * v).sum();
        let norms = multi_norm(&d);
        prop_assert!((norms.total - e0).abs() < 1e-10 * e0.max(1.0));
        let parts: f64 = norms.per_level_energy.iter().sum();
        prop_assert!((norms.total - parts).abs() < 1e-10 * e0.max(1.0));
        let lens: usize = d.coarse.len() + d.details.iter().map(Vec::len).sum::<usize>();
        prop_assert_eq!(lens, x.len());
    }

    #[test]
    fn flat_layout_inverts((f, (x, levels)) in filter_strategy().prop_flat_map(|f| (Just(f.clone()), sized_signal(&f)))) {
        let c = dwt_flat(&x, &f, levels).unwrap();
        let back = idwt_flat(&c, &f, levels).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn level_projections_sum_to_signal((f, (x, levels)) in filter_strategy().prop_flat_map(|f| (Just(f.clone()), sized_signal(&f)))) {
        let d = dwt_periodic(&x, &f, levels).unwrap();
        let mut sum = vec![0.0; x.len()];
        for s in slots(&d) {
            for (acc, v) in sum.iter_mut().zip(reconstruct_level(&d, &f, s).unwrap()) {
                *acc += v;
            }
        }
        for (a, b) in x.iter().zip(&sum) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_transforms_round_trip(
        eq in 3u32..=6,
        ep in 3u32..=6,
        levels in 0usize..=3,
        square in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let f = make_filter(Family::Daubechies, 2).unwrap();
        let spec = GridSpec::unit(1 << eq, 1 << ep);
        let mut state = seed;
        let values = Array2::from_shape_fn((spec.nq, spec.np), |_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let g = Grid2D::from_spec(&spec, values);
        let mode = if square { Lattice::Square } else { Lattice::Rectangle };
        let d = dwt2(&g, &f, levels, mode).unwrap();
        let e0: f64 = g.values.iter().map(|v| v * v).sum();
        prop_assert!((d.energy() - e0).abs() < 1e-10 * e0.max(1.0));
        let back = idwt2(&d, &f).unwrap();
        let err = (&back.values - &g.values).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(err < 1e-9);
    }
}

#[test]
fn separable_grid_has_outer_product_coefficients() {
    let f = make_filter(Family::Symmlet, 4).unwrap();
    let spec = GridSpec::unit(32, 64);
    let u: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).sin() + 0.1 * i as f64).collect();
    let v: Vec<f64> = (0..64).map(|k| (-((k as f64 - 20.0) / 6.0).powi(2)).exp()).collect();
    let g = Grid2D::from_spec(&spec, Array2::from_shape_fn((32, 64), |(i, k)| u[i] * v[k]));
    let d = dwt2(&g, &f, 2, Lattice::Rectangle).unwrap();
    let cu = dwt_flat(&u, &f, 2).unwrap();
    let cv = dwt_flat(&v, &f, 2).unwrap();
    let Coefficients2D::Rectangle(c) = d.coefficients else { panic!("rectangle lattice") };
    for ((i, k), val) in c.indexed_iter() {
        assert!((val - cu[i] * cv[k]).abs() < 1e-12);
    }
}

fn tilings(level: usize, path: usize, depth: usize) -> Vec<BTreeSet<NodeId>> {
    let mut out = vec![BTreeSet::from([(level, path)])];
    if level < depth {
        for a in tilings(level + 1, 2 * path, depth) {
            for b in tilings(level + 1, 2 * path + 1, depth) {
                out.push(a.union(&b).copied().collect());
            }
        }
    }
    out
}

#[test]
fn best_basis_matches_brute_force_over_all_tilings() {
    let all = tilings(0, 0, 3);
    assert_eq!(all.len(), 26);
    let f = make_filter(Family::Daubechies, 4).unwrap();
    for seed in 0..6u64 {
        let x: Vec<f64> = (0..128)
            .map(|i| {
                let t = i as f64 / 128.0;
                (2.0 * std::f64::consts::PI * (3.0 + seed as f64) * t).sin() * (seed as f64 * 0.7 + 1.0)
                    + if i == 17 + 9 * seed as usize { 4.0 } else { 0.0 }
            })
            .collect();
        let tree = packet_best_basis(&x, &f, 3).unwrap();
        let brute = all.iter().map(|t| tree.tiling_cost(t)).fold(f64::INFINITY, f64::min);
        assert!((tree.chosen_cost() - brute).abs() < 1e-12, "seed {seed}");
        assert!(tree.is_exact_tiling(&tree.chosen_basis));
        let e: f64 = tree.chosen_coefficients().iter().map(|v| v * v).sum();
        let e0: f64 = x.iter().map(|v| v * v).sum();
        assert!((e - e0).abs() < 1e-10 * e0);
        assert!(tree.chosen_cost() <= tree.tiling_cost(&dwt_tiling(3)) + 1e-12);
    }
    let plain = PacketTree::decompose(&vec![1.0; 64], &f, 3).unwrap();
    for t in &all {
        assert!(plain.is_exact_tiling(t));
    }
}
