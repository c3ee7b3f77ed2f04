mod common;

use common::bessel::matern_general;
use cutinit::surrogate::{
    matern_kernel, ForestModel, ForestOptions, GpModel, GpOptions, Nu, TreeModel, TreeOptions,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_forms_match_general_matern() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let nu = [Nu::Half, Nu::ThreeHalves, Nu::FiveHalves][k % 3];
        let d: f64 = rng.gen_range(0.01..3.0);
        let len: f64 = rng.gen_range(0.2..2.0);
        let sf: f64 = rng.gen_range(0.5..2.0);
        let closed = matern_kernel(&[0.0], &[d], len, sf, nu).unwrap();
        let general = matern_general(d, len, sf, nu.value());
        worst = worst.max((closed - general).abs() / (sf * sf));
    }
    assert!(worst < 1e-6, "worst deviation {worst}");
}

#[test]
fn matern_three_halves_at_unit_distance_matches_bessel() {
    let general = matern_general(1.0, 1.0, 1.0, 1.5);
    assert!((general - 0.4833577245965077).abs() < 1e-6);
}

fn feature_set(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect()
}

#[test]
fn kernel_matrices_are_psd_after_jitter() {
    for seed in 0..100 {
        let n = 3 + (seed as usize % 20);
        let x = feature_set(seed, n, 1 + seed as usize % 4);
        let nu = [Nu::Half, Nu::ThreeHalves, Nu::FiveHalves][seed as usize % 3];
        let k = DMatrix::from_fn(n, n, |i, j| {
            matern_kernel(&x[i], &x[j], 0.8, 1.1, nu).unwrap() + if i == j { 1e-8 } else { 0.0 }
        });
        assert!(k.clone().cholesky().is_some(), "seed {seed}");
        let min_eig = k.symmetric_eigenvalues().min();
        assert!(min_eig > -1e-10, "seed {seed}: {min_eig}");
    }
}

#[test]
fn noise_free_gp_interpolates() {
    let x = feature_set(5, 25, 3);
    let y: Vec<f64> = x.iter().map(|r| r[0].sin() * 4.0 + r[1] * r[2]).collect();
    let opts = GpOptions {
        noise: Some(0.0),
        ..GpOptions::default()
    };
    let m = GpModel::fit(&x, &y, &opts).unwrap();
    for (xi, yi) in x.iter().zip(&y) {
        let (mu, _) = m.predict(xi).unwrap();
        assert!((mu - yi).abs() < 1e-6, "{mu} vs {yi}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matern_is_symmetric(
        a in prop::collection::vec(-5.0f64..5.0, 3),
        b in prop::collection::vec(-5.0f64..5.0, 3),
        len in 0.05f64..10.0,
        sf in 0.1f64..5.0,
        which in 0usize..3,
    ) {
        let nu = [Nu::Half, Nu::ThreeHalves, Nu::FiveHalves][which];
        let ab = matern_kernel(&a, &b, len, sf, nu).unwrap();
        let ba = matern_kernel(&b, &a, len, sf, nu).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab <= sf * sf * (1.0 + 1e-12) && ab >= 0.0);
    }

    #[test]
    fn tree_and_forest_stay_in_label_range(seed in 0u64..1000, n in 1usize..30) {
        let x = feature_set(seed, n, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let t = TreeModel::fit(&x, &y, &TreeOptions::default()).unwrap();
        let f = ForestModel::fit(&x, &y, &ForestOptions { n_trees: 10, seed, ..ForestOptions::default() }).unwrap();
        for q in feature_set(seed + 1, 20, 2) {
            let pt = t.predict(&q).unwrap();
            let pf = f.predict(&q).unwrap();
            prop_assert!(pt >= lo && pt <= hi);
            prop_assert!(pf >= lo - 1e-9 && pf <= hi + 1e-9);
        }
        for node in &t.nodes {
            if let cutinit::surrogate::Node::Split { feature, threshold, .. } = node {
                let col = x.iter().map(|r| r[*feature]);
                let (cmin, cmax) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                prop_assert!(*threshold >= cmin && *threshold <= cmax);
            }
        }
    }

    #[test]
    fn labeling_a_point_shrinks_its_std(seed in 0u64..500) {
        let mut x = feature_set(seed, 8, 2);
        let f = |r: &[f64]| r[0].cos() + 0.5 * r[1];
        let mut y: Vec<f64> = x.iter().map(|r| f(r)).collect();
        let q = feature_set(seed + 1000, 1, 2).remove(0);
        let opts = GpOptions { noise: Some(0.0), ..GpOptions::default() };
        let before = GpModel::fit(&x, &y, &opts).unwrap().predict(&q).unwrap().1;
        x.push(q.clone());
        y.push(f(&q));
        let after = GpModel::fit(&x, &y, &opts).unwrap().predict(&q).unwrap().1;
        prop_assert!(after < before - 1e-6 || before < 1e-6, "{} -> {}", before, after);
    }
}
