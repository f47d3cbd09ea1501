mod common;

use beamforge_core::baselines::{
    bounds_from_channels, evaluate, exhaustive_wrap, hermitian_eig, mmse_from_channels, mrt_from_channels, random_precoder,
    scale_channels_to_threshold, slnr_from_channels, svd_bounds, svd_small, zf_from_channels, BaselineMethod,
};
use beamforge_core::optimizer::{site_powers, OptimizerConfig, Precoder, SiteChannels};
use beamforge_core::{to_db, ComplexMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let v: Vec<Complex64> =
        (0..rows * cols).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

fn rank_one(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    let a: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let b: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    ComplexMatrix::from_fn(n, n, |i, j| a[i] * b[j].conj() * scale)
}

fn channels(seed: u64, nb: usize, nd: usize) -> SiteChannels {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SiteChannels {
        bright: (0..nb).map(|_| random_matrix(&mut rng, 4, 4).scale(1e3)).collect(),
        dark: (0..nd).map(|_| random_matrix(&mut rng, 4, 4).scale(1e2)).collect(),
    }
}

fn nalgebra_singular_values(h: &ComplexMatrix) -> Vec<f64> {
    let m = DMatrix::from_fn(h.n_rows, h.n_cols, |i, j| h.get(i, j));
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_agrees_with_nalgebra(seed in any::<u64>(), rows in 1usize..=8, cols in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_matrix(&mut rng, rows, cols);
        let s = svd_small(&h).unwrap();
        prop_assert!(s.reconstruct().max_abs_diff(&h) <= 1e-9);
        let oracle = nalgebra_singular_values(&h);
        for (k, o) in oracle.iter().enumerate() {
            prop_assert!((s.values[k] - o).abs() <= 1e-9 * oracle[0].max(1.0));
        }
        for v in &s.values[oracle.len()..] {
            prop_assert!(v.abs() <= 1e-7);
        }
    }

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_matrix(&mut rng, n, n).gram();
        let e = hermitian_eig(&g).unwrap();
        let back = ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| e.vectors.get(i, k) * e.values[k] * e.vectors.get(j, k).conj()).sum()
        });
        prop_assert!(back.max_abs_diff(&g) <= 1e-9 * g.frobenius_norm().max(1.0));
    }

    #[test]
    fn precoders_are_unit_norm(seed in any::<u64>(), nb in 1usize..3, nd in 0usize..3) {
        let ch = channels(seed, nb, nd);
        let ws = [
            mrt_from_channels(&ch).unwrap(),
            zf_from_channels(&ch, None).unwrap(),
            mmse_from_channels(&ch, None).unwrap(),
            slnr_from_channels(&ch, None).unwrap(),
            random_precoder(4, seed).unwrap(),
        ];
        for w in ws {
            prop_assert!((w.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn scaling_is_exact(seed in any::<u64>(), t in 0.0f64..80.0) {
        let ch = channels(seed, 2, 2);
        let w = mrt_from_channels(&ch).unwrap();
        let before = site_powers(&ch, &w).1.into_iter().map(to_db).fold(f64::NEG_INFINITY, f64::max);
        let (scaled, _) = scale_channels_to_threshold(&w, &ch, t);
        let after = site_powers(&ch, &scaled).1.into_iter().map(to_db).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((after - before.min(t)).abs() <= 1e-9);
    }

    #[test]
    fn zf_nulls_when_a_null_space_exists(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = SiteChannels {
            bright: vec![random_matrix(&mut rng, 4, 4).scale(1e3)],
            dark: vec![rank_one(&mut rng, 4, 1e3), rank_one(&mut rng, 4, 1e3)],
        };
        let w = zf_from_channels(&ch, None).unwrap();
        let (b, d) = site_powers(&ch, &w);
        prop_assert!(d.iter().all(|&p| p <= 1e-15 * b[0]), "{:?} vs {:?}", d, b);
    }
}

#[test]
fn mrt_beats_random_directions() {
    for seed in 0..5u64 {
        let ch = channels(seed, 2, 0);
        let total = |w: &Precoder| site_powers(&ch, w).0.iter().sum::<f64>();
        let best = total(&mrt_from_channels(&ch).unwrap());
        for k in 0..1000 {
            let w = random_precoder(4, seed * 10_000 + k).unwrap();
            assert!(total(&w) <= best * (1.0 + 1e-12));
        }
    }
}

#[test]
fn contrast_never_exceeds_upper_bound() {
    let r = common::reference();
    let cfg = OptimizerConfig::default();
    for method in BaselineMethod::ALL {
        let res = exhaustive_wrap(method, &r.tensor, &r.cs, &cfg).unwrap();
        let bounds = svd_bounds(&r.tensor, &r.cs, res.site_index).unwrap();
        for (id, p) in r.cs.bright.iter().zip(&res.bright_powers_db) {
            assert!(*p <= to_db(bounds.per_site[id].sigma_max_sq) + 1e-6, "{method} site {id}");
        }
        if let (Some(c), Some(ub)) = (res.contrast_db, bounds.contrast_ub_db) {
            assert!(c <= ub + 1e-6, "{method}: {c} > {ub}");
        }
    }
}

#[test]
fn evaluation_is_consistent() {
    let ch = channels(5, 2, 2);
    let w = mrt_from_channels(&ch).unwrap();
    let res = evaluate(BaselineMethod::ExhMrt, 0, &w, &ch, 30.0);
    let contrast = res.bright_mean_db - res.max_dark_db.unwrap();
    assert!((res.contrast_db.unwrap() - contrast).abs() <= 1e-12);
    let b = bounds_from_channels(&[1, 2], &[3, 4], &ch).unwrap();
    assert!(res.contrast_db.unwrap() <= b.contrast_ub_db.unwrap() + 1e-6);
}
