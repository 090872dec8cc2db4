use extremes_core::chi_process::{
    estimate_psi, exceeds, first_passage, z_transform, ChiTrendSpec, HorizonSpec, McConfig,
};
use extremes_core::constants::upsilon_tail;
use extremes_core::gaussian_paths::{PathBundle, SelfSimilarModel, TimeGrid};
use extremes_core::harness::{ks_statistic, penalty, simulate_m2_statistic};
use extremes_core::mc::{wilson_interval, with_workers, Z95};
use extremes_core::model_params::t0_of;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t0_maximizes_standardized_variance(h in 0.05f64..0.95, extra in 0.05f64..3.0, c in 0.1f64..5.0) {
        let beta = 2.0 * h + extra;
        let t0 = t0_of(h, beta, c).unwrap();
        let var = |t: f64| t.powf(2.0 * h) / (1.0 + c * t.powf(beta));
        for k in 1..200 {
            let t = t0 * k as f64 / 50.0;
            prop_assert!(var(t) <= var(t0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn weight_order_is_irrelevant(mut b in prop::collection::vec(0.05f64..0.99, 0..4), seed in 0u64..1000) {
        b.push(1.0);
        let model = SelfSimilarModel::fbm(0.5).unwrap();
        let spec = ChiTrendSpec::new(b.clone(), 1.0, 2.0, model.clone()).unwrap();
        b.reverse();
        let rev = ChiTrendSpec::new(b, 1.0, 2.0, model).unwrap();
        prop_assert_eq!(&spec.b, &rev.b);
        prop_assert!(spec.b.windows(2).all(|w| w[0] >= w[1]));
        let mc = McConfig::new(200, 65, seed);
        let a = estimate_psi(&spec, &HorizonSpec::Infinite, 2.0, &mc).unwrap();
        let r = estimate_psi(&rev, &HorizonSpec::Infinite, 2.0, &mc).unwrap();
        prop_assert_eq!(a.p_hat, r.p_hat);
    }

    #[test]
    fn exceedance_matches_first_passage(seed in 0u64..10_000, u in 0.0f64..3.0, h in 0.2f64..0.8) {
        let model = SelfSimilarModel::fbm(h).unwrap();
        let spec = ChiTrendSpec::new(vec![1.0, 0.6], 1.0, 2.0, model.clone()).unwrap();
        let bundle = PathBundle::sample(&model, TimeGrid::from_zero(2.0, 129).unwrap(), 2, seed).unwrap();
        let hit = exceeds(&bundle, &spec, u).unwrap();
        let tau = first_passage(&bundle, &spec, u).unwrap();
        prop_assert_eq!(hit, tau.is_some());
        if let Some(t) = tau {
            prop_assert!((0.0..=2.0).contains(&t));
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let hits = (frac * n as f64).floor() as u64;
        let (lo, hi) = wilson_interval(hits, n, Z95);
        let p = hits as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn ks_in_unit_interval(mut xs in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        xs.sort_by(f64::total_cmp);
        let d = ks_statistic(&xs, |x| 1.0 / (1.0 + (-x).exp())).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-12);
    }

    #[test]
    fn penalty_symmetric_and_nonnegative(t in 0.001f64..0.999, upsilon in 1.0001f64..10.0) {
        let a = penalty(t, upsilon);
        prop_assert!(a >= 0.0);
        prop_assert!((a - penalty(1.0 - t, upsilon)).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn upsilon_decreases_past_mode(k in 1usize..8, u in 10.0f64..200.0) {
        let a = upsilon_tail(k, u).unwrap();
        let b = upsilon_tail(k, u + 1.0).unwrap();
        prop_assert!(a > 0.0 && b < a);
    }
}

#[test]
fn z_transform_variance_peaks_at_t0() {
    let (h, beta, c) = (0.7, 2.0, 1.0);
    let t0 = t0_of(h, beta, c).unwrap();
    let grid = TimeGrid::from_zero(4.0 * t0, 41).unwrap();
    let model = SelfSimilarModel::fbm(h).unwrap();
    let reps = 4000;
    let bundle = PathBundle::sample(&model, grid, reps, 17).unwrap();
    let mut var = vec![0.0; grid.num_points];
    for path in &bundle.components {
        for (v, z) in var.iter_mut().zip(z_transform(&grid, path, c, beta)) {
            *v += z * z / reps as f64;
        }
    }
    let peak = var.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exact = t0.powf(2.0 * h) / (1.0 + c * t0.powf(beta));
    // sampling error of a variance estimate at 4000 reps is about 2.2%
    assert!((peak / exact - 1.0).abs() < 0.08, "peak {peak} vs {exact}");
    let at_t0 = var[10];
    assert!((grid.time(10) - t0).abs() < 1e-12);
    assert!((at_t0 / exact - 1.0).abs() < 0.08);
}

#[test]
fn worker_count_does_not_change_results() {
    let spec = ChiTrendSpec::new(vec![1.0], 1.0, 2.0, SelfSimilarModel::fbm(0.4).unwrap()).unwrap();
    let mc = McConfig::new(3001, 257, 21);
    let one = with_workers(Some(1), || estimate_psi(&spec, &HorizonSpec::Infinite, 3.0, &mc).unwrap());
    let three = with_workers(Some(3), || estimate_psi(&spec, &HorizonSpec::Infinite, 3.0, &mc).unwrap());
    assert_eq!(one.p_hat, three.p_hat);
    let a = with_workers(Some(1), || simulate_m2_statistic(1.5, 101, 50, 3, 1e-3).unwrap());
    let b = with_workers(Some(4), || simulate_m2_statistic(1.5, 101, 50, 3, 1e-3).unwrap());
    assert_eq!(a, b);
}

#[test]
fn clip_ladder_is_stable() {
    // the sup sits in the interior, so shrinking the clip barely moves it
    let reps = 400;
    let coarse = simulate_m2_statistic(2.0, 2001, reps, 5, 1e-2).unwrap();
    let fine = simulate_m2_statistic(2.0, 2001, reps, 5, 1e-3).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean(&coarse) - mean(&fine)).abs() < 0.1 * mean(&fine).abs().max(0.5));
}
