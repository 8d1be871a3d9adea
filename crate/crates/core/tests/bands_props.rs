mod common;

use fdareg::bands::{
    bands_from_replicas, bootstrap_replicas, draw_provinces, percentile_band, quantile_sorted,
    replica_curves, BandConfig,
};
use fdareg::estimator::{smooth_covariates, EstimatorTag};
use fdareg::ingest::generate_synthetic;
use proptest::prelude::*;

fn cfg(n_replicas: usize, seed: u64) -> BandConfig {
    BandConfig {
        n_replicas,
        level: 0.95,
        seed,
        grid_points: 51,
    }
}

#[test]
fn wider_level_contains_narrower() {
    let s = common::small(1);
    let spec = s.spec.model.as_ref().unwrap();
    let c = cfg(60, 4);
    let set = bootstrap_replicas(spec, &s.output.yields, &s.panels, EstimatorTag::Ols, &c).unwrap();
    let wide = &bands_from_replicas(spec, &set, EstimatorTag::Ols, &c, 0.99)[0];
    let narrow = &bands_from_replicas(spec, &set, EstimatorTag::Ols, &c, 0.90)[0];
    for g in 0..wide.grid.len() {
        assert!(wide.lower[g] <= narrow.lower[g] && narrow.upper[g] <= wide.upper[g]);
    }
}

#[test]
fn identity_resample_reproduces_the_point_estimate() {
    let s = common::small(2);
    let spec = s.spec.model.as_ref().unwrap();
    let m = s.output.yields.index().n_provinces();
    let identity: Vec<usize> = (0..m).collect();
    for tag in [EstimatorTag::Ols, EstimatorTag::Qr(0.5)] {
        let grid: Vec<f64> = (0..=50).map(|i| 150.0 * i as f64 / 50.0).collect();
        let fit = s.fit(&s.output.yields, &[tag]);
        let point = fdareg::estimator::reconstruct_gamma(&fit.result, "tmax", tag, &grid).unwrap();
        let rep = replica_curves(spec, &s.output.yields, &s.panels, tag, &identity, &grid).unwrap();
        let diff = rep[0].iter().zip(&point).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9, "{tag}: replica differs by {diff:e}");
    }
}

#[test]
fn bootstrap_is_deterministic_given_the_seed() {
    let s = common::small(3);
    let spec = s.spec.model.as_ref().unwrap();
    let a = bootstrap_replicas(spec, &s.output.yields, &s.panels, EstimatorTag::Ols, &cfg(30, 9)).unwrap();
    let b = bootstrap_replicas(spec, &s.output.yields, &s.panels, EstimatorTag::Ols, &cfg(30, 9)).unwrap();
    assert_eq!(a.curves, b.curves);
    let c = bootstrap_replicas(spec, &s.output.yields, &s.panels, EstimatorTag::Ols, &cfg(30, 10)).unwrap();
    assert_ne!(a.curves, c.curves);
    assert_eq!(draw_provinces(5, 2, 10), draw_provinces(5, 2, 10));
}

#[test]
fn noiseless_panel_gives_degenerate_bands() {
    let mut spec = common::small_spec(4);
    spec.noise_sd = 0.0;
    spec.covariates[0].sample_noise_sd = 0.0;
    let output = generate_synthetic(&spec).unwrap();
    let model = spec.model.as_ref().unwrap();
    let panels = smooth_covariates(model, &output.weather).unwrap();
    let c = cfg(40, 1);
    let set = bootstrap_replicas(model, &output.yields, &panels, EstimatorTag::Ols, &c).unwrap();
    let band = &bands_from_replicas(model, &set, EstimatorTag::Ols, &c, c.level)[0];
    let width = band.lower.iter().zip(&band.upper).map(|(l, u)| u - l).fold(0.0, f64::max);
    assert!(width < 1e-6, "band width {width:e}");
}

#[test]
fn band_distribution_ignores_province_order() {
    let s = common::small(5);
    let spec = s.spec.model.as_ref().unwrap();
    let m = s.output.yields.index().n_provinces();
    let perm: Vec<usize> = (0..m).rev().collect();
    let yields_p = s.output.yields.resample_provinces(&perm);
    let panels_p: Vec<_> = s.panels.iter().map(|p| p.resample_provinces(&perm).unwrap()).collect();
    let average = |yields, panels: &[_]| {
        let mut lower = vec![0.0; 51];
        let mut upper = vec![0.0; 51];
        for seed in 0..50 {
            let c = cfg(20, seed);
            let set = bootstrap_replicas(spec, yields, panels, EstimatorTag::Ols, &c).unwrap();
            let b = &bands_from_replicas(spec, &set, EstimatorTag::Ols, &c, c.level)[0];
            for g in 0..51 {
                lower[g] += b.lower[g] / 50.0;
                upper[g] += b.upper[g] / 50.0;
            }
        }
        (lower, upper)
    };
    let (l0, u0) = average(&s.output.yields, &s.panels);
    let (l1, u1) = average(&yields_p, &panels_p);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff = |a: &[f64], b: &[f64]| norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
    assert!(diff(&l0, &l1) <= 0.1 * norm(&l0), "lower bands moved");
    assert!(diff(&u0, &u1) <= 0.1 * norm(&u0), "upper bands moved");
    let w0: f64 = u0.iter().zip(&l0).map(|(u, l)| u - l).sum();
    let w1: f64 = u1.iter().zip(&l1).map(|(u, l)| u - l).sum();
    assert!((w0 - w1).abs() <= 0.1 * w0, "mean width {w0} vs {w1}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn type7_quantiles_hit_order_statistics(mut xs in proptest::collection::vec(-100.0..100.0f64, 2..50)) {
        xs.sort_by(|a, b| a.total_cmp(b));
        let n = xs.len();
        for k in 0..n {
            let q = quantile_sorted(&xs, k as f64 / (n - 1) as f64);
            prop_assert!((q - xs[k]).abs() <= 1e-12 * (1.0 + xs[k].abs()));
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=100 {
            let q = quantile_sorted(&xs, i as f64 / 100.0);
            prop_assert!(q >= prev && q >= xs[0] && q <= xs[n - 1]);
            prev = q;
        }
    }

    #[test]
    fn percentile_band_is_ordered(curves in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 5), 2..40), level in 0.5..0.99f64) {
        let (lo, hi) = percentile_band(&curves, level);
        prop_assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
    }
}
