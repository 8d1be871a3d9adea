use fdareg::basis::{BasisSystem, SeasonDomain};
use fdareg::effects::{effect_on_curve, printed_pair_consistent, yield_ratio, ScenarioKind};
use proptest::prelude::*;

fn basis() -> BasisSystem {
    BasisSystem::bspline(SeasonDomain::new(150.0, "t").unwrap(), 4, 12).unwrap()
}

fn step(delta_t: f64) -> ScenarioKind {
    ScenarioKind::TemperatureStep { delta_t }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn effect_is_linear_in_the_magnitude(
        coefs in proptest::collection::vec(-0.01..0.01f64, 12),
        d in -5.0..5.0f64,
        k in -4i32..4,
        (t0, t1) in (0.0..140.0f64).prop_flat_map(|a| (Just(a), a + 2.0..150.0)),
    ) {
        let b = basis();
        for kind in [step(d), ScenarioKind::PrecipitationRamp { delta_p: d }] {
            let r = effect_on_curve(&b, &coefs, kind, t0, t1).unwrap();
            prop_assert_eq!(r.delta_log_yield.to_bits(), (d * r.integral_value).to_bits());
            prop_assert_eq!(r.yield_ratio.to_bits(), r.delta_log_yield.exp().to_bits());
            let scaled = match kind {
                ScenarioKind::TemperatureStep { delta_t } => step(delta_t * 2f64.powi(k)),
                ScenarioKind::PrecipitationRamp { delta_p } => {
                    ScenarioKind::PrecipitationRamp { delta_p: delta_p * 2f64.powi(k) }
                }
            };
            let rs = effect_on_curve(&b, &coefs, scaled, t0, t1).unwrap();
            prop_assert_eq!(rs.delta_log_yield, r.delta_log_yield * 2f64.powi(k));
        }
    }

    #[test]
    fn step_effects_add_over_adjacent_windows(
        coefs in proptest::collection::vec(-0.01..0.01f64, 12),
        d in -5.0..5.0f64,
        cuts in proptest::collection::vec(0.0..150.0f64, 3),
    ) {
        let mut c = cuts.clone();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assume!(c[1] - c[0] > 1e-6 && c[2] - c[1] > 1e-6);
        let b = basis();
        let ab = effect_on_curve(&b, &coefs, step(d), c[0], c[1]).unwrap().delta_log_yield;
        let bc = effect_on_curve(&b, &coefs, step(d), c[1], c[2]).unwrap().delta_log_yield;
        let ac = effect_on_curve(&b, &coefs, step(d), c[0], c[2]).unwrap().delta_log_yield;
        prop_assert!((ab + bc - ac).abs() <= 1e-10);
    }

    #[test]
    fn nonpositive_curve_gives_nonpositive_step_effect(
        coefs in proptest::collection::vec(-0.01..0.0f64, 12),
        d in 0.01..5.0f64,
        (t0, t1) in (0.0..140.0f64).prop_flat_map(|a| (Just(a), a + 1.0..150.0)),
    ) {
        // B-splines are nonnegative, so nonpositive coefficients give γ ≤ 0
        let r = effect_on_curve(&basis(), &coefs, step(d), t0, t1).unwrap();
        prop_assert!(r.delta_log_yield <= 0.0);
    }

    #[test]
    fn rounded_pairs_are_consistent(dy in -0.2..0.05f64, decimals in 3i32..7) {
        let scale = 10f64.powi(decimals);
        let printed_dy = (dy * scale).round() / scale;
        let printed_ratio = (yield_ratio(dy) * scale).round() / scale;
        prop_assert!(printed_pair_consistent(printed_dy, printed_ratio, decimals));
    }
}
