mod common;

use fdareg::basis::{BasisSystem, SeasonDomain};
use fdareg::fdata::FunctionalPanel;
use fdareg::fpca::fit_fpca;
use fdareg::panel::PanelIndex;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const K: usize = 7;

fn panel(rows: usize, values: &[f64]) -> (FunctionalPanel, BasisSystem) {
    let basis = BasisSystem::bspline(SeasonDomain::new(120.0, "t").unwrap(), 4, K).unwrap();
    let index = PanelIndex::new((0..rows).map(|i| format!("p{i}")).collect(), 2000, 1).unwrap();
    let coefs = DMatrix::from_fn(rows, K, |r, k| values[r * K + k] * (1.0 + k as f64));
    (FunctionalPanel::from_coefs("x", basis.clone(), index, coefs).unwrap(), basis)
}

fn arb_panel() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (12usize..40).prop_flat_map(|n| (Just(n), proptest::collection::vec(-2.0..2.0f64, n * K)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scores_have_eigenvalue_variance_and_no_correlation(
        (n, values) in arb_panel(),
        delta in 0.5..0.999f64,
    ) {
        let (p, basis) = panel(n, &values);
        let f = fit_fpca(&p.center().unwrap(), &basis, delta).unwrap();
        let s = f.scores();
        let nf = n as f64;
        for a in 0..s.ncols() {
            let ca = s.column(a);
            let mean = ca.sum() / nf;
            let var = ca.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let lambda = f.eigenvalues()[a];
            prop_assert!((var - lambda).abs() <= 1e-8 * lambda.max(1.0));
            for b in 0..a {
                let cov = ca.dot(&s.column(b)) / (nf - 1.0);
                prop_assert!(cov.abs() <= 1e-8 * f.eigenvalues()[0].max(1.0));
            }
        }
    }

    #[test]
    fn reconstruction_error_tracks_dropped_eigenvalues((n, values) in arb_panel()) {
        let (p, basis) = panel(n, &values);
        let centered = p.center().unwrap();
        let f = fit_fpca(&centered, &basis, 0.999).unwrap();
        let g = basis.gram();
        let c = centered.coefs();
        let phi = f.eigenfunctions();
        // all K scores, ξ = C · G · φᵀ
        let xi = c * &g * phi.transpose();
        let mut previous = f64::INFINITY;
        for l in 0..=K {
            let mut err = 0.0;
            for r in 0..n {
                let mut resid: DVector<f64> = c.row(r).transpose();
                for s in 0..l {
                    resid -= xi[(r, s)] * phi.row(s).transpose();
                }
                err += (resid.transpose() * &g * &resid)[(0, 0)];
            }
            let dropped: f64 = f.eigenvalues()[l..].iter().sum::<f64>() * (n as f64 - 1.0);
            prop_assert!(err <= previous * (1.0 + 1e-12) + 1e-12);
            prop_assert!((err - dropped).abs() <= 1e-8 * (1.0 + dropped), "L={l}: {err} vs {dropped}");
            previous = err;
        }
    }

    #[test]
    fn eigenfunctions_follow_the_sign_rule((n, values) in arb_panel()) {
        let (p, basis) = panel(n, &values);
        let f = fit_fpca(&p.center().unwrap(), &basis, 0.9).unwrap();
        let t_end = basis.domain().t_end();
        for s in 0..K {
            let b = f.eigenfunction(s);
            let integral = basis
                .integrate_coefficient_curve(&b, 0.0, t_end, fdareg::basis::CurveWeight::Constant)
                .unwrap();
            if integral.abs() > 1e-8 {
                prop_assert!(integral > 0.0);
            } else {
                prop_assert!(basis.evaluate_curve(&b, &[0.0]).unwrap()[0] >= -1e-12);
            }
        }
    }
}

#[test]
fn uncentered_panel_is_rejected() {
    let values: Vec<f64> = (0..10 * K).map(|i| (i as f64).sin()).collect();
    let (p, basis) = panel(10, &values);
    assert_eq!(fit_fpca(&p, &basis, 0.9).unwrap_err().kind(), "state");
}
