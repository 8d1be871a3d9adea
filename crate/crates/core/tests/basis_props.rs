mod common;

use common::simpson;
use fdareg::basis::{BasisSystem, CurveWeight, SeasonDomain};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn arb_basis() -> impl Strategy<Value = BasisSystem> {
    let t_end = 30.0..365.0f64;
    prop_oneof![
        (t_end.clone(), 0usize..8).prop_map(|(t, k)| {
            BasisSystem::fourier(SeasonDomain::new(t, "t").unwrap(), 2 * k + 1).unwrap()
        }),
        (t_end.clone(), 2usize..6, 0usize..14).prop_map(|(t, order, extra)| {
            BasisSystem::bspline(SeasonDomain::new(t, "t").unwrap(), order, order + extra).unwrap()
        }),
        (t_end, proptest::collection::vec(0.05..1.0f64, 1..12), any::<bool>()).prop_map(
            |(t, gaps, short)| {
                let span = if short { 0.8 * t } else { t };
                let total: f64 = gaps.iter().sum();
                let mut nodes = vec![0.0];
                let mut acc = 0.0;
                for g in &gaps {
                    acc += g;
                    nodes.push((span * acc / total).min(span));
                }
                nodes.dedup();
                BasisSystem::polygonal(SeasonDomain::new(t, "t").unwrap(), nodes).unwrap()
            }
        ),
    ]
}

fn segments(basis: &BasisSystem) -> Vec<f64> {
    let mut pts = basis.breakpoints();
    pts.push(0.0);
    pts.push(basis.domain().t_end());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// `∫ f` by Simpson on each smooth piece of the basis.
fn piecewise_simpson(basis: &BasisSystem, f: impl Fn(f64) -> f64) -> f64 {
    let pts = segments(basis);
    let per = (20_000 / (pts.len() - 1)).max(400) & !1;
    pts.windows(2).map(|w| simpson(&f, w[0], w[1], per)).sum()
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gram_is_symmetric_positive_definite(basis in arb_basis()) {
        let g = basis.gram();
        let asym = (&g - g.transpose()).amax();
        prop_assert!(asym <= 1e-12 * g.amax());
        let min = SymmetricEigen::new(g.clone()).eigenvalues.min();
        prop_assert!(min > 0.0, "smallest eigenvalue {min}");
    }

    #[test]
    fn gram_matches_fine_grid_products(
        (basis, a, b) in arb_basis().prop_flat_map(|b| {
            let n = b.nbasis();
            (Just(b), coeffs(n), coeffs(n))
        })
    ) {
        let g = basis.gram();
        let quad = (nalgebra::DVector::from_vec(a.clone()).transpose()
            * &g
            * nalgebra::DVector::from_vec(b.clone()))[(0, 0)];
        let brute = piecewise_simpson(&basis, |t| {
            let fa = basis.evaluate_curve(&a, &[t]).unwrap()[0];
            let fb = basis.evaluate_curve(&b, &[t]).unwrap()[0];
            fa * fb
        });
        prop_assert!((quad - brute).abs() <= 1e-8 * (1.0 + brute.abs()), "{quad} vs {brute}");
    }

    #[test]
    fn integral_is_linear_and_additive(
        (basis, a, b, s, u, v) in arb_basis().prop_flat_map(|b| {
            let n = b.nbasis();
            (Just(b), coeffs(n), coeffs(n), -3.0..3.0f64, 0.0..1.0f64, 0.0..1.0f64)
        })
    ) {
        let t_end = basis.domain().t_end();
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let (t0, t2) = (lo * t_end * 0.5, t_end * (0.5 + 0.5 * hi));
        let t1 = 0.5 * (t0 + t2);
        let comb: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + y).collect();
        for w in [CurveWeight::Constant] {
            let ia = basis.integrate_coefficient_curve(&a, t0, t2, w).unwrap();
            let ib = basis.integrate_coefficient_curve(&b, t0, t2, w).unwrap();
            let ic = basis.integrate_coefficient_curve(&comb, t0, t2, w).unwrap();
            prop_assert!((ic - (s * ia + ib)).abs() <= 1e-10 * (1.0 + ic.abs()));
            let left = basis.integrate_coefficient_curve(&a, t0, t1, w).unwrap();
            let right = basis.integrate_coefficient_curve(&a, t1, t2, w).unwrap();
            prop_assert!((left + right - ia).abs() <= 1e-10 * (1.0 + ia.abs()));
        }
        let ra = basis.integrate_coefficient_curve(&a, t0, t2, CurveWeight::Ramp).unwrap();
        let rc = basis.integrate_coefficient_curve(&comb, t0, t2, CurveWeight::Ramp).unwrap();
        let rb = basis.integrate_coefficient_curve(&b, t0, t2, CurveWeight::Ramp).unwrap();
        prop_assert!((rc - (s * ra + rb)).abs() <= 1e-10 * (1.0 + rc.abs()));
    }

    #[test]
    fn polygonal_nodes_give_unit_rows(
        t_end in 30.0..365.0f64,
        gaps in proptest::collection::vec(0.1..1.0f64, 1..15),
    ) {
        let total: f64 = gaps.iter().sum();
        let mut nodes = vec![0.0];
        let mut acc = 0.0;
        for g in &gaps {
            acc += g;
            nodes.push(t_end * (acc / total).min(1.0));
        }
        let basis = BasisSystem::polygonal(SeasonDomain::new(t_end, "t").unwrap(), nodes.clone()).unwrap();
        let m = basis.evaluate(&nodes).unwrap();
        for r in 0..nodes.len() {
            for c in 0..nodes.len() {
                prop_assert_eq!(m[(r, c)], if r == c { 1.0 } else { 0.0 });
            }
        }
    }
}
