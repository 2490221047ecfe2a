use proptest::prelude::*;

use multibeta::fitting::{
    fit_affine_l2, fit_affine_l2_constrained, fit_affine_lp, fit_affine_minimax, objective, FitNorm, SampleSet,
};
use multibeta::geometry::AffineMap;

/// Random weighted samples in dimension 1 to 3 with enough points to pin
/// down an affine fit.
fn samples() -> impl Strategy<Value = SampleSet> {
    (1usize..=3).prop_flat_map(|n| {
        let m = 4 * (n + 1);
        (
            Just(n),
            prop::collection::vec(-1.0..1.0f64, n * m),
            prop::collection::vec(-2.0..2.0f64, m),
            prop::collection::vec(0.1..1.0f64, m),
        )
            .prop_map(|(n, pts, vals, w)| SampleSet::from_parts(n, pts, vals, w))
    })
}

fn grad_norm(m: &AffineMap) -> f64 {
    m.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn l2_fit_is_locally_optimal(s in samples()) {
        let fit = fit_affine_l2(&s).unwrap();
        let n = s.dim();
        for k in 0..=n {
            for h in [-1e-4, 1e-4] {
                let mut m = fit.map.clone();
                if k < n { m.gradient[k] += h } else { m.intercept += h }
                let perturbed = objective(&s, &m, FitNorm::L2);
                prop_assert!(perturbed >= fit.objective * (1.0 - 1e-12), "coordinate {}: {} < {}", k, perturbed, fit.objective);
            }
        }
    }

    #[test]
    fn constrained_residual_nonincreasing_in_bound(s in samples()) {
        let free = fit_affine_l2(&s).unwrap();
        let slope = grad_norm(&free.map);
        let mut previous = f64::INFINITY;
        for k in 1..=10 {
            let fit = fit_affine_l2_constrained(&s, slope * k as f64 / 10.0 + 1e-12).unwrap();
            prop_assert!(grad_norm(&fit.map) <= slope * k as f64 / 10.0 + 1e-9);
            prop_assert!(fit.objective <= previous * (1.0 + 1e-12) + 1e-15);
            prop_assert!(fit.objective >= free.objective * (1.0 - 1e-12));
            previous = fit.objective;
        }
        let loose = fit_affine_l2_constrained(&s, slope * 1.5 + 1e-9).unwrap();
        prop_assert!((loose.objective - free.objective).abs() <= 1e-12 * (1.0 + free.objective));
    }

    #[test]
    fn minimax_dominates_root_mean_square(s in samples()) {
        let sup = fit_affine_minimax(&s, None).unwrap();
        let l2 = fit_affine_l2(&s).unwrap();
        prop_assert!(sup.objective >= l2.objective.sqrt() - 1e-12);
        // The L2 map is a feasible minimax candidate.
        prop_assert!(sup.objective <= objective(&s, &l2.map, FitNorm::Linf) + 1e-12);
    }

    #[test]
    fn fits_are_translation_equivariant(s in samples(), shift in prop::collection::vec(-3.0..3.0f64, 3)) {
        let v = &shift[..s.dim()];
        let moved = s.translated(v);
        let check_map = |a: &AffineMap, b: &AffineMap| -> Result<(), TestCaseError> {
            for (ga, gb) in a.gradient.iter().zip(&b.gradient) {
                prop_assert!((ga - gb).abs() <= 1e-9);
            }
            let shifted = a.intercept - a.gradient.iter().zip(v).map(|(g, x)| g * x).sum::<f64>();
            prop_assert!((b.intercept - shifted).abs() <= 1e-9);
            Ok(())
        };
        let (a, b) = (fit_affine_l2(&s).unwrap(), fit_affine_l2(&moved).unwrap());
        prop_assert!((a.objective - b.objective).abs() <= 1e-9);
        check_map(&a.map, &b.map)?;
        let bound = 0.5 * grad_norm(&a.map) + 1e-6;
        let (a, b) = (fit_affine_l2_constrained(&s, bound).unwrap(), fit_affine_l2_constrained(&moved, bound).unwrap());
        prop_assert!((a.objective - b.objective).abs() <= 1e-9);
        check_map(&a.map, &b.map)?;
        let (a, b) = (fit_affine_lp(&s, 3.0).unwrap(), fit_affine_lp(&moved, 3.0).unwrap());
        prop_assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective));
        let (a, b) = (fit_affine_minimax(&s, None).unwrap(), fit_affine_minimax(&moved, None).unwrap());
        prop_assert!((a.objective - b.objective).abs() <= 1e-9);
    }
}
