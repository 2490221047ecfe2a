use proptest::prelude::*;

use multibeta::funcmodel::FunctionField;
use multibeta::geometry::ParabolicBox;
use multibeta::parabolic::{
    combine_affine_bound, horizontal_affinity, parabolic_beta2, parabolic_beta2_fit, parabolic_beta_inf,
};
use multibeta::quadrature::QuadratureSpec;

fn pbox(n: usize) -> impl Strategy<Value = ParabolicBox> {
    (prop::collection::vec(-1.0..0.8f64, n - 1), 0.02..0.9f64, 0.0..2.0f64)
        .prop_map(|(x, side, t0)| ParabolicBox::new(x, side, t0).unwrap())
}

fn case() -> impl Strategy<Value = (usize, ParabolicBox)> {
    (2usize..=3, 0usize..6).prop_flat_map(|(n, k)| (Just(k), pbox(n)))
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default().with_nodes(9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn combination_certificate_holds((k, b) in case()) {
        let (name, psi) = FunctionField::parabolic_catalog(b.dim()).swap_remove(k);
        let c = combine_affine_bound(&psi, &b, &quad(), None).unwrap();
        prop_assert!(c.residual_sq <= 6.0 * c.horizontal + 4.0 * c.vertical + 1e-10, "{}", name);
        prop_assert!(c.holds);
        let beta = parabolic_beta2(&psi, &b, &quad(), None).unwrap();
        prop_assert!(beta <= c.normalized + 1e-12, "{}: {} > {}", name, beta, c.normalized);
    }

    #[test]
    fn restriction_only_increases((k, b) in case(), frac in 0.05..1.0f64) {
        let (_, psi) = FunctionField::parabolic_catalog(b.dim()).swap_remove(k);
        let q = quad();
        let (free, map) = parabolic_beta2_fit(&psi, &b, &q, None).unwrap();
        let slope = map.lipschitz();
        let tight = parabolic_beta2(&psi, &b, &q, Some(frac * slope + 1e-9)).unwrap();
        prop_assert!(free <= tight + 1e-12);
        let feasible = parabolic_beta2(&psi, &b, &q, Some(slope + 1e-6)).unwrap();
        prop_assert!((feasible - free).abs() <= 1e-10);
        let a_free = horizontal_affinity(&psi, &b, &q, None).unwrap();
        let a_tight = horizontal_affinity(&psi, &b, &q, Some(frac * slope + 1e-9)).unwrap();
        prop_assert!(a_free <= a_tight + 1e-12);
        prop_assert!((horizontal_affinity(&psi, &b, &q, Some(1e6)).unwrap() - a_free).abs() <= 1e-10);
    }

    #[test]
    fn sup_coefficient_bounded_by_parabolic_constant((k, b) in case()) {
        let (name, psi) = FunctionField::parabolic_catalog(b.dim()).swap_remove(k);
        let Some(lip) = psi.declared_parabolic_lipschitz() else { return Ok(()) };
        let v = parabolic_beta_inf(&psi, &b, &quad(), None).unwrap();
        prop_assert!(v <= lip * (1.0 + 1e-9), "{}: {} > {}", name, v, lip);
    }
}
