use proptest::prelude::*;

use multibeta::beta::{beta_p_cube, UNIFORM_BOUND};
use multibeta::funcmodel::{FnField, FunctionField};
use multibeta::geometry::AxisBox;
use multibeta::quadrature::QuadratureSpec;

fn boxes(n: usize) -> impl Strategy<Value = AxisBox> {
    prop::collection::vec((-0.5..1.0f64, 0.02..0.8f64), n)
        .prop_map(|v| AxisBox::new(v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.1).collect()).unwrap())
}

fn case() -> impl Strategy<Value = (usize, AxisBox)> {
    (1usize..=2, 0usize..7).prop_flat_map(|(n, k)| (Just(k), boxes(n)))
}

/// Lipschitz constant of `f` on `region`.
fn local_lipschitz(f: &FunctionField, region: &AxisBox) -> f64 {
    match f {
        FunctionField::Square { .. } => {
            2.0 * region.corners().iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
        }
        other => other.declared_lipschitz().unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_monotone_in_exponent((k, region) in case()) {
        let (_, f) = FunctionField::catalog(region.dim()).swap_remove(k);
        let q = QuadratureSpec::default();
        let ps = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
        let values: Vec<f64> = ps.iter().map(|&p| beta_p_cube(&f, &region, p, &q, None).unwrap().value).collect();
        for w in values.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-9, "{:?}", values);
        }
    }

    #[test]
    fn bounded_by_half_the_lipschitz_constant((k, region) in case()) {
        let (_, f) = FunctionField::catalog(region.dim()).swap_remove(k);
        let lip = local_lipschitz(&f, &region);
        let q = QuadratureSpec::default();
        for p in [1.0, 2.0, f64::INFINITY] {
            let b = beta_p_cube(&f, &region, p, &q, None).unwrap().value;
            prop_assert!(b <= UNIFORM_BOUND * lip * (1.0 + 1e-12) + 1e-15, "p = {}: {} > {} * {}", p, b, UNIFORM_BOUND, lip);
        }
    }

    #[test]
    fn invariant_under_rescaling((k, region) in case(), lambda in 0.05..20.0f64) {
        let (_, f) = FunctionField::catalog(region.dim()).swap_remove(k);
        let n = region.dim();
        let scaled = FnField::new(n, |x: &[f64]| {
            let y: Vec<f64> = x.iter().map(|v| v * lambda).collect();
            f.value(&y) / lambda
        });
        let small = AxisBox::new(region.min.iter().map(|v| v / lambda).collect(), region.sides.iter().map(|v| v / lambda).collect()).unwrap();
        let q = QuadratureSpec::default();
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            let a = beta_p_cube(&f, &region, p, &q, None).unwrap().value;
            let b = beta_p_cube(&scaled, &small, p, &q, None).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9, "p = {}: {} vs {}", p, a, b);
        }
    }
}

#[test]
fn refinement_changes_smooth_beta2_by_under_one_percent() {
    for n in 1..=2 {
        for (name, f) in FunctionField::catalog(n) {
            if !matches!(name, "bump" | "square") {
                continue;
            }
            for region in [AxisBox::cube(vec![0.0; n], 1.0).unwrap(), AxisBox::cube(vec![0.3; n], 0.25).unwrap()] {
                let coarse = beta_p_cube(&f, &region, 2.0, &QuadratureSpec::default(), None).unwrap().value;
                let fine =
                    beta_p_cube(&f, &region, 2.0, &QuadratureSpec::default().with_nodes(33), None).unwrap().value;
                assert!((coarse - fine).abs() <= 0.01 * fine, "{name} n={n}: {coarse} vs {fine}");
            }
        }
    }
}
