use proptest::prelude::*;

use multibeta::funcmodel::FunctionField;
use multibeta::geometry::AxisBox;
use multibeta::quadrature::QuadratureSpec;
use multibeta::reconstruct::{verify_form1, ReconstructParams};

fn field(n: usize, k: usize, seed: u64) -> FunctionField {
    let half = vec![0.5; n];
    match k {
        0 => FunctionField::cone(half),
        1 => FunctionField::bump(half, 0.5, 0.25),
        2 => FunctionField::ridge_kink(n, 0, 0.5),
        _ => FunctionField::random_ridge(n, 4, seed),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reconstruction_invariants(n in 2usize..=3, k in 0usize..4, seed in 1u64..50, corner in prop::collection::vec(-1.0..1.0f64, 3), side in 0.3..2.0f64) {
        let f = field(n, k, seed);
        let region = AxisBox::cube(corner[..n].to_vec(), side).unwrap();
        let params = ReconstructParams { seed, ..ReconstructParams::default() };
        let quad = QuadratureSpec::default();
        let r = verify_form1(&f, &region, &params, &quad).unwrap();

        // Corner values in original coordinates.
        let scale = side;
        let err = r.selection.corners.iter().map(|y| {
            let x: Vec<f64> = y.iter().zip(&region.min).map(|(a, m)| m + scale * a).collect();
            (r.map.eval(&x) - f.value(&x)).abs()
        }).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * (1.0 + scale), "corner error {}", err);
        prop_assert!(r.corner_error <= 1e-12 * (1.0 + scale));

        prop_assert!(r.beta2_small <= r.beta2_via_map + 1e-12);

        // At each corner the global map agrees with f, so its gap to a face
        // fit equals the face fit's mismatch there.
        for m in &r.selection.mismatches {
            let y = &r.selection.corners[m.corner];
            let x: Vec<f64> = y.iter().zip(&region.min).map(|(a, mn)| mn + scale * a).collect();
            let lhs = (r.map.eval(&x) / scale - r.selection.plane_value(m.plane, y)).abs();
            prop_assert!(lhs <= m.value + 1e-12, "corner {} plane {}: {} > {}", m.corner, m.plane, lhs, m.value);
        }

        let again = verify_form1(&f, &region, &params, &quad).unwrap();
        prop_assert_eq!(r.csv_row(), again.csv_row());
    }
}
