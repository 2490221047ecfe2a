use proptest::prelude::*;

use multibeta::funcmodel::{lipschitz_estimate, FunctionField, Metric};
use multibeta::geometry::{parabolic_distance, AxisBox};

fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-1.0..2.0f64, n), prop::collection::vec(-0.3..0.3f64, n))
        .prop_map(|(x, h)| (x.clone(), x.iter().zip(&h).map(|(a, b)| a + b).collect()))
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn catalog_respects_declared_lipschitz(n in 1usize..=3, k in 0usize..7, pairs in prop::collection::vec(pair(3), 32)) {
        let (name, f) = FunctionField::catalog(n).swap_remove(k);
        let Some(lip) = f.declared_lipschitz() else { return Ok(()) };
        for (x, y) in &pairs {
            let (x, y) = (&x[..n], &y[..n]);
            let q = (f.value(x) - f.value(y)).abs();
            prop_assert!(q <= lip * dist(x, y) * (1.0 + 1e-9) + 1e-15, "{}: quotient above {}", name, lip);
        }
    }

    #[test]
    fn parabolic_catalog_respects_declared_constant(n in 2usize..=3, k in 0usize..6, (p, q) in pair(3)) {
        let (name, psi) = FunctionField::parabolic_catalog(n).swap_remove(k);
        let Some(lip) = psi.declared_parabolic_lipschitz() else { return Ok(()) };
        let (p, q) = (&p[3 - n..], &q[3 - n..]);
        let diff = (psi.value(p) - psi.value(q)).abs();
        prop_assert!(diff <= lip * parabolic_distance(p, q) * (1.0 + 1e-9) + 1e-15, "{}", name);
    }
}

#[test]
fn sampled_estimates_never_exceed_declared_constants() {
    for n in 1..=3 {
        let region = AxisBox::cube(vec![-0.5; n], 2.0).unwrap();
        for (name, f) in FunctionField::catalog(n) {
            if let Some(l) = f.declared_lipschitz() {
                let est = lipschitz_estimate(&f, &region, 4096, 3, Metric::Euclidean);
                assert!(est <= l * (1.0 + 1e-9), "{name} n={n}: {est} > {l}");
            }
        }
    }
    for n in 2..=3 {
        let region = AxisBox::cube(vec![-1.0; n], 2.0).unwrap();
        for (name, psi) in FunctionField::parabolic_catalog(n) {
            if let Some(l) = psi.declared_parabolic_lipschitz() {
                let est = lipschitz_estimate(&psi, &region, 4096, 3, Metric::Parabolic);
                assert!(est <= l * (1.0 + 1e-9), "{name} n={n}: {est} > {l}");
            }
        }
    }
}
