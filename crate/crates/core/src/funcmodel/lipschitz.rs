use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Field;
use crate::geometry::{parabolic_distance, AxisBox};
use crate::linalg::{norm, sub};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `|x - y| + |s - t|^{1/2}`, last coordinate is time.
    Parabolic,
}

impl Metric {
    pub fn distance(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => norm(&sub(p, q)),
            Metric::Parabolic => parabolic_distance(p, q),
        }
    }
}

/// Largest difference quotient over `samples` random pairs in `region` and
/// over adjacent nodes of a lattice with about `samples` nodes.
pub fn lipschitz_estimate<F: Field + ?Sized>(
    field: &F,
    region: &AxisBox,
    samples: usize,
    seed: u64,
    metric: Metric,
) -> f64 {
    let n = region.dim();
    let mut rng = rng::stream(seed, rng::point_key(&region.min), rng::op::LIPSCHITZ);
    let mut best: f64 = 0.0;
    let mut quotient = |p: &[f64], q: &[f64]| {
        let d = metric.distance(p, q);
        if d > 0.0 {
            best = best.max((field.value(p) - field.value(q)).abs() / d);
        }
    };
    let draw = |rng: &mut rng::StreamRng| -> Vec<f64> {
        region.min.iter().zip(&region.sides).map(|(m, s)| m + s * rng.random::<f64>()).collect()
    };
    for _ in 0..samples.max(2) {
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        quotient(&p, &q);
    }
    let k = ((samples.max(2) as f64).powf(1.0 / n as f64).floor() as usize).max(2);
    let total = k.pow(n as u32);
    let node = |flat: usize| -> Vec<f64> {
        let mut f = flat;
        let mut x = vec![0.0; n];
        for a in (0..n).rev() {
            let i = f % k;
            f /= k;
            x[a] = region.min[a] + region.sides[a] * i as f64 / (k - 1) as f64;
        }
        x
    };
    for flat in 0..total {
        let p = node(flat);
        let mut stride = 1;
        for _ in 0..n {
            if (flat / stride) % k + 1 < k {
                quotient(&p, &node(flat + stride));
            }
            stride *= k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::FunctionField;

    #[test]
    fn affine_gradient_norm() {
        let f = FunctionField::affine(vec![2.0, 3.0], 1.0);
        let b = AxisBox::symmetric(2, -1.0, 1.0).unwrap();
        let l = lipschitz_estimate(&f, &b, 4000, 1, Metric::Euclidean);
        assert!((l - 13f64.sqrt()).abs() <= 0.02 * 13f64.sqrt());
        assert!(l <= 13f64.sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn cone_has_unit_slope() {
        for n in 1..=3 {
            let f = FunctionField::cone(vec![0.0; n]);
            let b = AxisBox::symmetric(n, -1.0, 1.0).unwrap();
            let l = lipschitz_estimate(&f, &b, 4000, 2, Metric::Euclidean);
            assert!((l - 1.0).abs() <= 0.02, "n={n}: {l}");
        }
    }

    #[test]
    fn constant_is_zero() {
        let f = FunctionField::constant(2, 4.0);
        let b = AxisBox::symmetric(2, 0.0, 1.0).unwrap();
        assert_eq!(lipschitz_estimate(&f, &b, 100, 3, Metric::Euclidean), 0.0);
    }
}
