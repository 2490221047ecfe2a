use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit_affine_l2, SampleSet};
use crate::funcmodel::Field;
use crate::geometry::{parabolic_distance, AffineMap, AxisBox};
use crate::quadrature::box_rule;
use crate::quadrature::QuadratureSpec;
use crate::rng::{self, unit_vector};

/// Points sampled on each parabolic sphere.
pub const PROBE_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentiabilityProbe {
    pub base: Vec<f64>,
    /// Horizontal linear part `A_p`.
    pub linear: AffineMap,
    pub radii: Vec<f64>,
    /// `ε_p(r)`: largest normalized error over sampled `q` with `d(p,q) <= r`.
    pub eps: Vec<f64>,
    /// Least-squares slope of `ln ε` against `ln r`, when all `ε > 0`.
    pub slope: Option<f64>,
}

impl DifferentiabilityProbe {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,eps\n");
        for (r, e) in self.radii.iter().zip(&self.eps) {
            out.push_str(&format!("{r:.12e},{e:.12e}\n"));
        }
        out
    }
}

/// Samples `|ψ(q) - ψ(p) - A_p(y - x)| / d(p,q)` on parabolic spheres around
/// `p = (x, t)`. `A_p` is the gradient of the L2 fit of `y ↦ ψ(y, t)` on the
/// cube of half-side `min(radii)` centred at `x`.
///
/// On each sphere `d(p,q) = r`, points are `(x + θ r u, t ± ((1 - θ) r)^2)`
/// with `θ` stratified over `[0, 1]`, so both purely horizontal and purely
/// vertical displacements are included.
pub fn rademacher_probe<F: Field + ?Sized>(
    psi: &F,
    base: &[f64],
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<DifferentiabilityProbe> {
    let n = base.len();
    if n < 2 || psi.dim() != n {
        return Err(Error::InvalidInput("probe base point must lie in R^{n-1} x R with n >= 2".into()));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("radii must be positive and strictly decreasing".into()));
    }
    let m = n - 1;
    let (x, t) = (&base[..m], base[m]);
    let r_min = *radii.last().unwrap();
    let cube = AxisBox::cube(x.iter().map(|c| c - r_min).collect(), 2.0 * r_min)?;
    let (pts, w) = box_rule(&cube, quad.nodes, quad.rule);
    let slice = SampleSet::from_points(m, pts, w, |y| {
        let mut q = y.to_vec();
        q.push(t);
        psi.value(&q)
    });
    let gradient = fit_affine_l2(&slice)?.map.gradient;
    let linear = AffineMap::new(gradient, 0.0);
    let psi_p = psi.value(base);

    let mut rng = rng::stream(quad.seed, rng::point_key(base), rng::op::PROBE);
    let half = PROBE_SAMPLES / 2;
    let sphere_max: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let mut worst: f64 = 0.0;
            for k in 0..half {
                let theta = k as f64 / (half - 1) as f64;
                let u = unit_vector(&mut rng, m);
                for sign in [1.0, -1.0] {
                    let mut q = base.to_vec();
                    for i in 0..m {
                        q[i] += theta * r * u[i];
                    }
                    q[m] += sign * ((1.0 - theta) * r).powi(2);
                    let d = parabolic_distance(base, &q);
                    if d > 0.0 {
                        let disp: Vec<f64> = (0..m).map(|i| q[i] - x[i]).collect();
                        worst = worst.max((psi.value(&q) - psi_p - linear.eval(&disp)).abs() / d);
                    }
                }
            }
            worst
        })
        .collect();
    // Running maximum over the smaller radii.
    let mut eps = sphere_max.clone();
    for i in (0..eps.len().saturating_sub(1)).rev() {
        eps[i] = eps[i].max(eps[i + 1]);
    }
    let slope = if eps.len() >= 2 && eps.iter().all(|e| *e > 0.0) {
        let pts: Vec<(f64, f64)> = radii.iter().zip(&eps).map(|(r, e)| (r.ln(), e.ln())).collect();
        let k = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(DifferentiabilityProbe { base: base.to_vec(), linear, radii: radii.to_vec(), eps, slope })
}
