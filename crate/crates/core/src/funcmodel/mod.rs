//! Evaluable scalar fields: an analytic catalog plus multilinearly
//! interpolated grids. Fields on parabolic space `R^{n-1} x R` are ordinary
//! `n`-dimensional fields whose last coordinate is time.

mod grid;
mod lipschitz;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AxisBox;
use crate::linalg::{dot, norm, sub};

pub use grid::GridField;
pub use lipschitz::{lipschitz_estimate, Metric};

/// Anything that can be sampled by the coefficient routines.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    /// Unchecked evaluation.
    fn value(&self, x: &[f64]) -> f64;
    /// Fails when `region` is not inside the domain of the field.
    fn check_region(&self, region: &AxisBox) -> Result<()> {
        if region.dim() == self.dim() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "region has dimension {}, field has dimension {}",
                region.dim(),
                self.dim()
            )))
        }
    }
}

/// Closure-backed field, defined everywhere.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl Field for FunctionField {
    fn dim(&self) -> usize {
        FunctionField::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        FunctionField::value(self, x)
    }

    fn check_region(&self, region: &AxisBox) -> Result<()> {
        FunctionField::check_region(self, region)
    }
}

/// Time-dependent term `h(t)` of a separable parabolic field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeTerm {
    Zero,
    /// `amplitude * sin(t)`
    Sin {
        amplitude: f64,
    },
    /// `rate * t`
    Linear {
        rate: f64,
    },
}

impl TimeTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeTerm::Zero => 0.0,
            TimeTerm::Sin { amplitude } => amplitude * t.sin(),
            TimeTerm::Linear { rate } => rate * t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionField {
    /// `gradient . x + intercept`
    Affine {
        gradient: Vec<f64>,
        intercept: f64,
    },
    /// Ridge `g(x . direction)` with `g` continuous piecewise linear:
    /// `g(s) = intercept + slopes[0] s + Σ_k (slopes[k+1] - slopes[k]) (s - breakpoints[k])_+`.
    PiecewiseLinear {
        direction: Vec<f64>,
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        intercept: f64,
    },
    /// `scale * |x - center|`
    Cone {
        center: Vec<f64>,
        scale: f64,
    },
    /// Distance to a finite point set.
    DistanceToSet {
        points: Vec<Vec<f64>>,
    },
    /// `height * exp(1 - 1 / (1 - (r/radius)^2))` for `r < radius`, else 0.
    Bump {
        center: Vec<f64>,
        radius: f64,
        height: f64,
    },
    /// `|x|^2`
    Square {
        dim: usize,
    },
    /// `g(x) + h(t)` on `R^{n-1} x R`.
    Separable {
        space: Box<FunctionField>,
        time: TimeTerm,
    },
    /// `(a0 + a1 sin t) . x + b0 + b1 cos t` on `R^{n-1} x R`.
    Product {
        a0: Vec<f64>,
        a1: Vec<f64>,
        b0: f64,
        b1: f64,
    },
    Grid(GridField),
}

impl FunctionField {
    pub fn affine(gradient: Vec<f64>, intercept: f64) -> Self {
        Self::Affine { gradient, intercept }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::affine(vec![0.0; dim], c)
    }

    pub fn cone(center: Vec<f64>) -> Self {
        Self::Cone { center, scale: 1.0 }
    }

    /// `|x_axis - at|` in `R^dim`.
    pub fn ridge_kink(dim: usize, axis: usize, at: f64) -> Self {
        let mut direction = vec![0.0; dim];
        direction[axis] = 1.0;
        Self::PiecewiseLinear { direction, breakpoints: vec![at], slopes: vec![-1.0, 1.0], intercept: at }
    }

    /// Ridge along a random unit direction with `breakpoints` kinks spread
    /// over the projection of `[0, 1]^dim` and slopes uniform in `[-1, 1]`.
    pub fn random_ridge(dim: usize, breakpoints: usize, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, breakpoints as u64, crate::rng::op::CATALOG);
        let direction = crate::rng::unit_vector(&mut rng, dim);
        let lo: f64 = direction.iter().map(|d| d.min(0.0)).sum();
        let hi: f64 = direction.iter().map(|d| d.max(0.0)).sum();
        let mut cuts: Vec<f64> = (0..breakpoints).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        let slopes = (0..=breakpoints).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::PiecewiseLinear { direction, breakpoints: cuts, slopes, intercept: 0.0 }
    }

    /// Named spatial catalog entries in `R^dim`, singular points placed
    /// inside `[0, 1]^dim`.
    pub fn catalog(dim: usize) -> Vec<(&'static str, FunctionField)> {
        let third = vec![1.0 / 3.0; dim];
        let half = vec![0.5; dim];
        let gradient: Vec<f64> = (0..dim).map(|i| 1.0 - 0.5 * i as f64).collect();
        let mut far = half.clone();
        far[0] = 0.9;
        vec![
            ("affine", Self::affine(gradient, 0.25)),
            ("kink", Self::ridge_kink(dim, 0, 1.0 / 3.0)),
            ("piecewise_linear", Self::random_ridge(dim, 4, 7)),
            ("cone", Self::cone(third.clone())),
            ("distance_to_set", Self::DistanceToSet { points: vec![third, far] }),
            ("bump", Self::bump(half, 0.5, 0.25)),
            ("square", Self::Square { dim }),
        ]
    }

    /// Named parabolic catalog entries on `R^{dim-1} x R`.
    pub fn parabolic_catalog(dim: usize) -> Vec<(&'static str, FunctionField)> {
        let m = dim - 1;
        let gradient: Vec<f64> = (0..m).map(|i| 1.0 - 0.5 * i as f64).collect();
        let sin = TimeTerm::Sin { amplitude: 1.0 };
        vec![
            ("affine_space", Self::separable(Self::affine(gradient.clone(), 0.5), TimeTerm::Zero)),
            ("cone_sin", Self::separable(Self::cone(vec![0.0; m]), sin)),
            ("square_sin", Self::separable(Self::Square { dim: m }, sin)),
            ("kink_linear", Self::separable(Self::ridge_kink(m, 0, 0.25), TimeTerm::Linear { rate: 1.0 })),
            ("bump_sin", Self::separable(Self::bump(vec![0.0; m], 0.75, 0.5), TimeTerm::Sin { amplitude: 0.5 })),
            ("product", Self::Product { a0: gradient, a1: vec![0.5; m], b0: 0.1, b1: 0.3 }),
        ]
    }

    pub fn bump(center: Vec<f64>, radius: f64, height: f64) -> Self {
        Self::Bump { center, radius, height }
    }

    pub fn separable(space: FunctionField, time: TimeTerm) -> Self {
        Self::Separable { space: Box::new(space), time }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Affine { gradient, .. } => gradient.len(),
            Self::PiecewiseLinear { direction, .. } => direction.len(),
            Self::Cone { center, .. } | Self::Bump { center, .. } => center.len(),
            Self::DistanceToSet { points } => points.first().map_or(0, |p| p.len()),
            Self::Square { dim } => *dim,
            Self::Separable { space, .. } => space.dim() + 1,
            Self::Product { a0, .. } => a0.len() + 1,
            Self::Grid(g) => g.dim(),
        }
    }

    /// Checks parameters for internal consistency.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        match self {
            Self::PiecewiseLinear { breakpoints, slopes, direction, .. } => {
                if slopes.len() != breakpoints.len() + 1 {
                    return bad("piecewise-linear field needs one more slope than breakpoints");
                }
                if breakpoints.windows(2).any(|w| w[0] > w[1]) {
                    return bad("breakpoints must be sorted");
                }
                if direction.is_empty() {
                    return bad("direction must be nonempty");
                }
            }
            Self::DistanceToSet { points } => {
                if points.is_empty() || points.iter().any(|p| p.len() != points[0].len()) {
                    return bad("point set must be nonempty with equal dimensions");
                }
            }
            Self::Bump { radius, .. } if !(*radius > 0.0) => return bad("bump radius must be positive"),
            Self::Separable { space, .. } => space.validate()?,
            Self::Product { a0, a1, .. } if a0.len() != a1.len() => {
                return bad("product field coefficients a0 and a1 differ in length")
            }
            _ => {}
        }
        if self.dim() == 0 {
            return bad("field dimension must be at least 1");
        }
        Ok(())
    }

    /// Checked evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, field has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if let Self::Grid(g) = self {
            return g.eval(x);
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; grids clamp to their hull. Callers validate
    /// regions with [`FunctionField::check_region`] first.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Affine { gradient, intercept } => dot(gradient, x) + intercept,
            Self::PiecewiseLinear { direction, breakpoints, slopes, intercept } => {
                let s = dot(direction, x);
                let mut g = intercept + slopes[0] * s;
                for (k, b) in breakpoints.iter().enumerate() {
                    g += (slopes[k + 1] - slopes[k]) * (s - b).max(0.0);
                }
                g
            }
            Self::Cone { center, scale } => scale * norm(&sub(x, center)),
            Self::DistanceToSet { points } => points.iter().map(|p| norm(&sub(x, p))).fold(f64::INFINITY, f64::min),
            Self::Bump { center, radius, height } => {
                let r2 = sub(x, center).iter().map(|c| c * c).sum::<f64>() / (radius * radius);
                if r2 < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            Self::Square { .. } => x.iter().map(|c| c * c).sum(),
            Self::Separable { space, time } => {
                let m = x.len() - 1;
                space.value(&x[..m]) + time.eval(x[m])
            }
            Self::Product { a0, a1, b0, b1 } => {
                let m = x.len() - 1;
                let t = x[m];
                let (s, c) = t.sin_cos();
                a0.iter().zip(a1).zip(&x[..m]).map(|((p, q), xi)| (p + q * s) * xi).sum::<f64>() + b0 + b1 * c
            }
            Self::Grid(g) => g.value(x),
        }
    }

    /// Fails with `OutOfDomain` when `region` leaves the field's domain.
    pub fn check_region(&self, region: &AxisBox) -> Result<()> {
        if region.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "region has dimension {}, field has dimension {}",
                region.dim(),
                self.dim()
            )));
        }
        match self {
            Self::Grid(g) => g.check_region(region),
            _ => Ok(()),
        }
    }

    /// True when the field is affine (in all variables).
    pub fn is_affine(&self) -> bool {
        matches!(self, Self::Affine { .. })
    }

    /// Global Euclidean Lipschitz constant, when known in closed form.
    pub fn declared_lipschitz(&self) -> Option<f64> {
        match self {
            Self::Affine { gradient, .. } => Some(norm(gradient)),
            Self::PiecewiseLinear { direction, slopes, .. } => {
                Some(slopes.iter().fold(0.0f64, |m, s| m.max(s.abs())) * norm(direction))
            }
            Self::Cone { scale, .. } => Some(scale.abs()),
            Self::DistanceToSet { .. } => Some(1.0),
            Self::Bump { radius, height, .. } => Some(bump_slope_bound(*radius, *height)),
            Self::Square { .. } | Self::Product { .. } => None,
            Self::Separable { space, time } => {
                let lt = match time {
                    TimeTerm::Zero => 0.0,
                    TimeTerm::Sin { amplitude } => amplitude.abs(),
                    TimeTerm::Linear { rate } => rate.abs(),
                };
                space.declared_lipschitz().map(|ls| (ls * ls + lt * lt).sqrt())
            }
            Self::Grid(g) => Some(g.lattice_lipschitz()),
        }
    }

    /// Constant `K` with `|ψ(p) - ψ(q)| <= K d(p, q)` in the parabolic metric,
    /// when known in closed form.
    ///
    /// `sin` terms: `|sin t - sin s| <= min(|t - s|, 2) <= √2 |t - s|^{1/2}`.
    /// Linear time terms are not Lipschitz in `d` globally.
    pub fn declared_parabolic_lipschitz(&self) -> Option<f64> {
        match self {
            Self::Separable { space, time } => {
                let ls = space.declared_lipschitz()?;
                let lt = match time {
                    TimeTerm::Zero => 0.0,
                    TimeTerm::Sin { amplitude } => amplitude.abs() * std::f64::consts::SQRT_2,
                    TimeTerm::Linear { .. } => return None,
                };
                Some(ls.max(lt))
            }
            Self::Affine { gradient, .. } => {
                let m = gradient.len() - 1;
                (gradient[m] == 0.0).then(|| norm(&gradient[..m]))
            }
            _ => None,
        }
    }

    /// Upper bound on the squared time difference quotient
    /// `|ψ(x,t) - ψ(x,s)|^2 / |t - s|^2`, when known.
    ///
    /// Bounds the normalized time-derivative Carleson integral by the same
    /// constant: zero for time-independent terms, `amplitude^2` for `sin`,
    /// exactly `rate^2` for linear terms.
    pub fn dt_quotient_bound(&self) -> Option<f64> {
        match self {
            Self::Separable { time, .. } => Some(match time {
                TimeTerm::Zero => 0.0,
                TimeTerm::Sin { amplitude } => amplitude * amplitude,
                TimeTerm::Linear { rate } => rate * rate,
            }),
            Self::Affine { gradient, .. } => Some(gradient.last().map_or(0.0, |g| g * g)),
            _ => None,
        }
    }
}

/// Upper bound for `|φ'|` of the bump profile, from a dense scan of
/// `r ↦ φ'(r)` plus a margin that dominates the scan's discretization error.
fn bump_slope_bound(radius: f64, height: f64) -> f64 {
    let steps = 20_000;
    let max = (1..steps)
        .map(|k| {
            let u = k as f64 / steps as f64;
            let q = 1.0 - u * u;
            let phi = (1.0 - 1.0 / q).exp();
            phi * 2.0 * u / (q * q)
        })
        .fold(0.0f64, f64::max);
    max * (1.0 + 1e-3) * height.abs() / radius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_examples() {
        let a = FunctionField::affine(vec![2.0, 3.0], 1.0);
        assert_eq!(a.eval(&[1.0, 1.0]).unwrap(), 6.0);
        assert_eq!(FunctionField::cone(vec![0.0, 0.0]).eval(&[0.0, 0.0]).unwrap(), 0.0);
        let k = FunctionField::ridge_kink(2, 0, 0.5);
        assert_eq!(k.value(&[0.0, 9.0]), 0.5);
        assert_eq!(k.value(&[1.25, 9.0]), 0.75);
        assert_eq!(k.declared_lipschitz(), Some(1.0));
    }

    #[test]
    fn parabolic_entries() {
        let psi = FunctionField::separable(FunctionField::Square { dim: 1 }, TimeTerm::Sin { amplitude: 1.0 });
        assert_eq!(psi.dim(), 2);
        assert!((psi.value(&[2.0, 0.5]) - (4.0 + 0.5f64.sin())).abs() < 1e-15);
        let prod = FunctionField::Product { a0: vec![1.0], a1: vec![2.0], b0: 0.5, b1: 1.0 };
        let t: f64 = 0.3;
        assert!((prod.value(&[2.0, t]) - ((1.0 + 2.0 * t.sin()) * 2.0 + 0.5 + t.cos())).abs() < 1e-15);
    }

    #[test]
    fn bump_bound_dominates_derivative() {
        let b = FunctionField::bump(vec![0.0], 0.5, 1.0);
        let l = b.declared_lipschitz().unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for k in 0..5000 {
            let x = -0.6 + 1.2 * k as f64 / 5000.0;
            worst = worst.max((b.value(&[x + h]) - b.value(&[x])).abs() / h);
        }
        assert!(worst <= l);
        assert!(worst > 0.99 * l / (1.0 + 1e-3));
    }

    #[test]
    fn validation_catches_bad_parameters() {
        let f = FunctionField::PiecewiseLinear {
            direction: vec![1.0],
            breakpoints: vec![0.0],
            slopes: vec![1.0],
            intercept: 0.0,
        };
        assert!(f.validate().is_err());
        assert!(FunctionField::DistanceToSet { points: vec![] }.validate().is_err());
    }
}
