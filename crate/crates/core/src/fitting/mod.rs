//! Affine and constant fits over weighted point sets.

mod minimax;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AffineMap;
use crate::linalg::{self, dot, norm};

pub use minimax::fit_affine_minimax;

const RANK_TOL: f64 = 1e-12;

/// One weighted observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample<'a> {
    pub abscissa: &'a [f64],
    pub value: f64,
    pub weight: f64,
}

/// Observations stored column-wise; abscissas are flattened row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    dim: usize,
    points: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl SampleSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Default::default() }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        Self {
            dim,
            points: Vec::with_capacity(dim * cap),
            values: Vec::with_capacity(cap),
            weights: Vec::with_capacity(cap),
        }
    }

    /// Evaluates `f` at flat `points` with the given weights.
    pub fn from_points(dim: usize, points: Vec<f64>, weights: Vec<f64>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values =
            if dim == 0 { weights.iter().map(|_| f(&[])).collect() } else { points.chunks(dim).map(&f).collect() };
        Self { dim, points, values, weights }
    }

    pub fn from_parts(dim: usize, points: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), dim * values.len());
        debug_assert_eq!(values.len(), weights.len());
        Self { dim, points, values, weights }
    }

    pub fn push(&mut self, x: &[f64], value: f64, weight: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.points.extend_from_slice(x);
        self.values.push(value);
        self.weights.push(weight);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = WeightedSample<'_>> + '_ {
        (0..self.len()).map(move |i| WeightedSample {
            abscissa: self.point(i),
            value: self.values[i],
            weight: self.weights[i],
        })
    }

    /// `value - map(abscissa)` for every sample.
    pub fn residuals(&self, map: &AffineMap) -> Vec<f64> {
        (0..self.len()).map(|i| self.values[i] - map.eval(self.point(i))).collect()
    }

    /// Same abscissas, values replaced by `value - map(abscissa)`.
    pub fn minus(&self, map: &AffineMap) -> Self {
        Self { values: self.residuals(map), ..self.clone() }
    }

    /// Same weights and values, abscissas shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> Self {
        let mut points = self.points.clone();
        for chunk in points.chunks_mut(self.dim.max(1)) {
            for (x, s) in chunk.iter_mut().zip(v) {
                *x += s;
            }
        }
        Self { points, ..self.clone() }
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidInput("empty sample set".into()));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("sample weights must be positive".into()));
        }
        Ok(())
    }

    /// Weighted mean abscissa and value.
    fn means(&self) -> (Vec<f64>, f64) {
        let w = self.total_weight();
        let mut xbar = vec![0.0; self.dim];
        let mut ybar = 0.0;
        for s in self.iter() {
            for (m, x) in xbar.iter_mut().zip(s.abscissa) {
                *m += s.weight * x;
            }
            ybar += s.weight * s.value;
        }
        xbar.iter_mut().for_each(|m| *m /= w);
        (xbar, ybar / w)
    }

    /// Weighted covariance matrix of the abscissas and cross-covariance with
    /// the values, both divided by the total weight.
    fn moments(&self, xbar: &[f64], ybar: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let w = self.total_weight();
        let mut s = vec![0.0; d * d];
        let mut c = vec![0.0; d];
        let mut dx = vec![0.0; d];
        for smp in self.iter() {
            for k in 0..d {
                dx[k] = smp.abscissa[k] - xbar[k];
            }
            let dy = smp.value - ybar;
            for j in 0..d {
                c[j] += smp.weight * dx[j] * dy;
                for k in j..d {
                    s[j * d + k] += smp.weight * dx[j] * dx[k];
                }
            }
        }
        for j in 0..d {
            c[j] /= w;
            for k in j..d {
                s[j * d + k] /= w;
                s[k * d + j] = s[j * d + k];
            }
        }
        (s, c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", content = "p", rename_all = "snake_case")]
pub enum FitNorm {
    L2,
    Lp(f64),
    Linf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub map: AffineMap,
    /// `Σ w r^2 / Σ w` for L2, `Σ w |r|^p / Σ w` for Lp, `max |r|` for Linf.
    pub objective: f64,
    pub norm: FitNorm,
    /// Gradient-norm bound, when the fit was constrained.
    pub constraint: Option<f64>,
}

impl AffineFit {
    fn evaluate(samples: &SampleSet, map: AffineMap, norm: FitNorm, constraint: Option<f64>) -> Self {
        let objective = objective(samples, &map, norm);
        Self { map, objective, norm, constraint }
    }
}

/// Fit objective of `map` on `samples` for the given norm.
pub fn objective(samples: &SampleSet, map: &AffineMap, norm: FitNorm) -> f64 {
    let r = samples.residuals(map);
    let w = samples.weights();
    match norm {
        FitNorm::L2 => r.iter().zip(w).map(|(r, w)| w * r * r).sum::<f64>() / samples.total_weight(),
        FitNorm::Lp(p) => r.iter().zip(w).map(|(r, w)| w * r.abs().powf(p)).sum::<f64>() / samples.total_weight(),
        FitNorm::Linf => r.iter().fold(0.0f64, |m, r| m.max(r.abs())),
    }
}

/// Weighted mean and weighted variance.
pub fn fit_constant_l2(samples: &SampleSet) -> (f64, f64) {
    let w = samples.total_weight();
    let mean = samples.iter().map(|s| s.weight * s.value).sum::<f64>() / w;
    let var = samples.iter().map(|s| s.weight * (s.value - mean).powi(2)).sum::<f64>() / w;
    (mean, var)
}

fn solve_centered(s: &[f64], c: &[f64], d: usize) -> Result<Vec<f64>> {
    let max_diag = (0..d).map(|k| s[k * d + k]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return Err(Error::RankDeficient { pivot: 0.0 });
    }
    linalg::solve(s, c, d, RANK_TOL * max_diag).map_err(|p| Error::RankDeficient { pivot: p.0 / max_diag })
}

/// Weighted least-squares affine fit.
pub fn fit_affine_l2(samples: &SampleSet) -> Result<AffineFit> {
    samples.check_nonempty()?;
    let d = samples.dim();
    let (xbar, ybar) = samples.means();
    if d == 0 {
        return Ok(AffineFit::evaluate(samples, AffineMap::constant(0, ybar), FitNorm::L2, None));
    }
    let (s, c) = samples.moments(&xbar, ybar);
    let a = solve_centered(&s, &c, d)?;
    let b = ybar - dot(&a, &xbar);
    let fit = AffineFit::evaluate(samples, AffineMap::new(a, b), FitNorm::L2, None);
    Ok(refine_l2(samples, fit, &s, &xbar))
}

/// One step of iterative refinement: fit the residuals and keep the
/// correction if it lowers the objective.
fn refine_l2(samples: &SampleSet, fit: AffineFit, s: &[f64], xbar: &[f64]) -> AffineFit {
    let d = samples.dim();
    let rest = samples.minus(&fit.map);
    let (_, rbar) = rest.means();
    let (_, c) = rest.moments(xbar, rbar);
    let Ok(da) = solve_centered(s, &c, d) else { return fit };
    let db = rbar - dot(&da, xbar);
    let a: Vec<f64> = fit.map.gradient.iter().zip(&da).map(|(a, da)| a + da).collect();
    let candidate =
        AffineFit::evaluate(samples, AffineMap::new(a, fit.map.intercept + db), FitNorm::L2, fit.constraint);
    if candidate.objective < fit.objective {
        candidate
    } else {
        fit
    }
}

/// Least-squares affine fit subject to `|gradient| <= bound`.
pub fn fit_affine_l2_constrained(samples: &SampleSet, bound: f64) -> Result<AffineFit> {
    samples.check_nonempty()?;
    if !(bound > 0.0) {
        return Err(Error::InvalidInput(format!("gradient bound must be positive, got {bound}")));
    }
    let d = samples.dim();
    let (xbar, ybar) = samples.means();
    if d == 0 {
        return Ok(AffineFit::evaluate(samples, AffineMap::constant(0, ybar), FitNorm::L2, Some(bound)));
    }
    let (s, c) = samples.moments(&xbar, ybar);
    let finish = |a: Vec<f64>| {
        let b = ybar - dot(&a, &xbar);
        AffineFit::evaluate(samples, AffineMap::new(a, b), FitNorm::L2, Some(bound))
    };
    match solve_centered(&s, &c, d) {
        Ok(a) if norm(&a) <= bound => {
            let fit = refine_l2(samples, finish(a), &s, &xbar);
            if fit.map.lipschitz() <= bound {
                return Ok(fit);
            }
        }
        // Only the intercept matters; the zero gradient is optimal.
        Err(_) if norm(&c) == 0.0 => return Ok(finish(vec![0.0; d])),
        _ => {}
    }
    let ridge = |lambda: f64| -> Vec<f64> {
        let mut m = s.clone();
        for k in 0..d {
            m[k * d + k] += lambda;
        }
        linalg::solve(&m, &c, d, 0.0).unwrap_or_else(|_| vec![0.0; d])
    };
    let (mut lo, mut hi) = (0.0, norm(&c) / bound);
    let mut a_hi = ridge(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let a = ridge(mid);
        let na = norm(&a);
        if na > bound {
            lo = mid;
        } else {
            hi = mid;
            a_hi = a;
            if bound - na <= 1e-10 * bound {
                break;
            }
        }
    }
    let na = norm(&a_hi);
    if na > bound {
        a_hi.iter_mut().for_each(|v| *v *= bound / na);
    }
    Ok(finish(a_hi))
}

/// Affine fit minimizing `Σ w |r|^p` by iteratively reweighted least
/// squares started from the L2 fit; the best iterate is returned.
pub fn fit_affine_lp(samples: &SampleSet, p: f64) -> Result<AffineFit> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("exponent must be finite and >= 1, got {p}")));
    }
    let l2 = fit_affine_l2(samples)?;
    if p == 2.0 {
        return Ok(l2);
    }
    let norm = FitNorm::Lp(p);
    let mut best = AffineFit::evaluate(samples, l2.map.clone(), norm, None);
    let scale = samples.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut current = l2.map;
    for _ in 0..100 {
        let r = samples.residuals(&current);
        let floor = 1e-9 * scale;
        let mut reweighted = samples.clone();
        for (w, r) in reweighted.weights.iter_mut().zip(&r) {
            *w *= r.abs().max(floor).powf(p - 2.0);
        }
        let next = match fit_affine_l2(&reweighted) {
            Ok(f) => f.map,
            Err(_) => break,
        };
        let cand = AffineFit::evaluate(samples, next.clone(), norm, None);
        let improved = cand.objective < best.objective * (1.0 - 1e-13);
        if cand.objective < best.objective {
            best = cand;
        }
        let step =
            dot(&linalg::sub(&next.gradient, &current.gradient), &linalg::sub(&next.gradient, &current.gradient))
                .sqrt()
                + (next.intercept - current.intercept).abs();
        current = next;
        if !improved && step <= 1e-12 * (1.0 + scale) {
            break;
        }
    }
    Ok(best)
}

/// Dispatches on the exponent: L2, minimax for `p = ∞`, IRLS otherwise.
pub fn fit_affine_p(samples: &SampleSet, p: f64, bound: Option<f64>) -> Result<AffineFit> {
    match (p, bound) {
        (p, _) if p.is_infinite() => fit_affine_minimax(samples, bound),
        (p, None) if p == 2.0 => fit_affine_l2(samples),
        (p, Some(l)) if p == 2.0 => fit_affine_l2_constrained(samples, l),
        (p, None) => fit_affine_lp(samples, p),
        (_, Some(_)) => Err(Error::Unsupported("gradient constraints are only supported for p = 2 and p = ∞".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AxisBox;
    use crate::quadrature::{box_rule, Rule};

    fn samples_1d(lo: f64, hi: f64, k: usize, rule: Rule, f: impl Fn(f64) -> f64) -> SampleSet {
        let (pts, w) = box_rule(&AxisBox::new(vec![lo], vec![hi - lo]).unwrap(), k, rule);
        SampleSet::from_points(1, pts, w, |x| f(x[0]))
    }

    #[test]
    fn exact_affine_data() {
        let (pts, w) = box_rule(&AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap(), 5, Rule::Midpoint);
        let s = SampleSet::from_points(2, pts, w, |x| 2.0 * x[0] + 3.0 * x[1] + 1.0);
        let f = fit_affine_l2(&s).unwrap();
        assert!((f.map.gradient[0] - 2.0).abs() < 1e-12);
        assert!((f.map.gradient[1] - 3.0).abs() < 1e-12);
        assert!((f.map.intercept - 1.0).abs() < 1e-12);
        assert!(f.objective < 1e-24);
    }

    #[test]
    fn square_projects_onto_constant() {
        let s = samples_1d(-1.0, 1.0, 5, Rule::GaussLegendre, |x| x * x);
        let f = fit_affine_l2(&s).unwrap();
        assert!(f.map.gradient[0].abs() < 1e-14);
        assert!((f.map.intercept - 1.0 / 3.0).abs() < 1e-14);
        assert!((f.objective * 2.0 - 8.0 / 45.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_abscissa_is_rank_deficient() {
        let mut s = SampleSet::new(1);
        for v in [1.0, 2.0, 3.0] {
            s.push(&[0.5], v, 1.0);
        }
        assert!(matches!(fit_affine_l2(&s), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn constrained_fit_of_steep_line() {
        let s = samples_1d(0.0, 1.0, 5, Rule::GaussLegendre, |x| 2.0 * x);
        let f = fit_affine_l2_constrained(&s, 1.0).unwrap();
        assert!((f.map.gradient[0] - 1.0).abs() < 1e-9);
        assert!((f.map.intercept - 0.5).abs() < 1e-9);
        assert!((f.objective - 1.0 / 12.0).abs() < 1e-9);
        assert!(f.map.lipschitz() <= 1.0 * (1.0 + 1e-9));
    }

    #[test]
    fn constrained_fit_matches_unconstrained_when_feasible() {
        let s = samples_1d(0.0, 1.0, 7, Rule::Midpoint, |x| x * x);
        let a = fit_affine_l2(&s).unwrap();
        let b = fit_affine_l2_constrained(&s, 5.0).unwrap();
        assert_eq!(a.map, b.map);
    }

    #[test]
    fn tiny_bound_collapses_to_mean() {
        let s = samples_1d(0.0, 1.0, 7, Rule::Midpoint, |x| x.exp());
        let f = fit_affine_l2_constrained(&s, 1e-12).unwrap();
        let (mean, var) = fit_constant_l2(&s);
        assert!((f.map.intercept + f.map.gradient[0] * 0.5 - mean).abs() < 1e-9);
        assert!((f.objective - var).abs() < 1e-9);
    }

    #[test]
    fn constant_fits() {
        let mut s = SampleSet::new(0);
        s.push(&[], 0.0, 1.0);
        s.push(&[], 1.0, 1.0);
        assert_eq!(fit_constant_l2(&s), (0.5, 0.25));
        let t = samples_1d(0.0, 1.0, 4, Rule::GaussLegendre, |x| x);
        let (c, v) = fit_constant_l2(&t);
        assert!((c - 0.5).abs() < 1e-14 && (v - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn l1_fit_of_kink_beats_l2_in_its_own_norm() {
        let s = samples_1d(-1.0, 1.0, 101, Rule::Midpoint, |x| x.abs());
        let l1 = fit_affine_lp(&s, 1.0).unwrap();
        let l2 = fit_affine_l2(&s).unwrap();
        assert!(l1.objective <= objective(&s, &l2.map, FitNorm::Lp(1.0)));
        // best L1 constant for |x| on [-1,1] is the median 1/2, error 1/4
        assert!((l1.objective - 0.25).abs() < 1e-3);
    }
}
