//! Affine-approximation coefficients on boxes, on slices of boxes, and
//! averaged over all lines or hyperplanes meeting a box.
//!
//! All coefficients are normalized by powers of the box diameter:
//! `β_p(Q) = inf_A [diam^{-n} ∫_Q (|f - A| / diam)^p]^{1/p}` on the box and
//! `diam^{-m}` with `m` the slice dimension on slices.

pub(crate) mod carleson;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit_affine_p, fit_constant_l2, AffineFit, FitNorm, SampleSet};
use crate::funcmodel::Field;
use crate::geometry::{sample_hyperplanes, sample_lines, AffineMap, AxisBox, Hyperplane, LineSeg};
use crate::linalg::{add_scaled, complement_basis, dot, scale, sub};
use crate::quadrature::{
    axis_rule, box_closed, box_rule, closed_axis, plane_slice, polygon_closed, polygon_rule, QuadratureSpec,
};

pub use carleson::{carleson_sum, CarlesonReport, CubeValue, LevelContribution, Selector};

/// `β_p(Q) <= UNIFORM_BOUND * Lip(f)` for every box and every `p`: the
/// constant `f(center)` is within `Lip(f) diam / 2` everywhere on the box,
/// and the normalizing measure has mass at most one.
pub const UNIFORM_BOUND: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Cube,
    RestrictedLine,
    RestrictedPlane,
    IntegralGeometric,
}

impl BetaKind {
    pub fn label(self) -> &'static str {
        match self {
            BetaKind::Cube => "cube",
            BetaKind::RestrictedLine => "line",
            BetaKind::RestrictedPlane => "plane",
            BetaKind::IntegralGeometric => "integral_geometric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaRecord {
    pub region: AxisBox,
    pub dilation: f64,
    pub kind: BetaKind,
    pub p: f64,
    /// Averaging exponent of integral-geometric coefficients.
    pub q: Option<f64>,
    /// Dimension of the slices (the box dimension for cube coefficients).
    pub m: usize,
    pub value: f64,
    /// Monte Carlo standard error; zero for deterministic coefficients.
    pub stderr: f64,
    /// Optimal affine map, in slice coordinates for restricted coefficients.
    pub map: Option<AffineMap>,
    /// Quadrature nodes used per coefficient evaluation.
    pub nodes: usize,
    /// Slices averaged (integral-geometric coefficients only).
    pub samples: usize,
}

/// Affine plane or line along which a coefficient is restricted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slice {
    Line(LineSeg),
    Plane(Hyperplane),
}

impl Slice {
    pub fn dim(&self, ambient: usize) -> usize {
        match self {
            Slice::Line(_) => 1,
            Slice::Plane(_) => ambient - 1,
        }
    }
}

pub(crate) fn normalized(sum_pow: f64, diam: f64, m: usize, p: f64) -> f64 {
    if p.is_infinite() {
        sum_pow / diam
    } else {
        (sum_pow / diam.powi(m as i32)).powf(1.0 / p) / diam
    }
}

/// `Σ w |r|^p` (or `max |r|` for `p = ∞`) of the best fit, together with
/// the fit. Degenerate sample sets fall back to the best constant.
fn best_fit(samples: &SampleSet, p: f64, bound: Option<f64>) -> Result<(f64, AffineFit)> {
    let fit = match fit_affine_p(samples, p, bound) {
        Ok(f) => f,
        Err(Error::RankDeficient { .. }) => constant_fit(samples, p),
        Err(e) => return Err(e),
    };
    let total = if p.is_infinite() { fit.objective } else { fit.objective * samples.total_weight() };
    Ok((total, fit))
}

fn constant_fit(samples: &SampleSet, p: f64) -> AffineFit {
    let d = samples.dim();
    let (c, norm) = if p.is_infinite() {
        let (lo, hi) =
            samples.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        (0.5 * (lo + hi), FitNorm::Linf)
    } else if p == 2.0 {
        (fit_constant_l2(samples).0, FitNorm::L2)
    } else {
        let mut v = samples.values().to_vec();
        v.sort_by(f64::total_cmp);
        (v[v.len() / 2], FitNorm::Lp(p))
    };
    let map = AffineMap::constant(d, c);
    let objective = crate::fitting::objective(samples, &map, norm);
    AffineFit { map, objective, norm, constraint: None }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("exponent p must be in [1, ∞], got {p}")))
    }
}

/// Samples of `f` on the box: a tensor rule for `p < ∞`, the closed grid
/// for `p = ∞`.
pub fn cube_samples<F: Field + ?Sized>(f: &F, region: &AxisBox, p: f64, quad: &QuadratureSpec) -> SampleSet {
    let n = region.dim();
    if p.is_infinite() {
        let pts = box_closed(region, quad.nodes);
        let w = vec![1.0; pts.len() / n];
        SampleSet::from_points(n, pts, w, |x| f.value(x))
    } else {
        let (pts, w) = box_rule(region, quad.nodes, quad.rule);
        SampleSet::from_points(n, pts, w, |x| f.value(x))
    }
}

/// `β_p` of `f` on a box; `bound` restricts to affine maps with gradient
/// norm at most `bound`.
pub fn beta_p_cube<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    p: f64,
    quad: &QuadratureSpec,
    bound: Option<f64>,
) -> Result<BetaRecord> {
    check_exponent(p)?;
    f.check_region(region)?;
    let samples = cube_samples(f, region, p, quad);
    let fit = fit_affine_p(&samples, p, bound).map_err(|e| match e {
        Error::RankDeficient { pivot } => {
            Error::DegenerateBox(format!("quadrature design is rank deficient (pivot {pivot:e})"))
        }
        other => other,
    })?;
    let total = if p.is_infinite() { fit.objective } else { fit.objective * samples.total_weight() };
    let n = region.dim();
    Ok(BetaRecord {
        region: region.clone(),
        dilation: 1.0,
        kind: BetaKind::Cube,
        p,
        q: None,
        m: n,
        value: normalized(total, region.diam(), n, p),
        stderr: 0.0,
        map: Some(fit.map),
        nodes: samples.len(),
        samples: 0,
    })
}

/// Samples of `f` along the part of a line inside `region`, parametrized by
/// arc length.
fn line_samples<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    line: &LineSeg,
    p: f64,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<SampleSet> {
    let (a, b) = region.clip_line(&line.base, &line.dir).ok_or(Error::EmptyIntersection)?;
    let (s0, s1) = (a.max(line.s0), b.min(line.s1));
    if !(s1 > s0) {
        return Err(Error::EmptyIntersection);
    }
    let mut set = SampleSet::with_capacity(1, 2 * k + 1);
    let mut push = |s: f64, w: f64| {
        let x = add_scaled(&line.base, s, &line.dir);
        set.push(&[s], f.value(&x), w);
    };
    if p.is_infinite() {
        closed_axis(s0, s1 - s0, k).into_iter().for_each(|s| push(s, 1.0));
    } else {
        axis_rule(s0, s1 - s0, k, quad.rule).into_iter().for_each(|(s, w)| push(s, w));
    }
    Ok(set)
}

/// Samples of `f` on `V ∩ region` in an orthonormal frame of `V`.
pub fn slice_samples<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    slice: &Slice,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<SampleSet> {
    let n = region.dim();
    let k = quad.patch_nodes;
    match slice {
        Slice::Line(line) => line_samples(f, region, line, p, k, quad),
        Slice::Plane(plane) => match n {
            1 => {
                let x = [plane.offset * plane.normal[0]];
                if !region.contains(&x, 0.0) {
                    return Err(Error::EmptyIntersection);
                }
                let mut set = SampleSet::new(0);
                set.push(&[], f.value(&x), 1.0);
                Ok(set)
            }
            2 => line_samples(f, region, &plane_as_line(plane), p, k, quad),
            3 => {
                let s = plane_slice(region, plane).ok_or(Error::EmptyIntersection)?;
                let mut set = SampleSet::new(2);
                if p.is_infinite() {
                    for u in polygon_closed(&s.polygon, k) {
                        set.push(&u, f.value(&s.lift(u)), 1.0);
                    }
                } else {
                    let (pts, w) = polygon_rule(&s.polygon, k);
                    for (u, w) in pts.into_iter().zip(w) {
                        set.push(&u, f.value(&s.lift(u)), w);
                    }
                }
                Ok(set)
            }
            _ => Err(Error::Unsupported(format!("hyperplane slices are implemented for n <= 3, got n = {n}"))),
        },
    }
}

/// A line in `R^2` viewed as a hyperplane, parametrized from its foot point.
fn plane_as_line(plane: &Hyperplane) -> LineSeg {
    let dir = [-plane.normal[1], plane.normal[0]];
    LineSeg::through(&scale(&plane.normal, plane.offset), &dir)
}

/// Coordinates of `x` in the frame used by [`slice_samples`] for `slice`;
/// maps fitted on slice samples are evaluated at these coordinates.
pub fn slice_coordinates(slice: &Slice, x: &[f64]) -> Vec<f64> {
    match slice {
        Slice::Line(l) => vec![dot(&sub(x, &l.base), &l.dir)],
        Slice::Plane(h) => match h.dim() {
            1 => vec![],
            2 => {
                let l = plane_as_line(h);
                vec![dot(&sub(x, &l.base), &l.dir)]
            }
            _ => {
                let rel = sub(x, &scale(&h.normal, h.offset));
                complement_basis(&h.normal).iter().map(|u| dot(&rel, u)).collect()
            }
        },
    }
}

/// `β_p(Q, V)` for a line or hyperplane `V`.
pub fn beta_p_restricted<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    slice: &Slice,
    p: f64,
    quad: &QuadratureSpec,
    bound: Option<f64>,
) -> Result<BetaRecord> {
    check_exponent(p)?;
    f.check_region(region)?;
    let n = region.dim();
    let m = slice.dim(n);
    let samples = slice_samples(f, region, slice, p, quad)?;
    let (total, fit) = best_fit(&samples, p, bound)?;
    Ok(BetaRecord {
        region: region.clone(),
        dilation: 1.0,
        kind: if matches!(slice, Slice::Line(_)) { BetaKind::RestrictedLine } else { BetaKind::RestrictedPlane },
        p,
        q: None,
        m,
        value: if m == 0 { 0.0 } else { normalized(total, region.diam(), m, p) },
        stderr: 0.0,
        map: Some(fit.map),
        nodes: samples.len(),
        samples: 0,
    })
}

/// `[⨍ β_p(Q, V)^q dη_m(V)]^{1/q}` over the `m`-planes meeting the box,
/// with `m ∈ {0, 1, n - 1, n}`. Monte Carlo with `quad.mc_samples` slices.
pub fn beta_integralgeometric<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    m: usize,
    p: f64,
    q: f64,
    quad: &QuadratureSpec,
) -> Result<BetaRecord> {
    check_exponent(p)?;
    if !(q >= 1.0) || q.is_infinite() {
        return Err(Error::InvalidInput(format!("averaging exponent q must be finite and >= 1, got {q}")));
    }
    f.check_region(region)?;
    let n = region.dim();
    let record = |value: f64, stderr: f64, samples: usize, nodes: usize| BetaRecord {
        region: region.clone(),
        dilation: 1.0,
        kind: BetaKind::IntegralGeometric,
        p,
        q: Some(q),
        m,
        value,
        stderr,
        map: None,
        nodes,
        samples,
    };
    if m == n {
        let cube = beta_p_cube(f, region, p, quad, None)?;
        return Ok(BetaRecord { q: Some(q), kind: BetaKind::IntegralGeometric, ..cube });
    }
    if m == 0 {
        return Ok(record(0.0, 0.0, 0, 0));
    }
    let slices: Vec<(Slice, f64)> = if m == 1 {
        sample_lines(region, quad.mc_samples, quad.seed).into_iter().map(|(l, w)| (Slice::Line(l), w)).collect()
    } else if m + 1 == n {
        sample_hyperplanes(region, quad.mc_samples, quad.seed).into_iter().map(|(h, w)| (Slice::Plane(h), w)).collect()
    } else {
        return Err(Error::Unsupported(format!(
            "slice dimension {m} in R^{n}: only 0, 1, n - 1 and n are implemented"
        )));
    };
    let values: Vec<Option<(f64, usize)>> = slices
        .par_iter()
        .map(|(s, _)| match beta_p_restricted(f, region, s, p, quad, None) {
            Ok(r) => Ok(Some((r.value, r.nodes))),
            Err(Error::EmptyIntersection) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut wsum = 0.0;
    let mut acc = 0.0;
    let mut nodes = 0;
    let mut kept = Vec::with_capacity(values.len());
    for ((_, w), v) in slices.iter().zip(&values) {
        if let Some((b, k)) = v {
            let t = b.powf(q);
            wsum += w;
            acc += w * t;
            nodes = nodes.max(*k);
            kept.push((*w, t));
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let mean = acc / wsum;
    let var = kept.iter().map(|(w, t)| w * w * (t - mean).powi(2)).sum::<f64>() / (wsum * wsum);
    let value = mean.powf(1.0 / q);
    let stderr = if mean > 0.0 { value / (q * mean) * var.sqrt() } else { 0.0 };
    Ok(record(value, stderr, kept.len(), nodes))
}

/// One CSV line per record: `level,index,kind,p,q,m,value,stderr`.
pub fn records_csv<'a>(rows: impl IntoIterator<Item = (i32, &'a [i64], &'a BetaRecord)>) -> String {
    let mut out = String::from("level,index,kind,p,q,m,value,stderr\n");
    for (level, index, r) in rows {
        out.push_str(&format!(
            "{level},{},{},{},{},{},{:.12e},{:.6e}\n",
            index_label(index),
            r.kind.label(),
            exponent_label(r.p),
            r.q.map_or(String::new(), exponent_label),
            r.m,
            r.value,
            r.stderr
        ));
    }
    out
}

pub fn index_label(index: &[i64]) -> String {
    index.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn exponent_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::FunctionField;
    use crate::quadrature::Rule;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn affine_is_annihilated() {
        let f = FunctionField::affine(vec![1.0, -2.0], 0.5);
        let b = AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap();
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            assert!(beta_p_cube(&f, &b, p, &q(), None).unwrap().value <= 1e-10);
        }
        let l = LineSeg::through(&[0.3, 0.1], &[0.6, 0.8]);
        assert!(beta_p_restricted(&f, &b, &Slice::Line(l), f64::INFINITY, &q(), None).unwrap().value <= 1e-10);
    }

    #[test]
    fn kink_sup_coefficient() {
        let f = FunctionField::cone(vec![0.0]);
        let b = AxisBox::symmetric(1, -1.0, 1.0).unwrap();
        let r = beta_p_cube(&f, &b, f64::INFINITY, &q(), None).unwrap();
        assert!((r.value - 0.25).abs() < 1e-9);
    }

    #[test]
    fn square_l2_coefficient_with_exact_rule() {
        let f = FunctionField::Square { dim: 1 };
        let b = AxisBox::symmetric(1, -1.0, 1.0).unwrap();
        let spec = QuadratureSpec { rule: Rule::GaussLegendre, nodes: 5, ..q() };
        let r = beta_p_cube(&f, &b, 2.0, &spec, None).unwrap();
        assert!((r.value - 1.0 / 45f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn restricted_line_and_miss() {
        let f = FunctionField::ridge_kink(2, 0, 0.0);
        let b = AxisBox::symmetric(2, -1.0, 1.0).unwrap();
        let line = Slice::Line(LineSeg::through(&[0.0, 0.0], &[1.0, 0.0]));
        let r = beta_p_restricted(&f, &b, &line, f64::INFINITY, &q(), None).unwrap();
        assert!((r.value - 1.0 / (4.0 * 2f64.sqrt())).abs() < 1e-9);
        let unit = AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap();
        let miss = Slice::Plane(Hyperplane::new(vec![1.0, 0.0], 5.0).unwrap());
        assert!(matches!(beta_p_restricted(&f, &unit, &miss, 2.0, &q(), None), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn fitted_slice_maps_reproduce_affine_data() {
        let f = FunctionField::affine(vec![1.0, -2.0, 0.5], 0.25);
        let b = AxisBox::cube(vec![0.0; 3], 1.0).unwrap();
        let slice = Slice::Plane(Hyperplane::new(vec![0.2, 0.3, 1.0], 0.6).unwrap());
        let r = beta_p_restricted(&f, &b, &slice, 2.0, &q(), None).unwrap();
        let Slice::Plane(h) = &slice else { unreachable!() };
        let x = crate::linalg::add_scaled(
            &[0.3, 0.4, 0.0],
            (h.offset - dot(&h.normal, &[0.3, 0.4, 0.0])) / h.normal[2],
            &[0.0, 0.0, 1.0],
        );
        let u = slice_coordinates(&slice, &x);
        assert!((r.map.unwrap().eval(&u) - f.value(&x)).abs() < 1e-12);
        let g = FunctionField::affine(vec![1.0, -2.0], 0.25);
        let sq = AxisBox::cube(vec![0.0; 2], 1.0).unwrap();
        let line = Slice::Plane(Hyperplane::new(vec![1.0, 1.0], 1.0).unwrap());
        let r = beta_p_restricted(&g, &sq, &line, 2.0, &q(), None).unwrap();
        let u = slice_coordinates(&line, &[0.3, 0.7]);
        assert!((r.map.unwrap().eval(&u) - g.value(&[0.3, 0.7])).abs() < 1e-12);
    }

    #[test]
    fn full_dimension_reduces_to_cube() {
        for n in 1..=3 {
            let f = FunctionField::Square { dim: n };
            let b = AxisBox::symmetric(n, -1.0, 1.0).unwrap();
            let spec = q().with_nodes(9);
            let ig = beta_integralgeometric(&f, &b, n, 2.0, 2.0, &spec).unwrap();
            let cube = beta_p_cube(&f, &b, 2.0, &spec, None).unwrap();
            assert!((ig.value - cube.value).abs() <= 1e-12);
        }
    }

    #[test]
    fn uniform_bound_holds_for_cone() {
        let f = FunctionField::cone(vec![0.2, -0.1]);
        let b = AxisBox::new(vec![-0.5, -1.0], vec![1.0, 1.5]).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            assert!(beta_p_cube(&f, &b, p, &q(), None).unwrap().value <= UNIFORM_BOUND);
        }
    }
}
