//! The family of parallel lines through the small cube used to carry the
//! bound from the simplex corners back to `cQ`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{beta_p_restricted, Slice};
use crate::error::{Error, Result};
use crate::funcmodel::Field;
use crate::geometry::{AffineMap, AxisBox, LineSeg, Simplex};
use crate::linalg::{add_scaled, complement_basis, dot, norm};
use crate::quadrature::QuadratureSpec;
use crate::rng::{self, op, unit_vector};

/// Angular radius of the cap of admissible directions.
pub const CAP_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFamily {
    pub direction: Vec<f64>,
    pub lines: usize,
    /// Mean of `β_∞(CQ, ℓ_v)^2` over the foot points `v ∈ π(cQ)`.
    pub sup_beta_sq: f64,
    /// Mean of `δ(v)^2`, the largest `|f - A|` where `ℓ_v` leaves the simplex.
    pub boundary_sq: f64,
    pub directions_tried: usize,
}

/// Direction maximizing the smallest `|e . u_j|` over the face normals among
/// a fixed set of random candidates.
fn transversal_direction(simplex: &Simplex, seed: u64) -> Vec<f64> {
    let n = simplex.dim();
    let mut rng = rng::stream(seed, 0, op::LINE_FAMILY);
    let quality = |e: &[f64]| simplex.faces.iter().map(|f| dot(&f.normal, e).abs()).fold(f64::INFINITY, f64::min);
    (0..256)
        .map(|_| unit_vector(&mut rng, n))
        .max_by(|a, b| quality(a).total_cmp(&quality(b)))
        .expect("nonempty candidate set")
}

fn cap_direction<R: Rng>(rng: &mut R, center: &[f64]) -> Vec<f64> {
    loop {
        let w = unit_vector(rng, center.len());
        let e = add_scaled(center, CAP_RADIUS * rng.random::<f64>(), &w);
        let ne = norm(&e);
        let e: Vec<f64> = e.iter().map(|c| c / ne).collect();
        if dot(&e, center).clamp(-1.0, 1.0).acos() <= CAP_RADIUS {
            return e;
        }
    }
}

/// Foot points of lines with direction `e` on a midpoint grid over the
/// shadow of `small`, keeping those whose line meets `small`.
fn foot_points(small: &AxisBox, e: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let frame = complement_basis(e);
    let corners = small.corners();
    let bounds: Vec<(f64, f64)> = frame
        .iter()
        .map(|u| {
            corners.iter().map(|c| dot(c, u)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
        })
        .collect();
    let m = frame.len();
    let total = per_axis.pow(m as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let mut v = vec![0.0; e.len()];
        for (u, (lo, hi)) in frame.iter().zip(&bounds) {
            let i = rest % per_axis;
            rest /= per_axis;
            let s = lo + (hi - lo) * (2 * i + 1) as f64 / (2 * per_axis) as f64;
            v = add_scaled(&v, s, u);
        }
        if small.clip_line(&v, e).is_some() {
            out.push(v);
        }
    }
    out
}

fn evaluate<F: Field + ?Sized>(
    f: &F,
    small: &AxisBox,
    outer_box: &AxisBox,
    simplex: &Simplex,
    map: &AffineMap,
    e: &[f64],
    per_axis: usize,
    quad: &QuadratureSpec,
) -> Result<(f64, f64, usize)> {
    let feet = foot_points(small, e, per_axis);
    if feet.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let rows: Vec<(f64, f64)> = feet
        .par_iter()
        .map(|v| {
            let line = LineSeg { base: v.clone(), dir: e.to_vec(), s0: f64::NEG_INFINITY, s1: f64::INFINITY };
            let sup = beta_p_restricted(f, outer_box, &Slice::Line(line), f64::INFINITY, quad, None)?.value;
            let (a, b) = simplex.clip_line(v, e).ok_or(Error::EmptyIntersection)?;
            let delta = [a, b]
                .iter()
                .map(|&s| {
                    let x = add_scaled(v, s, e);
                    (f.value(&x) - map.eval(&x)).abs()
                })
                .fold(0.0, f64::max);
            Ok((sup * sup, delta * delta))
        })
        .collect::<Result<_>>()?;
    let k = rows.len() as f64;
    let sup = rows.iter().map(|r| r.0).sum::<f64>() / k;
    let bnd = rows.iter().map(|r| r.1).sum::<f64>() / k;
    Ok((sup, bnd, rows.len()))
}

/// Best (smallest mean `β_∞(CQ, ℓ_v)^2`) of `directions` line families with
/// directions in a cap around a transversal direction.
#[allow(clippy::too_many_arguments)]
pub fn line_family<F: Field + ?Sized>(
    f: &F,
    small: &AxisBox,
    outer_box: &AxisBox,
    simplex: &Simplex,
    map: &AffineMap,
    directions: usize,
    per_axis: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<LineFamily> {
    let center = transversal_direction(simplex, seed);
    let mut rng = rng::stream(seed, 1, op::LINE_FAMILY);
    let mut candidates = vec![center.clone()];
    while candidates.len() < directions.max(1) {
        candidates.push(cap_direction(&mut rng, &center));
    }
    let mut best: Option<LineFamily> = None;
    for e in candidates {
        let (sup_beta_sq, boundary_sq, lines) = evaluate(f, small, outer_box, simplex, map, &e, per_axis, quad)?;
        if best.as_ref().is_none_or(|b| sup_beta_sq < b.sup_beta_sq) {
            best =
                Some(LineFamily { direction: e, lines, sup_beta_sq, boundary_sq, directions_tried: directions.max(1) });
        }
    }
    Ok(best.expect("at least one direction"))
}
