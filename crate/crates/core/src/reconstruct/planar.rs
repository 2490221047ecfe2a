//! The direct construction in the plane: three lines with small `β_∞`
//! cutting out a triangle between `5cQ` and `Q`, the affine map through the
//! triangle's corners, and a line-by-line evaluation of `β_2(cQ)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beta::{beta_p_restricted, normalized, Slice};
use crate::error::{Error, Result};
use crate::fitting::{fit_affine_l2, objective, FitNorm, SampleSet};
use crate::funcmodel::Field;
use crate::geometry::{simplex_from_planes, AffineMap, AxisBox, Hyperplane, LineSeg, Simplex};
use crate::linalg::dot;
use crate::quadrature::{axis_rule, QuadratureSpec};
use crate::rng::{self, op};

use super::build_global_affine;

/// Attempts at drawing an admissible triangle.
const ATTEMPTS: usize = 4096;
/// Admissible triangles compared.
const CANDIDATES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarReport {
    pub lines: Vec<Hyperplane>,
    pub triangle: Simplex,
    pub map: AffineMap,
    /// Largest `β_∞(Q, ℓ_j)` over the three lines.
    pub max_line_beta: f64,
    /// `β_2(cQ)` from the line-sliced rule.
    pub beta2: f64,
    /// `β_2`-normalized residual of `map` on `cQ`.
    pub beta2_via_map: f64,
}

/// Line-sliced `L^2` samples of `f` on a rectangle: `rows` horizontal lines
/// at midpoint heights, `per_row` nodes along each.
fn row_samples<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    rows: usize,
    per_row: usize,
    quad: &QuadratureSpec,
) -> SampleSet {
    let mut set = SampleSet::with_capacity(2, rows * per_row);
    for (y, wy) in axis_rule(region.min[1], region.sides[1], rows, quad.rule) {
        for (x, wx) in axis_rule(region.min[0], region.sides[0], per_row, quad.rule) {
            let p = [x, y];
            set.push(&p, f.value(&p), wx * wy);
        }
    }
    set
}

fn draw_triangle<R: Rng>(rng: &mut R, region: &AxisBox, inner: f64) -> Option<Vec<Hyperplane>> {
    let z = region.center();
    let side = region.sides[0];
    let rotation = std::f64::consts::TAU * rng.random::<f64>();
    let mut lines = Vec::with_capacity(3);
    for j in 0..3 {
        let angle = rotation + std::f64::consts::TAU * j as f64 / 3.0 + 0.5 * (rng.random::<f64>() - 0.5);
        let e = [angle.cos(), angle.sin()];
        let reach = 2.5 * inner * side * (e[0].abs() + e[1].abs());
        let r = reach + (0.3 * side - reach).max(0.0) * rng.random::<f64>();
        lines.push(Hyperplane::oriented(e.to_vec(), dot(&e, &z) + r).ok()?);
    }
    Some(lines)
}

fn admissible(triangle: &Simplex, region: &AxisBox, inner: f64) -> bool {
    let small = region.dilate(5.0 * inner);
    triangle.vertices.iter().all(|v| region.contains(v, 0.0))
        && small.corners().iter().all(|c| triangle.contains(c, 0.0))
}

/// Runs the planar construction on a square `region` with small-cube
/// factor `inner`.
pub fn planar_pipeline<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    inner: f64,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<PlanarReport> {
    if region.dim() != 2 {
        return Err(Error::InvalidInput("the planar construction needs n = 2".into()));
    }
    let mut rng = rng::stream(seed, rng::point_key(&region.min), op::PLANAR);
    let mut best: Option<(f64, Vec<Hyperplane>, Simplex)> = None;
    let mut found = 0;
    for _ in 0..ATTEMPTS {
        if found == CANDIDATES {
            break;
        }
        let Some(lines) = draw_triangle(&mut rng, region, inner) else { continue };
        let Ok(triangle) = simplex_from_planes(&lines) else { continue };
        if !admissible(&triangle, region, inner) {
            continue;
        }
        found += 1;
        let mut worst: f64 = 0.0;
        for h in &lines {
            let dir = [-h.normal[1], h.normal[0]];
            let point = [h.normal[0] * h.offset, h.normal[1] * h.offset];
            let slice = Slice::Line(LineSeg::through(&point, &dir));
            worst = worst.max(beta_p_restricted(f, region, &slice, f64::INFINITY, quad, None)?.value);
        }
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, lines, triangle));
        }
    }
    let (max_line_beta, lines, triangle) =
        best.ok_or_else(|| Error::DegenerateSimplex("no admissible triangle found".into()))?;
    let values: Vec<f64> = triangle.vertices.iter().map(|v| f.value(v)).collect();
    let map = build_global_affine(&triangle.vertices, &values)?;

    let small = region.dilate(inner);
    let samples = row_samples(f, &small, 2 * quad.nodes + 1, quad.patch_nodes, quad);
    let w = samples.total_weight();
    let fit = fit_affine_l2(&samples)?;
    let beta2 = normalized(fit.objective * w, small.diam(), 2, 2.0);
    let beta2_via_map = normalized(objective(&samples, &map, FitNorm::L2) * w, small.diam(), 2, 2.0);
    Ok(PlanarReport { lines, triangle, map, max_line_beta, beta2, beta2_via_map })
}
