//! Tensor and slice quadrature rules.
//!
//! Midpoint rules with `k` nodes per axis are nested inside the closed
//! grids with `2k + 1` nodes used for sup norms: both compute node `j` of
//! `[lo, lo + len]` as `lo + j * len / (2k)`, so shared nodes agree bit for
//! bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Hyperplane};
use crate::linalg::{add_scaled, complement_basis, dot, scale, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    #[default]
    Midpoint,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Nodes per axis on full-dimensional boxes.
    pub nodes: usize,
    /// Nodes per axis on line and plane slices.
    pub patch_nodes: usize,
    /// Monte Carlo samples for integral-geometric averages.
    pub mc_samples: usize,
    pub seed: u64,
    pub rule: Rule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: 17, patch_nodes: 33, mc_samples: 4096, seed: 7, rule: Rule::Midpoint }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("nodes", self.nodes), ("patch_nodes", self.patch_nodes)] {
            if k < 3 || k % 2 == 0 {
                return Err(Error::InvalidInput(format!("{name} must be odd and at least 3, got {k}")));
            }
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidInput("mc_samples must be positive".into()));
        }
        Ok(())
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_patch_nodes(mut self, patch_nodes: usize) -> Self {
        self.patch_nodes = patch_nodes;
        self
    }

    pub fn with_mc_samples(mut self, mc_samples: usize) -> Self {
        self.mc_samples = mc_samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Nodes and weights of a one-dimensional rule on `[lo, lo + len]`.
pub fn axis_rule(lo: f64, len: f64, k: usize, rule: Rule) -> Vec<(f64, f64)> {
    match rule {
        Rule::Midpoint => {
            let denom = (2 * k) as f64;
            (0..k).map(|i| (lo + (2 * i + 1) as f64 * len / denom, len / k as f64)).collect()
        }
        Rule::GaussLegendre => {
            gauss_legendre(k).into_iter().map(|(x, w)| (lo + 0.5 * len * (x + 1.0), 0.5 * len * w)).collect()
        }
    }
}

/// `2k + 1` equispaced nodes including both endpoints.
pub fn closed_axis(lo: f64, len: f64, k: usize) -> Vec<f64> {
    let denom = (2 * k) as f64;
    (0..=2 * k).map(|j| lo + j as f64 * len / denom).collect()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Flattened tensor product of per-axis node lists.
fn tensor(axes: &[Vec<(f64, f64)>]) -> (Vec<f64>, Vec<f64>) {
    let n = axes.len();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut points = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..n {
            let (x, wk) = axes[k][idx[k]];
            points.push(x);
            w *= wk;
        }
        weights.push(w);
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    (points, weights)
}

/// Tensor rule on a box: flat points (row-major, last axis fastest) and weights.
pub fn box_rule(region: &AxisBox, k: usize, rule: Rule) -> (Vec<f64>, Vec<f64>) {
    let axes: Vec<Vec<(f64, f64)>> =
        region.min.iter().zip(&region.sides).map(|(&lo, &len)| axis_rule(lo, len, k, rule)).collect();
    tensor(&axes)
}

/// Closed grid on a box with `2k + 1` nodes per axis, unit weights.
pub fn box_closed(region: &AxisBox, k: usize) -> Vec<f64> {
    let axes: Vec<Vec<(f64, f64)>> = region
        .min
        .iter()
        .zip(&region.sides)
        .map(|(&lo, &len)| closed_axis(lo, len, k).into_iter().map(|x| (x, 1.0)).collect())
        .collect();
    tensor(&axes).0
}

/// Intersection of a hyperplane in `R^3` with a box, as a convex polygon in
/// an orthonormal frame of the plane.
#[derive(Debug, Clone)]
pub struct PlaneSlice {
    /// Point of the plane closest to the origin.
    pub origin: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    /// Polygon vertices in frame coordinates, counterclockwise.
    pub polygon: Vec<[f64; 2]>,
}

impl PlaneSlice {
    pub fn lift(&self, u: [f64; 2]) -> Vec<f64> {
        let p = add_scaled(&self.origin, u[0], &self.frame[0]);
        add_scaled(&p, u[1], &self.frame[1])
    }

    pub fn area(&self) -> f64 {
        let m = self.polygon.len();
        0.5 * (0..m)
            .map(|i| {
                let (a, b) = (self.polygon[i], self.polygon[(i + 1) % m]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }
}

/// Exact slice of a three-dimensional box by a plane; `None` when the plane
/// misses the box or only touches it in a set of zero area.
pub fn plane_slice(region: &AxisBox, plane: &Hyperplane) -> Option<PlaneSlice> {
    if region.dim() != 3 {
        return None;
    }
    let e = &plane.normal;
    let origin = scale(e, plane.offset);
    let frame = complement_basis(e);
    let corners = region.corners();
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for i in 0..corners.len() {
        for j in (i + 1)..corners.len() {
            let differing = (0..3).filter(|&k| corners[i][k] != corners[j][k]).count();
            if differing != 1 {
                continue;
            }
            let (da, db) = (dot(e, &corners[i]) - plane.offset, dot(e, &corners[j]) - plane.offset);
            if (da > 0.0 && db > 0.0) || (da < 0.0 && db < 0.0) || da == db {
                continue;
            }
            let s = da / (da - db);
            let x = add_scaled(&corners[i], s, &sub(&corners[j], &corners[i]));
            let rel = sub(&x, &origin);
            pts.push([dot(&rel, &frame[0]), dot(&rel, &frame[1])]);
        }
    }
    if pts.len() < 3 {
        return None;
    }
    let c = [
        pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64,
        pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64,
    ];
    pts.sort_by(|a, b| {
        let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
        let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
        ta.total_cmp(&tb)
    });
    let scale_len = region.diam();
    pts.dedup_by(|a, b| (a[0] - b[0]).hypot(a[1] - b[1]) <= 1e-12 * scale_len);
    if pts.len() > 3
        && (pts[0][0] - pts[pts.len() - 1][0]).hypot(pts[0][1] - pts[pts.len() - 1][1]) <= 1e-12 * scale_len
    {
        pts.pop();
    }
    let slice = PlaneSlice { origin, frame, polygon: pts };
    (slice.polygon.len() >= 3 && slice.area() > 1e-14 * scale_len * scale_len).then_some(slice)
}

/// Centroid rule on a convex polygon: fan triangulation from the vertex
/// average, each triangle split into `k^2` similar sub-triangles.
pub fn polygon_rule(polygon: &[[f64; 2]], k: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let m = polygon.len() as f64;
    let c = [polygon.iter().map(|p| p[0]).sum::<f64>() / m, polygon.iter().map(|p| p[1]).sum::<f64>() / m];
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for i in 0..polygon.len() {
        let (a, b) = (polygon[i], polygon[(i + 1) % polygon.len()]);
        let area = 0.5 * ((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0])).abs();
        if area == 0.0 {
            continue;
        }
        let w = area / (k * k) as f64;
        let at = |u: f64, v: f64| {
            [c[0] + u * (a[0] - c[0]) + v * (b[0] - c[0]), c[1] + u * (a[1] - c[1]) + v * (b[1] - c[1])]
        };
        let h = 1.0 / k as f64;
        for i in 0..k {
            for j in 0..k - i {
                let (u, v) = (i as f64 * h, j as f64 * h);
                pts.push(at(u + h / 3.0, v + h / 3.0));
                wts.push(w);
                if i + j + 1 < k {
                    pts.push(at(u + 2.0 * h / 3.0, v + 2.0 * h / 3.0));
                    wts.push(w);
                }
            }
        }
    }
    (pts, wts)
}

/// Lattice points `(i/k, j/k)` in barycentric coordinates of every fan
/// triangle, plus sub-triangle centroids; used for sup norms on slices.
pub fn polygon_closed(polygon: &[[f64; 2]], k: usize) -> Vec<[f64; 2]> {
    let m = polygon.len() as f64;
    let c = [polygon.iter().map(|p| p[0]).sum::<f64>() / m, polygon.iter().map(|p| p[1]).sum::<f64>() / m];
    let mut pts = polygon_rule(polygon, k).0;
    for i in 0..polygon.len() {
        let (a, b) = (polygon[i], polygon[(i + 1) % polygon.len()]);
        for p in 0..=k {
            for q in 0..=(k - p) {
                let (u, v) = (p as f64 / k as f64, q as f64 / k as f64);
                pts.push([c[0] + u * (a[0] - c[0]) + v * (b[0] - c[0]), c[1] + u * (a[1] - c[1]) + v * (b[1] - c[1])]);
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for k in [3, 5, 9] {
            let r = gauss_legendre(k);
            let total: f64 = r.iter().map(|(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-13);
            let deg = 2 * k - 2;
            let exact = 2.0 / (deg + 1) as f64;
            let approx: f64 = r.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((approx - exact).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn midpoint_nodes_sit_on_closed_grid() {
        let mid = axis_rule(-0.3, 1.7, 9, Rule::Midpoint);
        let closed = closed_axis(-0.3, 1.7, 9);
        for (i, (x, _)) in mid.iter().enumerate() {
            assert_eq!(*x, closed[2 * i + 1]);
        }
    }

    #[test]
    fn box_weights_sum_to_volume() {
        let b = AxisBox::new(vec![0.0, 1.0, -2.0], vec![0.5, 2.0, 3.0]).unwrap();
        for rule in [Rule::Midpoint, Rule::GaussLegendre] {
            let (pts, w) = box_rule(&b, 5, rule);
            assert_eq!(pts.len(), 3 * 125);
            assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_diagonal_slice_is_a_hexagon() {
        let b = AxisBox::cube(vec![0.0; 3], 1.0).unwrap();
        let e = vec![1.0 / 3f64.sqrt(); 3];
        let p = Hyperplane::new(e, 1.5 / 3f64.sqrt()).unwrap();
        let s = plane_slice(&b, &p).unwrap();
        assert_eq!(s.polygon.len(), 6);
        let exact = 3.0 * 3f64.sqrt() / 4.0;
        assert!((s.area() - exact).abs() < 1e-12);
        let (pts, w) = polygon_rule(&s.polygon, 7);
        assert!((w.iter().sum::<f64>() - exact).abs() < 1e-12);
        for u in pts {
            assert!(b.contains(&s.lift(u), 1e-12));
        }
    }

    #[test]
    fn axis_slice_and_miss() {
        let b = AxisBox::cube(vec![0.0; 3], 2.0).unwrap();
        let s = plane_slice(&b, &Hyperplane::new(vec![0.0, 0.0, 1.0], 0.5).unwrap()).unwrap();
        assert!((s.area() - 4.0).abs() < 1e-12);
        assert!(plane_slice(&b, &Hyperplane::new(vec![1.0, 0.0, 0.0], 5.0).unwrap()).is_none());
    }

    #[test]
    fn centroid_rule_is_exact_for_linear_integrands() {
        let tri = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        let (pts, w) = polygon_rule(&tri, 4);
        let integral: f64 = pts.iter().zip(&w).map(|(p, w)| w * (1.0 + p[0] + 3.0 * p[1])).sum();
        // area 1, centroid (2/3, 1/3)
        assert!((integral - (1.0 + 2.0 / 3.0 + 1.0)).abs() < 1e-12);
    }
}
