use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Axis-aligned box given by its minimum corner and per-axis side lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub min: Vec<f64>,
    pub sides: Vec<f64>,
}

impl AxisBox {
    pub fn new(min: Vec<f64>, sides: Vec<f64>) -> Result<Self> {
        if min.len() != sides.len() || min.is_empty() {
            return Err(Error::InvalidInput(format!(
                "box corner has {} coordinates but {} sides",
                min.len(),
                sides.len()
            )));
        }
        if let Some(s) = sides.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::DegenerateBox(format!("side length {s} is not positive")));
        }
        Ok(Self { min, sides })
    }

    pub fn cube(min: Vec<f64>, side: f64) -> Result<Self> {
        let n = min.len();
        Self::new(min, vec![side; n])
    }

    /// The cube `[lo, hi]^n`.
    pub fn symmetric(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi - lo; n])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn max(&self) -> Vec<f64> {
        self.min.iter().zip(&self.sides).map(|(m, s)| m + s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.min.iter().zip(&self.sides).map(|(m, s)| m + 0.5 * s).collect()
    }

    pub fn diam(&self) -> f64 {
        self.sides.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    /// Concentric box with every side (hence the diameter) scaled by `c`.
    pub fn dilate(&self, c: f64) -> Self {
        let center = self.center();
        let sides: Vec<f64> = self.sides.iter().map(|s| s * c).collect();
        let min = center.iter().zip(&sides).map(|(m, s)| m - 0.5 * s).collect();
        Self { min, sides }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(self.min.iter().zip(&self.sides)).all(|(xi, (m, s))| *xi >= m - tol && *xi <= m + s + tol)
    }

    pub fn contains_box(&self, other: &AxisBox, tol: f64) -> bool {
        self.contains(&other.min, tol) && self.contains(&other.max(), tol)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| (0..n).map(|i| self.min[i] + if mask >> i & 1 == 1 { self.sides[i] } else { 0.0 }).collect())
            .collect()
    }

    /// Range of `x . e` over the box.
    pub fn support_interval(&self, e: &[f64]) -> (f64, f64) {
        let base = dot(&self.min, e);
        let lo: f64 = e.iter().zip(&self.sides).map(|(ei, s)| (ei * s).min(0.0)).sum();
        let hi: f64 = e.iter().zip(&self.sides).map(|(ei, s)| (ei * s).max(0.0)).sum();
        (base + lo, base + hi)
    }

    /// Width of the box in direction `e` (unit vector).
    pub fn width(&self, e: &[f64]) -> f64 {
        e.iter().zip(&self.sides).map(|(ei, s)| ei.abs() * s).sum()
    }

    /// `(n-1)`-volume of the orthogonal projection of the box onto `e^⊥`.
    pub fn shadow_area(&self, e: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let face: f64 = (0..n).filter(|&j| j != i).map(|j| self.sides[j]).product();
                e[i].abs() * face
            })
            .sum()
    }

    /// Parameter interval of `{base + s dir}` inside the box, if nonempty.
    pub fn clip_line(&self, base: &[f64], dir: &[f64]) -> Option<(f64, f64)> {
        let mut s0 = f64::NEG_INFINITY;
        let mut s1 = f64::INFINITY;
        for i in 0..self.dim() {
            let lo = self.min[i];
            let hi = self.min[i] + self.sides[i];
            if dir[i].abs() < 1e-15 {
                if base[i] < lo || base[i] > hi {
                    return None;
                }
            } else {
                let a = (lo - base[i]) / dir[i];
                let b = (hi - base[i]) / dir[i];
                s0 = s0.max(a.min(b));
                s1 = s1.min(a.max(b));
            }
        }
        (s1 > s0).then_some((s0, s1))
    }
}

/// Standard dyadic cube `2^{-level} (index + [0,1)^n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: Vec<i64>,
}

impl DyadicCube {
    pub fn new(level: i32, index: Vec<i64>) -> Self {
        Self { level, index }
    }

    pub fn unit(n: usize) -> Self {
        Self::new(0, vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn min_corner(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&k| k as f64 * s).collect()
    }

    pub fn diam(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.side()
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn to_box(&self) -> AxisBox {
        let n = self.dim();
        AxisBox { min: self.min_corner(), sides: vec![self.side(); n] }
    }

    /// The `2^n` children at the next level.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                let index = (0..n).map(|i| 2 * self.index[i] + (mask >> i & 1) as i64).collect();
                DyadicCube::new(self.level + 1, index)
            })
            .collect()
    }

    /// All descendants (including `self`) grouped by relative depth `0..=depth`.
    pub fn descendants(&self, depth: usize) -> Vec<Vec<DyadicCube>> {
        let mut levels = vec![vec![self.clone()]];
        for _ in 0..depth {
            let next = levels.last().unwrap().iter().flat_map(|c| c.children()).collect();
            levels.push(next);
        }
        levels
    }
}

/// Rectangle `I_1 x I_2` in `R^{n-1} x R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicBox {
    /// Minimum corner of the spatial cube `I_1`.
    pub space_min: Vec<f64>,
    /// Side length of `I_1`.
    pub side: f64,
    /// Left endpoint of `I_2`.
    pub t0: f64,
    /// Length of `I_2`.
    pub duration: f64,
    /// True when `duration = side^2` holds by construction.
    pub parabolic: bool,
}

impl ParabolicBox {
    /// Parabolic box with `|I_2| = side^2`.
    pub fn new(space_min: Vec<f64>, side: f64, t0: f64) -> Result<Self> {
        Self::general(space_min, side, t0, side * side).map(|mut b| {
            b.parabolic = true;
            b
        })
    }

    pub fn general(space_min: Vec<f64>, side: f64, t0: f64, duration: f64) -> Result<Self> {
        if !(side > 0.0) || !(duration > 0.0) {
            return Err(Error::DegenerateBox(format!(
                "parabolic box needs positive side and duration (got {side}, {duration})"
            )));
        }
        let parabolic = (duration - side * side).abs() <= 1e-12 * duration.max(side * side);
        Ok(Self { space_min, side, t0, duration, parabolic })
    }

    /// Dimension `n` of the ambient space `R^{n-1} x R`.
    pub fn dim(&self) -> usize {
        self.space_min.len() + 1
    }

    pub fn space_dim(&self) -> usize {
        self.space_min.len()
    }

    /// Diameter of `I_1` in the Euclidean metric.
    pub fn space_diam(&self) -> f64 {
        (self.space_dim() as f64).sqrt() * self.side
    }

    /// Diameter in the parabolic metric, attained between opposite corners.
    pub fn diam(&self) -> f64 {
        self.space_diam() + self.duration.sqrt()
    }

    pub fn measure(&self) -> f64 {
        self.side.powi(self.space_dim() as i32) * self.duration
    }

    pub fn center(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.space_min.iter().map(|m| m + 0.5 * self.side).collect();
        c.push(self.t0 + 0.5 * self.duration);
        c
    }

    /// `C I_1 x C I_2`, concentric.
    pub fn dilate(&self, c: f64) -> Self {
        let side = self.side * c;
        let duration = self.duration * c;
        let space_min = self.space_min.iter().map(|m| m + 0.5 * self.side - 0.5 * side).collect();
        let t0 = self.t0 + 0.5 * self.duration - 0.5 * duration;
        let parabolic = self.parabolic && c == 1.0;
        Self { space_min, side, t0, duration, parabolic }
    }

    pub fn space_box(&self) -> AxisBox {
        AxisBox { min: self.space_min.clone(), sides: vec![self.side; self.space_dim()] }
    }

    /// The box as an axis-aligned region of `R^n` (time is the last axis).
    pub fn to_axis_box(&self) -> AxisBox {
        let mut min = self.space_min.clone();
        min.push(self.t0);
        let mut sides = vec![self.side; self.space_dim()];
        sides.push(self.duration);
        AxisBox { min, sides }
    }
}

/// Dyadic parabolic box: spatial cube in `D_j^{n-1}`, time interval in `D_{2j}^1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParabolicDyadic {
    pub level: i32,
    pub space_index: Vec<i64>,
    pub time_index: i64,
}

impl ParabolicDyadic {
    pub fn unit(n: usize) -> Self {
        Self { level: 0, space_index: vec![0; n - 1], time_index: 0 }
    }

    pub fn to_box(&self) -> ParabolicBox {
        let side = 2f64.powi(-self.level);
        let dt = 4f64.powi(-self.level);
        ParabolicBox {
            space_min: self.space_index.iter().map(|&k| k as f64 * side).collect(),
            side,
            t0: self.time_index as f64 * dt,
            duration: dt,
            parabolic: true,
        }
    }

    /// `2^{n-1}` spatial halves times 4 time quarters.
    pub fn children(&self) -> Vec<ParabolicDyadic> {
        let m = self.space_index.len();
        let mut out = Vec::with_capacity((1 << m) * 4);
        for mask in 0..1usize << m {
            let space_index: Vec<i64> = (0..m).map(|i| 2 * self.space_index[i] + (mask >> i & 1) as i64).collect();
            for q in 0..4 {
                out.push(ParabolicDyadic {
                    level: self.level + 1,
                    space_index: space_index.clone(),
                    time_index: 4 * self.time_index + q,
                });
            }
        }
        out
    }

    pub fn descendants(&self, depth: usize) -> Vec<Vec<ParabolicDyadic>> {
        let mut levels = vec![vec![self.clone()]];
        for _ in 0..depth {
            let next = levels.last().unwrap().iter().flat_map(|c| c.children()).collect();
            levels.push(next);
        }
        levels
    }

    pub fn key(&self) -> u64 {
        let mut idx = self.space_index.clone();
        idx.push(self.time_index);
        crate::rng::cube_key(self.level, &idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_partition_parent() {
        for n in 1..=3 {
            let q = DyadicCube::new(2, vec![1; n]);
            let kids = q.children();
            assert_eq!(kids.len(), 1 << n);
            let total: f64 = kids.iter().map(|c| c.volume()).sum();
            assert_eq!(total, q.volume());
            let parent = q.to_box();
            for c in &kids {
                assert!(parent.contains_box(&c.to_box(), 0.0));
            }
        }
    }

    #[test]
    fn min_corner_is_index_times_side() {
        let q = DyadicCube::new(3, vec![5, -2]);
        assert_eq!(q.min_corner(), vec![5.0 / 8.0, -2.0 / 8.0]);
        assert!((q.diam() - 2f64.sqrt() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn dilation_is_concentric() {
        let b = AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap();
        let d = b.dilate(3.0);
        assert_eq!(d.center(), b.center());
        assert!((d.diam() - 3.0 * b.diam()).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_sides() {
        assert!(AxisBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(ParabolicBox::general(vec![0.0], 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn clip_line_through_square() {
        let b = AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap();
        let (s0, s1) = b.clip_line(&[0.0, 0.5], &[1.0, 0.0]).unwrap();
        assert_eq!((s0, s1), (0.0, 1.0));
        assert!(b.clip_line(&[0.0, 2.0], &[1.0, 0.0]).is_none());
    }

    #[test]
    fn parabolic_children_and_diam() {
        let q = ParabolicDyadic::unit(2);
        let kids = q.children();
        assert_eq!(kids.len(), 8);
        let total: f64 = kids.iter().map(|k| k.to_box().measure()).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(kids.iter().all(|k| k.to_box().parabolic));
        assert_eq!(q.to_box().diam(), 2.0);
        let d = q.to_box().dilate(3.0);
        assert!(!d.parabolic);
        assert_eq!(d.center(), q.to_box().center());
    }

    #[test]
    fn shadow_area_of_unit_square_is_width() {
        let b = AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap();
        let e = [0.6, 0.8];
        assert!((b.shadow_area(&e) - b.width(&e)).abs() < 1e-15);
        let c = AxisBox::cube(vec![0.0; 3], 1.0).unwrap();
        assert!((c.shadow_area(&[0.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
