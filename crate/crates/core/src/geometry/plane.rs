use serde::{Deserialize, Serialize};

use super::combinations;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};

/// Determinant magnitude below which a set of normals counts as degenerate.
pub const DET_TOL: f64 = 1e-10;

/// Affine hyperplane `{x : x . normal = offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    /// Normalizes `(normal, offset)` and fixes the sign so that the first
    /// nonzero normal component is positive.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let mut h = Self::oriented(normal, offset)?;
        if let Some(first) = h.normal.iter().find(|c| **c != 0.0) {
            if *first < 0.0 {
                h.normal.iter_mut().for_each(|c| *c = -*c);
                h.offset = -h.offset;
            }
        }
        Ok(h)
    }

    /// Normalizes but keeps the given orientation.
    pub fn oriented(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let nv = norm(&normal);
        if !(nv > 0.0) || !nv.is_finite() {
            return Err(Error::InvalidInput("hyperplane normal must be nonzero".into()));
        }
        Ok(Self { normal: normal.iter().map(|c| c / nv).collect(), offset: offset / nv })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        dot(x, &self.normal) - self.offset
    }

    /// Sign-identified copy with the canonical orientation.
    pub fn canonical(&self) -> Self {
        Self::new(self.normal.clone(), self.offset).expect("unit normal")
    }
}

/// Metric on hyperplanes identifying `(e, t)` with `(-e, -t)`.
pub fn plane_metric(a: &Hyperplane, b: &Hyperplane) -> f64 {
    let mut minus = (a.offset - b.offset).powi(2);
    let mut plus = (a.offset + b.offset).powi(2);
    for (x, y) in a.normal.iter().zip(&b.normal) {
        minus += (x - y).powi(2);
        plus += (x + y).powi(2);
    }
    minus.min(plus).sqrt()
}

/// Parabolic distance `|x - y| + |s - t|^{1/2}`; the last coordinate is time.
pub fn parabolic_distance(p: &[f64], q: &[f64]) -> f64 {
    let m = p.len() - 1;
    let space: f64 = p[..m].iter().zip(&q[..m]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    space + (p[m] - q[m]).abs().sqrt()
}

fn normal_matrix(planes: &[&Hyperplane]) -> Vec<f64> {
    planes.iter().flat_map(|p| p.normal.iter().copied()).collect()
}

/// The unique common point of `n` hyperplanes in `R^n`.
pub fn intersect_hyperplanes(planes: &[Hyperplane]) -> Result<Vec<f64>> {
    let refs: Vec<&Hyperplane> = planes.iter().collect();
    intersect_refs(&refs)
}

pub(crate) fn intersect_refs(planes: &[&Hyperplane]) -> Result<Vec<f64>> {
    let n = planes.first().map(|p| p.dim()).unwrap_or(0);
    if n == 0 || planes.len() != n || planes.iter().any(|p| p.dim() != n) {
        return Err(Error::InvalidInput(format!("need exactly n hyperplanes in R^n, got {} planes", planes.len())));
    }
    let m = normal_matrix(planes);
    let det = linalg::det(&m, n);
    if det.abs() < DET_TOL {
        return Err(Error::ParallelOrDegenerate { det });
    }
    let rhs: Vec<f64> = planes.iter().map(|p| p.offset).collect();
    linalg::solve(&m, &rhs, n, 0.0).map_err(|_| Error::ParallelOrDegenerate { det })
}

/// Minimum of `|det|` of the normals over all `n`-element subsets.
pub fn transversality(planes: &[Hyperplane]) -> f64 {
    let Some(n) = planes.first().map(|p| p.dim()) else {
        return 0.0;
    };
    combinations(planes.len(), n)
        .into_iter()
        .map(|subset| {
            let refs: Vec<&Hyperplane> = subset.iter().map(|&i| &planes[i]).collect();
            linalg::det(&normal_matrix(&refs), n).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Line `{base + s dir}` with `base . dir = 0`, clipped to `[s0, s1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSeg {
    pub base: Vec<f64>,
    pub dir: Vec<f64>,
    pub s0: f64,
    pub s1: f64,
}

impl LineSeg {
    /// Line through `point` with unit direction `dir`, re-based on `dir^⊥`.
    pub fn through(point: &[f64], dir: &[f64]) -> Self {
        let along = dot(point, dir);
        let base = linalg::add_scaled(point, -along, dir);
        Self { base, dir: dir.to_vec(), s0: f64::NEG_INFINITY, s1: f64::INFINITY }
    }

    pub fn point(&self, s: f64) -> Vec<f64> {
        linalg::add_scaled(&self.base, s, &self.dir)
    }

    pub fn length(&self) -> f64 {
        self.s1 - self.s0
    }

    /// Restricts the parameter interval to the part inside `region`.
    pub fn clipped(&self, region: &super::AxisBox) -> Option<Self> {
        let (a, b) = region.clip_line(&self.base, &self.dir)?;
        let (s0, s1) = (a.max(self.s0), b.min(self.s1));
        (s1 > s0).then(|| Self { base: self.base.clone(), dir: self.dir.clone(), s0, s1 })
    }
}

/// `A(x) = gradient . x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub gradient: Vec<f64>,
    pub intercept: f64,
}

impl AffineMap {
    pub fn new(gradient: Vec<f64>, intercept: f64) -> Self {
        Self { gradient, intercept }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(vec![0.0; dim], c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.gradient, x) + self.intercept
    }

    pub fn lipschitz(&self) -> f64 {
        norm(&self.gradient)
    }

    /// Same map expressed in coordinates shifted by `v` (`A'(y) = A(y + v)`).
    pub fn shifted(&self, v: &[f64]) -> Self {
        Self::new(self.gradient.clone(), self.intercept + dot(&self.gradient, v))
    }
}
