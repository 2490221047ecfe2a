//! Monte Carlo samplers for the measures on lines and hyperplanes.
//!
//! Hyperplanes are parametrized by a unit normal `e` and offset `t`; lines by
//! a direction `e` and a foot point `v ∈ e^⊥`. Both measures are the
//! rotation-averaged Lebesgue measures in these parameters, scaled so that
//! the family of planes meeting the open unit ball has measure one. The
//! parametrizations cover each plane twice (`e` and `-e`); the scaling
//! constants absorb this.
//!
//! For a region `R`, the planes meeting `R` have measure `E_e[w_R(e)] / 2`,
//! where `w_R(e)` is the width of `R` in direction `e`, and the lines meeting
//! `R` have measure `E_e[|π_e R|] / ω_{n-1}`. Samples carry exactly these
//! per-direction weights.

use rand::Rng;

use super::cells::{AxisBox, ParabolicBox};
use super::plane::{Hyperplane, LineSeg};
use crate::linalg::{add_scaled, complement_basis, dot};
use crate::rng::{self, unit_vector};

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * std::f64::consts::PI / k as f64,
    }
}

/// Normalized measure of the hyperplanes with normal `e` meeting `region`.
pub fn hyperplane_measure(region: &AxisBox, e: &[f64]) -> f64 {
    0.5 * region.width(e)
}

/// Normalized measure of the lines with direction `e` meeting `region`.
pub fn line_measure(region: &AxisBox, e: &[f64]) -> f64 {
    region.shadow_area(e) / unit_ball_volume(region.dim() - 1)
}

/// Samples hyperplanes meeting `region`: `e` uniform on the sphere, `t`
/// uniform on the slab of offsets hitting the region, weight
/// `hyperplane_measure(region, e)`.
pub fn sample_hyperplanes(region: &AxisBox, count: usize, seed: u64) -> Vec<(Hyperplane, f64)> {
    let mut rng = rng::stream(seed, rng::point_key(&region.min), rng::op::HYPERPLANES);
    let n = region.dim();
    (0..count)
        .map(|_| {
            let e = unit_vector(&mut rng, n);
            let (lo, hi) = region.support_interval(&e);
            let t = lo + (hi - lo) * rng.random::<f64>();
            let w = hyperplane_measure(region, &e);
            (Hyperplane { normal: e, offset: t }, w)
        })
        .collect()
}

/// Samples lines meeting `region`: direction uniform on the sphere, foot
/// point uniform on the shadow `π_e(region)` (rejection from its bounding
/// rectangle), weight `line_measure(region, e)`. Every returned segment is
/// clipped to the region and nonempty.
pub fn sample_lines(region: &AxisBox, count: usize, seed: u64) -> Vec<(LineSeg, f64)> {
    let mut rng = rng::stream(seed, rng::point_key(&region.min), rng::op::LINES);
    let n = region.dim();
    let corners = region.corners();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let e = unit_vector(&mut rng, n);
        let frame = complement_basis(&e);
        let bounds: Vec<(f64, f64)> = frame
            .iter()
            .map(|u| {
                corners
                    .iter()
                    .map(|c| dot(c, u))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
            })
            .collect();
        loop {
            let mut base = vec![0.0; n];
            for (u, (lo, hi)) in frame.iter().zip(&bounds) {
                base = add_scaled(&base, lo + (hi - lo) * rng.random::<f64>(), u);
            }
            if let Some((s0, s1)) = region.clip_line(&base, &e) {
                let w = line_measure(region, &e);
                out.push((LineSeg { base, dir: e.clone(), s0, s1 }, w));
                break;
            }
        }
    }
    out
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Random boxes inside `domain` with each side log-uniform in
/// `[lo, hi]` times the corresponding side of `domain` (`0 < lo <= hi <= 1`).
pub fn random_boxes(domain: &AxisBox, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<AxisBox> {
    let mut rng = rng::stream(seed, rng::point_key(&domain.min), rng::op::RANDOM_BOXES);
    (0..count)
        .map(|_| {
            let sides: Vec<f64> = domain.sides.iter().map(|d| d * log_uniform(&mut rng, lo, hi)).collect();
            let min = domain
                .min
                .iter()
                .zip(&domain.sides)
                .zip(&sides)
                .map(|((m, d), s)| m + (d - s) * rng.random::<f64>())
                .collect();
            AxisBox::new(min, sides).expect("positive sides")
        })
        .collect()
}

/// Random parabolic boxes `I × J` with `|J| = |I|^2`, `I` a cube inside
/// `space` and `J` inside `[t0, t1]`. Space sides are log-uniform in
/// `[lo, hi]` times the side of `space`, capped so that `J` fits.
pub fn random_parabolic_boxes(
    space: &AxisBox,
    t0: f64,
    t1: f64,
    count: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Vec<ParabolicBox> {
    let mut key = space.min.clone();
    key.extend([t0, t1]);
    let mut rng = rng::stream(seed, rng::point_key(&key), rng::op::RANDOM_BOXES);
    let width = space.sides.iter().copied().fold(f64::INFINITY, f64::min);
    (0..count)
        .map(|_| {
            let side = (width * log_uniform(&mut rng, lo, hi)).min((t1 - t0).sqrt());
            let min = space.min.iter().zip(&space.sides).map(|(m, d)| m + (d - side) * rng.random::<f64>()).collect();
            let start = t0 + (t1 - t0 - side * side) * rng.random::<f64>();
            ParabolicBox::new(min, side, start).expect("positive side")
        })
        .collect()
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Estimates `∫ 1_S dη` from weighted samples drawn by one of the samplers.
pub fn estimate_measure<T>(samples: &[(T, f64)], mut inside: impl FnMut(&T) -> bool) -> MeasureEstimate {
    let n = samples.len() as f64;
    let values: Vec<f64> = samples.iter().map(|(s, w)| if inside(s) { *w } else { 0.0 }).collect();
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    MeasureEstimate { mean, stderr: (var / n).sqrt() }
}
