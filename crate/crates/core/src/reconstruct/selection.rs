//! Randomized search for a transversal family of nearly optimal hyperplanes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{beta_integralgeometric, beta_p_restricted, slice_coordinates, Slice};
use crate::error::{Error, Result};
use crate::fitting::AffineFit;
use crate::funcmodel::Field;
use crate::geometry::{
    intersect_hyperplanes, plane_metric, regular_simplex_planes, transversality, AffineMap, AxisBox, Hyperplane,
};
use crate::linalg::{add_scaled, norm};
use crate::quadrature::QuadratureSpec;
use crate::rng::{self, op, unit_vector};

use super::ReconstructParams;

/// Draws evaluated together; fixed so that the number of draws examined does
/// not depend on the thread count.
const BATCH: usize = 8;

/// Value `|f(x) - A_j(x)|` at a corner `x` of the simplex lying on plane `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerMismatch {
    pub corner: usize,
    pub plane: usize,
    pub value: f64,
}

/// A draw of perturbed planes with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSelection {
    pub base: Vec<Hyperplane>,
    pub perturbed: Vec<Hyperplane>,
    /// L2 fit on `CQ ∩ V'_j`, in the slice frame of `V'_j`.
    pub fits: Vec<AffineFit>,
    pub metrics: Vec<f64>,
    /// `β_2(CQ, V'_j)`
    pub plane_betas: Vec<f64>,
    /// Corner `k` is the common point of all planes except `k`.
    pub corners: Vec<Vec<f64>>,
    pub mismatches: Vec<CornerMismatch>,
    pub max_metric: f64,
    pub max_plane_beta: f64,
    pub max_mismatch: f64,
    /// `β^{n-1}_{2,2}(CQ)`, the acceptance reference.
    pub reference: f64,
    pub transversality: f64,
    pub required_transversality: f64,
    pub score: f64,
    pub draw: usize,
    pub draws_evaluated: usize,
    pub accepted: bool,
}

impl PlaneSelection {
    /// The fitted map of plane `j` evaluated at a point of that plane.
    pub fn plane_value(&self, j: usize, x: &[f64]) -> f64 {
        let slice = Slice::Plane(self.perturbed[j].clone());
        self.fits[j].map.eval(&slice_coordinates(&slice, x))
    }
}

/// Base planes: faces of a regular simplex centred in `Q` whose inscribed
/// ball contains `10cQ`.
pub fn base_planes(region: &AxisBox, inner: f64) -> Vec<Hyperplane> {
    let n = region.dim();
    let half_diag = 0.5 * (n as f64).sqrt() * region.sides[0];
    regular_simplex_planes(&region.center(), 10.0 * inner * half_diag)
}

fn perturb<R: Rng>(rng: &mut R, base: &Hyperplane, eps: f64) -> Hyperplane {
    let n = base.dim();
    loop {
        let radius = eps * rng.random::<f64>().powf(1.0 / n as f64);
        let w = unit_vector(rng, n);
        let e = add_scaled(&base.normal, radius, &w);
        let ne = norm(&e);
        let normal: Vec<f64> = e.iter().map(|c| c / ne).collect();
        let candidate = Hyperplane { normal, offset: base.offset + eps * rng.random::<f64>() };
        if plane_metric(base, &candidate) <= eps {
            return candidate;
        }
    }
}

fn evaluate_draw<F: Field + ?Sized>(
    f: &F,
    outer_box: &AxisBox,
    base: &[Hyperplane],
    params: &ReconstructParams,
    required: f64,
    reference: f64,
    draw: usize,
    quad: &QuadratureSpec,
) -> Result<PlaneSelection> {
    let n = outer_box.dim();
    let mut rng = rng::stream(params.seed, rng::mix(&[draw as u64]), op::SELECTION);
    let perturbed: Vec<Hyperplane> = base.iter().map(|b| perturb(&mut rng, b, params.eps)).collect();
    let metrics: Vec<f64> = base.iter().zip(&perturbed).map(|(a, b)| plane_metric(a, b)).collect();
    let tau = transversality(&perturbed);
    let mut corners = Vec::with_capacity(n + 1);
    let mut valid = tau >= required;
    if valid {
        for skip in 0..=n {
            let planes: Vec<Hyperplane> =
                perturbed.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| p.clone()).collect();
            match intersect_hyperplanes(&planes) {
                Ok(x) if outer_box.contains(&x, 0.0) => corners.push(x),
                Ok(_) | Err(Error::ParallelOrDegenerate { .. }) => {
                    valid = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    let mut fits = Vec::with_capacity(n + 1);
    let mut plane_betas = Vec::with_capacity(n + 1);
    for p in &perturbed {
        let slice = Slice::Plane(p.clone());
        match beta_p_restricted(f, outer_box, &slice, 2.0, quad, None) {
            Ok(r) => {
                let map = r.map.clone().unwrap_or_else(|| AffineMap::constant(n - 1, 0.0));
                fits.push(AffineFit { map, objective: r.value, norm: crate::fitting::FitNorm::L2, constraint: None });
                plane_betas.push(r.value);
            }
            Err(Error::EmptyIntersection) => {
                valid = false;
                fits.push(AffineFit {
                    map: AffineMap::constant(n - 1, 0.0),
                    objective: f64::INFINITY,
                    norm: crate::fitting::FitNorm::L2,
                    constraint: None,
                });
                plane_betas.push(f64::INFINITY);
            }
            Err(e) => return Err(e),
        }
    }
    let mut mismatches = Vec::new();
    if valid {
        for (k, x) in corners.iter().enumerate() {
            let fx = f.value(x);
            for j in (0..=n).filter(|&j| j != k) {
                let slice = Slice::Plane(perturbed[j].clone());
                let value = (fx - fits[j].map.eval(&slice_coordinates(&slice, x))).abs();
                mismatches.push(CornerMismatch { corner: k, plane: j, value });
            }
        }
    }
    let max_metric = metrics.iter().copied().fold(0.0, f64::max);
    let max_plane_beta = plane_betas.iter().copied().fold(0.0, f64::max);
    let max_mismatch = mismatches.iter().map(|m| m.value).fold(0.0, f64::max);
    let score =
        if valid { (max_plane_beta / params.kappa_b).max(max_mismatch / params.kappa_c) } else { f64::INFINITY };
    let accepted = valid && max_metric <= params.eps && score <= reference * (1.0 + 1e-12) + 1e-10;
    Ok(PlaneSelection {
        base: base.to_vec(),
        perturbed,
        fits,
        metrics,
        plane_betas,
        corners,
        mismatches,
        max_metric,
        max_plane_beta,
        max_mismatch,
        reference,
        transversality: tau,
        required_transversality: required,
        score,
        draw,
        draws_evaluated: 0,
        accepted,
    })
}

/// `β^{n-1}_{2,2}` on the outer box, the reference for the acceptance test.
pub(crate) fn plane_reference<F: Field + ?Sized>(f: &F, outer_box: &AxisBox, quad: &QuadratureSpec) -> Result<f64> {
    let n = outer_box.dim();
    Ok(beta_integralgeometric(f, outer_box, n - 1, 2.0, 2.0, quad)?.value)
}

pub(crate) fn select_with_reference<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    params: &ReconstructParams,
    reference: f64,
    quad: &QuadratureSpec,
) -> Result<PlaneSelection> {
    let outer_box = region.dilate(params.outer);
    let base = base_planes(region, params.inner);
    let base_tau = transversality(&base);
    let tau = params.tau.unwrap_or(base_tau);
    if !(tau > 0.0) || tau > base_tau * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "transversality {tau} must be positive and at most that of the base planes ({base_tau})"
        )));
    }
    let mut best: Option<PlaneSelection> = None;
    let mut start = 0;
    while start < params.budget {
        let end = (start + BATCH).min(params.budget);
        let draws: Vec<PlaneSelection> = (start..end)
            .into_par_iter()
            .map(|d| evaluate_draw(f, &outer_box, &base, params, 0.5 * tau, reference, d, quad))
            .collect::<Result<_>>()?;
        for s in draws {
            if s.accepted {
                return Ok(PlaneSelection { draws_evaluated: end, ..s });
            }
            if best.as_ref().is_none_or(|b| s.score < b.score) {
                best = Some(s);
            }
        }
        start = end;
    }
    let best = best.ok_or_else(|| Error::InvalidInput("search budget must be positive".into()))?;
    Err(Error::BudgetExhausted {
        budget: params.budget,
        best: Box::new(PlaneSelection { draws_evaluated: params.budget, ..best }),
    })
}

/// Searches perturbations `V'_j` of the faces of a regular simplex around
/// `Q` such that the family stays `τ/2`-transversal, each `V'_j` is within
/// `ε` of its base plane, and both the restricted coefficients
/// `β_2(CQ, V'_j)` and the corner mismatches are within `κ_b`, `κ_c` times
/// `β^{n-1}_{2,2}(CQ)`. The lowest-index accepted draw wins; otherwise the
/// draw with the smallest score is returned inside `BudgetExhausted`.
pub fn select_transversal_planes<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    params: &ReconstructParams,
    quad: &QuadratureSpec,
) -> Result<PlaneSelection> {
    params.validate(region)?;
    f.check_region(&region.dilate(params.outer))?;
    let reference = plane_reference(f, &region.dilate(params.outer), quad)?;
    select_with_reference(f, region, params, reference, quad)
}
