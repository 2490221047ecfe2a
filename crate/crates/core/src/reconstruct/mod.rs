//! Reconstruction of a global affine approximation from a transversal
//! family of nearly optimal hyperplanes, and the resulting comparison of
//! `β_2(cQ)` with the combined coefficient of `CQ`.
//!
//! All geometry is carried out in coordinates where `Q` is the unit cube
//! `[0, 1]^n`; the field is rescaled accordingly (`g(y) = f(x_0 + ℓy)/ℓ`),
//! which leaves every coefficient unchanged. Planes, corners and per-plane
//! fits in the reports are expressed in these coordinates; the global map is
//! converted back to the original ones.

mod lines;
mod planar;
mod selection;

pub use lines::{line_family, LineFamily, CAP_RADIUS};
pub use planar::{planar_pipeline, PlanarReport};
pub use selection::{base_planes, select_transversal_planes, CornerMismatch, PlaneSelection};

use serde::{Deserialize, Serialize};

use crate::beta::{beta_integralgeometric, cube_samples, normalized};
use crate::calibration;
use crate::error::{Error, Result};
use crate::fitting::{fit_affine_l2, objective, FitNorm};
use crate::funcmodel::Field;
use crate::geometry::{simplex_from_planes, AffineMap, AxisBox};
use crate::linalg;
use crate::quadrature::QuadratureSpec;

/// Combined coefficient with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedBeta {
    pub value: f64,
    pub stderr: f64,
    /// `β^{n-1}_{2,2}`
    pub plane: f64,
    /// `β^1_{∞,2}`
    pub line: f64,
}

/// `sqrt(β^{n-1}_{2,2}^2 + β^1_{∞,2}^2)`.
pub fn combined_beta<F: Field + ?Sized>(f: &F, region: &AxisBox, quad: &QuadratureSpec) -> Result<CombinedBeta> {
    let n = region.dim();
    if n < 2 {
        return Err(Error::InvalidInput("the combined coefficient needs n >= 2".into()));
    }
    let plane = beta_integralgeometric(f, region, n - 1, 2.0, 2.0, quad)?;
    let line = beta_integralgeometric(f, region, 1, f64::INFINITY, 2.0, quad)?;
    let value = plane.value.hypot(line.value);
    let stderr = if value > 0.0 {
        ((plane.value * plane.stderr).powi(2) + (line.value * line.stderr).powi(2)).sqrt() / value
    } else {
        0.0
    };
    Ok(CombinedBeta { value, stderr, plane: plane.value, line: line.value })
}

/// Affine map taking the given values at `n + 1` affinely independent corners.
pub fn build_global_affine(corners: &[Vec<f64>], values: &[f64]) -> Result<AffineMap> {
    let n = corners.first().map(|c| c.len()).unwrap_or(0);
    if n == 0 || corners.len() != n + 1 || values.len() != n + 1 || corners.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput(format!(
            "need n + 1 corners in R^n and one value per corner, got {} corners",
            corners.len()
        )));
    }
    let scale =
        corners.iter().flat_map(|a| corners.iter().map(move |b| linalg::norm(&linalg::sub(a, b)))).fold(0.0, f64::max);
    let edges: Vec<f64> = corners[1..].iter().flat_map(|c| linalg::sub(c, &corners[0])).collect();
    let det = linalg::det(&edges, n);
    if !(scale > 0.0) || det.abs() <= 1e-12 * scale.powi(n as i32) {
        return Err(Error::DegenerateSimplex(format!("corners are affinely dependent (det = {det:e})")));
    }
    let mut system = Vec::with_capacity((n + 1) * (n + 1));
    for c in corners {
        system.extend_from_slice(c);
        system.push(1.0);
    }
    let x = linalg::solve(&system, values, n + 1, 0.0)
        .map_err(|p| Error::DegenerateSimplex(format!("interpolation system is singular (pivot {:e})", p.0)))?;
    Ok(AffineMap::new(x[..n].to_vec(), x[n]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructParams {
    /// Size `c` of the small cube `cQ`.
    pub inner: f64,
    /// Size `C` of the large cube `CQ`.
    pub outer: f64,
    /// Bound on the distance between each base plane and its perturbation.
    pub eps: f64,
    /// Required transversality of the base family; the perturbed family must
    /// reach half of it. Defaults to that of the regular simplex.
    pub tau: Option<f64>,
    pub budget: usize,
    pub kappa_b: f64,
    pub kappa_c: f64,
    pub seed: u64,
    /// Line directions compared in the line family.
    pub directions: usize,
    /// Foot points per axis of the line family grid.
    pub line_grid: usize,
}

impl Default for ReconstructParams {
    fn default() -> Self {
        Self {
            inner: 1.0 / 20.0,
            outer: 8.0,
            eps: 0.05,
            tau: None,
            budget: 64,
            kappa_b: calibration::KAPPA_B,
            kappa_c: calibration::KAPPA_C,
            seed: 7,
            directions: 8,
            line_grid: 7,
        }
    }
}

impl ReconstructParams {
    pub fn validate(&self, region: &AxisBox) -> Result<()> {
        let n = region.dim();
        if n < 2 {
            return Err(Error::InvalidInput("reconstruction needs n >= 2".into()));
        }
        if region.sides.iter().any(|s| (s - region.sides[0]).abs() > 1e-12 * region.sides[0]) {
            return Err(Error::InvalidInput("reconstruction needs a cube".into()));
        }
        let checks = [
            (self.inner > 0.0 && self.inner <= 0.1, "inner scale c must lie in (0, 1/10]"),
            (self.outer >= 1.0 && self.outer.is_finite(), "outer scale C must be >= 1"),
            (self.eps > 0.0 && self.eps < 1.0, "eps must lie in (0, 1)"),
            (self.budget > 0, "budget must be positive"),
            (self.kappa_b > 0.0 && self.kappa_c > 0.0, "acceptance multipliers must be positive"),
            (self.directions > 0 && self.line_grid > 0, "line family sizes must be positive"),
            (self.tau.is_none_or(|t| t > 0.0), "tau must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidInput((*msg).into())),
            None => Ok(()),
        }
    }
}

/// `g(y) = f(origin + side y) / side`.
struct UnitFrame<'a, F: ?Sized> {
    f: &'a F,
    origin: Vec<f64>,
    side: f64,
}

impl<F: Field + ?Sized> UnitFrame<'_, F> {
    fn to_original(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.origin).map(|(y, o)| o + self.side * y).collect()
    }
}

impl<F: Field + ?Sized> Field for UnitFrame<'_, F> {
    fn dim(&self) -> usize {
        self.origin.len()
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.f.value(&self.to_original(y)) / self.side
    }

    fn check_region(&self, region: &AxisBox) -> Result<()> {
        let original =
            AxisBox::new(self.to_original(&region.min), region.sides.iter().map(|s| s * self.side).collect())?;
        self.f.check_region(&original)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub params: ReconstructParams,
    pub dim: usize,
    pub selection: PlaneSelection,
    /// Global map in the original coordinates.
    pub map: AffineMap,
    /// Largest `|A - f|` at the simplex corners.
    pub corner_error: f64,
    /// `β_2(cQ)` from a direct fit.
    pub beta2_small: f64,
    /// `β_2`-normalized residual of the global map on `cQ`.
    pub beta2_via_map: f64,
    pub combined: CombinedBeta,
    /// `β_2(cQ) / β(CQ)`; zero when both are at roundoff level.
    pub ratio: f64,
    pub ratio_via_map: f64,
    pub line_family: LineFamily,
    pub planar: Option<PlanarReport>,
    /// `|planar β_2(cQ) - β_2(cQ)| / β_2(cQ)`.
    pub planar_discrepancy: Option<f64>,
}

/// Values below this are treated as roundoff in ratios.
const ROUNDOFF: f64 = 1e-10;

fn ratio(num: f64, den: f64) -> f64 {
    if num <= ROUNDOFF && den <= ROUNDOFF {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Relative disagreement with an absolute floor for values at roundoff level.
pub fn relative_discrepancy(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff <= ROUNDOFF {
        0.0
    } else {
        diff / a.abs().max(b.abs())
    }
}

/// Full reconstruction on the cube `region`: plane selection on `CQ`, the
/// simplex and its corner interpolant, `β_2(cQ)` directly and through the
/// interpolant, the combined coefficient of `CQ`, the line family and, for
/// `n = 2`, the planar construction. An exhausted search still produces a
/// report from the best draw, with `selection.accepted == false`.
pub fn verify_form1<F: Field + ?Sized>(
    f: &F,
    region: &AxisBox,
    params: &ReconstructParams,
    quad: &QuadratureSpec,
) -> Result<ReconstructionReport> {
    params.validate(region)?;
    quad.validate()?;
    let n = region.dim();
    let g = UnitFrame { f, origin: region.min.clone(), side: region.sides[0] };
    let unit = AxisBox::cube(vec![0.0; n], 1.0)?;
    let outer_box = unit.dilate(params.outer);
    let small = unit.dilate(params.inner);
    g.check_region(&outer_box)?;
    let quad = quad.clone().with_seed(params.seed);

    let combined = combined_beta(&g, &outer_box, &quad)?;
    let selection = match selection::select_with_reference(&g, &unit, params, combined.plane, &quad) {
        Ok(s) => s,
        Err(Error::BudgetExhausted { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let simplex = simplex_from_planes(&selection.perturbed)?;
    let values: Vec<f64> = simplex.vertices.iter().map(|v| g.value(v)).collect();
    let unit_map = build_global_affine(&simplex.vertices, &values)?;
    let corner_error =
        simplex.vertices.iter().zip(&values).map(|(v, y)| (unit_map.eval(v) - y).abs()).fold(0.0, f64::max);

    let samples = cube_samples(&g, &small, 2.0, &quad);
    let w = samples.total_weight();
    let direct = fit_affine_l2(&samples)?;
    let beta2_small = normalized(direct.objective * w, small.diam(), n, 2.0);
    let beta2_via_map = normalized(objective(&samples, &unit_map, FitNorm::L2) * w, small.diam(), n, 2.0);

    let family = line_family(
        &g,
        &small,
        &outer_box,
        &simplex,
        &unit_map,
        params.directions,
        params.line_grid,
        params.seed,
        &quad,
    )?;
    let (planar, planar_discrepancy) = if n == 2 {
        let p = planar_pipeline(&g, &unit, params.inner, params.seed, &quad)?;
        let d = relative_discrepancy(p.beta2, beta2_small);
        (Some(p), Some(d))
    } else {
        (None, None)
    };

    // A(x) = ℓ g_A((x - x0)/ℓ) = ∇g_A . (x - x0) + ℓ b.
    let map = AffineMap::new(
        unit_map.gradient.clone(),
        region.sides[0] * unit_map.intercept - linalg::dot(&unit_map.gradient, &region.min),
    );
    Ok(ReconstructionReport {
        params: params.clone(),
        dim: n,
        selection,
        map,
        corner_error,
        beta2_small,
        beta2_via_map,
        combined,
        ratio: ratio(beta2_small, combined.value),
        ratio_via_map: ratio(beta2_via_map, combined.value),
        line_family: family,
        planar,
        planar_discrepancy,
    })
}

impl ReconstructionReport {
    pub const CSV_HEADER: &'static str =
        "n,c,C,eps,tau,seed,accepted,draw,draws_evaluated,score,max_metric,max_plane_beta,max_mismatch,\
plane_beta,line_beta,combined_beta,combined_stderr,beta2_small,beta2_via_map,ratio,ratio_via_map,corner_error,\
line_sup_beta_sq,line_boundary_sq,planar_beta2,planar_discrepancy";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.12e}")).unwrap_or_default();
        let s = &self.selection;
        [
            self.dim.to_string(),
            format!("{}", self.params.inner),
            format!("{}", self.params.outer),
            format!("{}", self.params.eps),
            format!("{:.12e}", s.required_transversality * 2.0),
            self.params.seed.to_string(),
            s.accepted.to_string(),
            s.draw.to_string(),
            s.draws_evaluated.to_string(),
            format!("{:.12e}", s.score),
            format!("{:.12e}", s.max_metric),
            format!("{:.12e}", s.max_plane_beta),
            format!("{:.12e}", s.max_mismatch),
            format!("{:.12e}", self.combined.plane),
            format!("{:.12e}", self.combined.line),
            format!("{:.12e}", self.combined.value),
            format!("{:.12e}", self.combined.stderr),
            format!("{:.12e}", self.beta2_small),
            format!("{:.12e}", self.beta2_via_map),
            format!("{:.12e}", self.ratio),
            format!("{:.12e}", self.ratio_via_map),
            format!("{:.12e}", self.corner_error),
            format!("{:.12e}", self.line_family.sup_beta_sq),
            format!("{:.12e}", self.line_family.boundary_sq),
            opt(self.planar.as_ref().map(|p| p.beta2)),
            opt(self.planar_discrepancy),
        ]
        .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::FunctionField;

    fn quick() -> QuadratureSpec {
        QuadratureSpec::default().with_mc_samples(256).with_nodes(9).with_patch_nodes(9)
    }

    #[test]
    fn interpolates_standard_triangle() {
        let corners = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let a = build_global_affine(&corners, &[1.0, 2.0, 3.0]).unwrap();
        assert!((a.intercept - 1.0).abs() < 1e-15);
        assert!((a.gradient[0] - 1.0).abs() < 1e-15 && (a.gradient[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn recovers_affine_coefficients() {
        let f = FunctionField::affine(vec![0.3, -1.7, 2.2], 0.9);
        let corners = vec![vec![0.1, 0.2, 0.3], vec![1.4, -0.2, 0.0], vec![0.0, 2.0, 0.5], vec![0.3, 0.3, -1.1]];
        let values: Vec<f64> = corners.iter().map(|c| f.value(c)).collect();
        let a = build_global_affine(&corners, &values).unwrap();
        assert!((a.intercept - 0.9).abs() < 1e-12);
        for (g, e) in a.gradient.iter().zip([0.3, -1.7, 2.2]) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_corners_are_degenerate() {
        let corners = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(build_global_affine(&corners, &[0.0, 1.0, 2.0]), Err(Error::DegenerateSimplex(_))));
    }

    #[test]
    fn affine_selection_accepts_first_draw() {
        let f = FunctionField::affine(vec![0.4, -0.2], 0.1);
        let q = AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap();
        let s = select_transversal_planes(&f, &q, &ReconstructParams::default(), &quick()).unwrap();
        assert!(s.accepted);
        assert_eq!(s.draw, 0);
        assert!(s.max_plane_beta <= 1e-10 && s.max_mismatch <= 1e-10);
        assert!(s.max_metric <= 0.05);
        let outer = q.dilate(8.0);
        assert!(s.corners.iter().all(|c| outer.contains(c, 0.0)));
    }

    #[test]
    fn base_simplex_contains_tenfold_small_cube() {
        for n in 2..=3 {
            let q = AxisBox::cube(vec![0.0; n], 1.0).unwrap();
            let s = simplex_from_planes(&base_planes(&q, 1.0 / 20.0)).unwrap();
            assert!(q.dilate(0.5).corners().iter().all(|c| s.contains(c, 1e-12)));
        }
    }

    #[test]
    fn affine_reconstruction_is_exact() {
        let f = FunctionField::affine(vec![1.5, -0.5], 0.25);
        let q = AxisBox::cube(vec![2.0, -1.0], 0.5).unwrap();
        let r = verify_form1(&f, &q, &ReconstructParams::default(), &quick()).unwrap();
        assert!(r.beta2_small <= 1e-10 && r.beta2_via_map <= 1e-10);
        assert!(r.combined.value <= 1e-10);
        assert!((r.map.gradient[0] - 1.5).abs() < 1e-10 && (r.map.intercept - 0.25).abs() < 1e-10);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn kink_report_invariants() {
        let f = FunctionField::ridge_kink(2, 0, 0.5);
        let q = AxisBox::cube(vec![0.0, 0.0], 1.0).unwrap();
        let r = verify_form1(&f, &q, &ReconstructParams::default(), &quick()).unwrap();
        assert!(r.corner_error <= 1e-12);
        assert!(r.beta2_small <= r.beta2_via_map + 1e-12);
        assert!(r.selection.max_metric <= 0.05);
        for m in &r.selection.mismatches {
            let x = &r.selection.corners[m.corner];
            let a = r.map.eval(x);
            assert!((a - r.selection.plane_value(m.plane, x)).abs() <= m.value + 1e-12);
        }
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
    }
}
