//! Deterministic property suite over the function catalog.
//!
//! Every property is reduced to a worst-case number compared against a
//! threshold; the report has one row per property and is byte-stable for a
//! fixed configuration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{beta_integralgeometric, beta_p_cube, beta_p_restricted, carleson_sum, Selector, Slice};
use crate::calibration;
use crate::error::Result;
use crate::funcmodel::{lipschitz_estimate, FunctionField, Metric, TimeTerm};
use crate::geometry::{
    estimate_measure, random_boxes, random_parabolic_boxes, sample_hyperplanes, sample_lines, AxisBox, DyadicCube,
    Hyperplane, LineSeg, ParabolicBox,
};
use crate::linalg::{dot, norm, sub};
use crate::parabolic::{
    combine_affine_bound, dt_carleson_quotient, holder_exponent_check, horizontal_affinity, parabolic_beta2,
    rademacher_probe, vertical_osc,
};
use crate::quadrature::QuadratureSpec;
use crate::reconstruct::{combined_beta, verify_form1, ReconstructParams};
use crate::rng::{self, op};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random boxes per catalog entry for norm monotonicity.
    pub boxes: usize,
    /// Random parabolic boxes per catalog entry for the combination certificate.
    pub parabolic_boxes: usize,
    /// Monte Carlo samples for the measure normalization.
    pub measure_samples: usize,
    /// Run the three-dimensional reconstructions.
    pub reconstruct_3d: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 7, boxes: 200, parabolic_boxes: 100, measure_samples: 100_000, reconstruct_3d: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub property: String,
    pub cases: usize,
    pub failures: usize,
    /// Worst observed value of the tested quantity.
    pub worst: f64,
    pub threshold: f64,
}

impl PropertyRow {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<PropertyRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(PropertyRow::passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("property,cases,failures,worst,threshold,passed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.9e},{:.9e},{}\n",
                r.property,
                r.cases,
                r.failures,
                r.worst,
                r.threshold,
                r.passed()
            ));
        }
        out
    }
}

/// Accumulates a row for properties of the form `value <= threshold`.
struct Tally {
    name: &'static str,
    threshold: f64,
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, threshold: f64) -> Self {
        Self { name, threshold, cases: 0, failures: 0, worst: f64::NEG_INFINITY }
    }

    fn at_most(&mut self, value: f64) {
        self.cases += 1;
        self.worst = self.worst.max(value);
        if !(value <= self.threshold) {
            self.failures += 1;
        }
    }

    /// Records `value >= threshold`; `worst` tracks the minimum.
    fn at_least(&mut self, value: f64) {
        self.cases += 1;
        self.worst = if self.cases == 1 { value } else { self.worst.min(value) };
        if !(value >= self.threshold) {
            self.failures += 1;
        }
    }

    fn row(self) -> PropertyRow {
        PropertyRow {
            property: self.name.into(),
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            threshold: self.threshold,
        }
    }
}

fn unit(n: usize) -> AxisBox {
    AxisBox::cube(vec![0.0; n], 1.0).expect("unit cube")
}

fn affine_annihilation(quad: &QuadratureSpec) -> Result<PropertyRow> {
    let mut t = Tally::new("affine_annihilation", 1e-10);
    let light = quad.clone().with_mc_samples(512);
    for n in 1..=3 {
        let gradient: Vec<f64> = (0..n).map(|i| 0.7 - 0.6 * i as f64).collect();
        let f = FunctionField::affine(gradient.clone(), -0.3);
        let q = AxisBox::new(vec![-0.2; n], (0..n).map(|i| 0.6 + 0.2 * i as f64).collect())?;
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            t.at_most(beta_p_cube(&f, &q, p, quad, None)?.value);
        }
        let dir: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let dir: Vec<f64> = dir.iter().map(|d| d / norm(&dir)).collect();
        let line = Slice::Line(LineSeg::through(&q.center(), &dir));
        t.at_most(beta_p_restricted(&f, &q, &line, 2.0, quad, None)?.value);
        let plane = Slice::Plane(Hyperplane::new(dir.clone(), dot(&dir, &q.center()))?);
        t.at_most(beta_p_restricted(&f, &q, &plane, 2.0, quad, None)?.value);
        for m in [1, n - 1, n] {
            t.at_most(beta_integralgeometric(&f, &q, m, 2.0, 2.0, &light)?.value);
        }
        if n >= 2 {
            t.at_most(combined_beta(&f, &q, &light)?.value);
            let psi = FunctionField::separable(FunctionField::affine(gradient[..n - 1].to_vec(), 0.1), TimeTerm::Zero);
            let pb = ParabolicBox::new(vec![-0.3; n - 1], 0.8, 0.2)?;
            t.at_most(horizontal_affinity(&psi, &pb, quad, None)?);
            t.at_most(vertical_osc(&psi, &pb, quad)?);
            t.at_most(parabolic_beta2(&psi, &pb, quad, None)?);
            t.at_most(dt_carleson_quotient(&psi, &pb, quad)?.value);
        }
    }
    Ok(t.row())
}

fn norm_monotonicity(cfg: &SuiteConfig, quad: &QuadratureSpec) -> Result<PropertyRow> {
    let mut t = Tally::new("norm_monotonicity", 1e-9);
    for n in 1..=2 {
        let domain = AxisBox::cube(vec![-0.5; n], 2.0)?;
        let boxes = random_boxes(&domain, cfg.boxes, 0.02, 0.8, cfg.seed);
        for (_, f) in FunctionField::catalog(n) {
            let gaps: Vec<f64> = boxes
                .par_iter()
                .map(|b| {
                    let beta = |p: f64| beta_p_cube(&f, b, p, quad, None).map(|r| r.value);
                    let (b1, b2, b4, binf) = (beta(1.0)?, beta(2.0)?, beta(4.0)?, beta(f64::INFINITY)?);
                    Ok((b1 - b2).max(b2 - b4).max(b2 - binf))
                })
                .collect::<Result<_>>()?;
            gaps.into_iter().for_each(|g| t.at_most(g));
        }
    }
    Ok(t.row())
}

fn measure_normalization(cfg: &SuiteConfig) -> Result<PropertyRow> {
    let mut t = Tally::new("measure_normalization_z", 3.0);
    for n in 2..=3 {
        for shift in [0.0, 0.3] {
            let center: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { shift } else { -shift }).collect();
            let region = AxisBox::cube(center.iter().map(|c| c - 1.0).collect(), 2.0)?;
            let planes = sample_hyperplanes(&region, cfg.measure_samples, cfg.seed);
            let est = estimate_measure(&planes, |h| (h.offset - dot(&h.normal, &center)).abs() < 1.0);
            t.at_most((est.mean - 1.0).abs() / est.stderr);
            let lines = sample_lines(&region, cfg.measure_samples, cfg.seed);
            let est = estimate_measure(&lines, |l| {
                let rel = sub(&center, &l.base);
                let along = dot(&rel, &l.dir);
                (dot(&rel, &rel) - along * along).sqrt() < 1.0
            });
            t.at_most((est.mean - 1.0).abs() / est.stderr);
        }
    }
    Ok(t.row())
}

fn carleson_rows(quad: &QuadratureSpec) -> Result<Vec<PropertyRow>> {
    let mut decay = Tally::new("carleson_decay_deviation", 0.15);
    let mut bound = Tally::new("carleson_ratio_excess", 0.0);
    for (n, depth, limit) in [(1, 10, calibration::CARLESON_RATIO_1), (2, 6, calibration::CARLESON_RATIO_2)] {
        let f = FunctionField::ridge_kink(n, 0, 1.0 / 3.0);
        let r = carleson_sum(&f, &DyadicCube::unit(n), 3.0, depth, Selector::Beta2, quad)?;
        decay.at_most((r.decay_ratio(3, depth) - 0.5).abs());
        for ratio in &r.ratios[4..] {
            bound.at_most(ratio - limit);
        }
    }
    Ok(vec![decay.row(), bound.row()])
}

fn combination_rows(cfg: &SuiteConfig, quad: &QuadratureSpec) -> Result<Vec<PropertyRow>> {
    let mut cert = Tally::new("combination_certificate_excess", 1e-10);
    let mut dominance = Tally::new("parabolic_beta2_dominance", 1e-12);
    for n in 2..=3 {
        let space = AxisBox::cube(vec![-1.0; n - 1], 2.0)?;
        let boxes = random_parabolic_boxes(&space, 0.0, 2.0, cfg.parabolic_boxes, 0.02, 0.7, cfg.seed);
        for (_, psi) in FunctionField::parabolic_catalog(n) {
            let rows: Vec<(f64, f64)> = boxes
                .par_iter()
                .map(|b| {
                    let c = combine_affine_bound(&psi, b, quad, None)?;
                    let beta = parabolic_beta2(&psi, b, quad, None)?;
                    Ok((c.residual_sq - c.bound, beta - c.normalized))
                })
                .collect::<Result<_>>()?;
            for (a, b) in rows {
                cert.at_most(a);
                dominance.at_most(b);
            }
        }
    }
    Ok(vec![cert.row(), dominance.row()])
}

fn restricted_rows(quad: &QuadratureSpec) -> Result<Vec<PropertyRow>> {
    let mut order = Tally::new("restricted_dominates", 1e-12);
    let mut equal = Tally::new("restricted_equal_when_feasible", 1e-10);
    let mut monotone = Tally::new("restricted_monotone_in_bound", 1e-12);
    for n in 1..=2 {
        let q = unit(n);
        for (_, f) in FunctionField::catalog(n) {
            let free = beta_p_cube(&f, &q, 2.0, quad, None)?;
            let slope = free.map.as_ref().map_or(0.0, |m| m.lipschitz());
            equal.at_most((beta_p_cube(&f, &q, 2.0, quad, Some(slope * 1.01 + 1e-9))?.value - free.value).abs());
            let mut previous = f64::INFINITY;
            for k in 0..10 {
                let bound = slope * (k + 1) as f64 / 10.0 + 1e-9;
                let v = beta_p_cube(&f, &q, 2.0, quad, Some(bound))?.value;
                order.at_most(free.value - v);
                monotone.at_most(v - previous);
                previous = v;
            }
        }
    }
    Ok(vec![order.row(), equal.row(), monotone.row()])
}

fn holder_row(quad: &QuadratureSpec) -> Result<PropertyRow> {
    let mut t = Tally::new("holder_violations", 0.0);
    let psi = FunctionField::separable(FunctionField::cone(vec![0.0]), TimeTerm::Sin { amplitude: 1.0 });
    let space = AxisBox::cube(vec![-1.0], 2.0)?;
    let boxes = random_parabolic_boxes(&space, 0.0, 1.0, 64, 1.0 / 64.0, 0.5, calibration::HOLDER_SEED);
    let r = holder_exponent_check(&psi, &boxes, 1.0, calibration::HOLDER, quad)?;
    t.at_most(r.violations.len() as f64);
    Ok(t.row())
}

fn reconstruct_rows(cfg: &SuiteConfig, quad: &QuadratureSpec) -> Result<Vec<PropertyRow>> {
    let mut ratio = Tally::new("reconstruct_ratio_excess", 0.0);
    let mut planar = Tally::new("planar_discrepancy", 0.02);
    let mut chain = Tally::new("reconstruct_direct_vs_map", 1e-12);
    let dims: &[usize] = if cfg.reconstruct_3d { &[2, 3] } else { &[2] };
    for &n in dims {
        let limit = if n == 2 { calibration::RECONSTRUCT_RATIO_2 } else { calibration::RECONSTRUCT_RATIO_3 };
        let half = vec![0.5; n];
        let fields = [
            FunctionField::cone(half.clone()),
            FunctionField::bump(half, 0.5, 0.25),
            FunctionField::random_ridge(n, 4, cfg.seed),
        ];
        for f in fields {
            let params = ReconstructParams { seed: cfg.seed, ..ReconstructParams::default() };
            let r = verify_form1(&f, &unit(n), &params, quad)?;
            ratio.at_most(r.ratio - limit);
            chain.at_most(r.beta2_small - r.beta2_via_map);
            if let Some(d) = r.planar_discrepancy {
                planar.at_most(d);
            }
        }
    }
    Ok(vec![ratio.row(), planar.row(), chain.row()])
}

fn rademacher_rows(seed: u64, quad: &QuadratureSpec) -> Result<Vec<PropertyRow>> {
    let radii: Vec<f64> = (3..=9).map(|k| 2f64.powi(-k)).collect();
    let mut slope = Tally::new("rademacher_slope", 0.9);
    let smooth = FunctionField::separable(FunctionField::Square { dim: 1 }, TimeTerm::Sin { amplitude: 1.0 });
    let mut rng = rng::stream(seed, 0, op::PROBE);
    for _ in 0..10 {
        let base = [rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0)];
        let p = rademacher_probe(&smooth, &base, &radii, quad)?;
        slope.at_least(p.slope.unwrap_or(f64::NEG_INFINITY));
    }
    let mut floor = Tally::new("rademacher_kink_floor", 0.2);
    let kink = FunctionField::separable(FunctionField::cone(vec![0.0]), TimeTerm::Zero);
    for e in rademacher_probe(&kink, &[0.0, 0.0], &radii, quad)?.eps {
        floor.at_least(e);
    }
    Ok(vec![slope.row(), floor.row()])
}

fn lipschitz_row(seed: u64) -> Result<PropertyRow> {
    let mut t = Tally::new("catalog_lipschitz_excess", 1e-9);
    for n in 1..=3 {
        let region = AxisBox::cube(vec![-0.5; n], 2.0)?;
        for (_, f) in FunctionField::catalog(n) {
            if let Some(l) = f.declared_lipschitz() {
                let est = lipschitz_estimate(&f, &region, 4096, seed, Metric::Euclidean);
                t.at_most(est / l.max(f64::MIN_POSITIVE) - 1.0);
            }
        }
    }
    Ok(t.row())
}

/// Runs every property of the suite.
pub fn run_suite(cfg: &SuiteConfig, quad: &QuadratureSpec) -> Result<SuiteReport> {
    quad.validate()?;
    let quad = quad.clone().with_seed(cfg.seed);
    let mut rows = vec![affine_annihilation(&quad)?, norm_monotonicity(cfg, &quad)?, measure_normalization(cfg)?];
    rows.extend(carleson_rows(&quad)?);
    rows.extend(combination_rows(cfg, &quad)?);
    rows.extend(restricted_rows(&quad)?);
    rows.push(holder_row(&quad)?);
    rows.extend(reconstruct_rows(cfg, &quad)?);
    rows.extend(rademacher_rows(cfg.seed, &quad)?);
    rows.push(lipschitz_row(cfg.seed)?);
    Ok(SuiteReport { rows })
}
