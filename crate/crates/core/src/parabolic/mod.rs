//! Coefficients of functions on parabolic space `R^{n-1} x R`.
//!
//! Fields are `n`-dimensional with time as the last coordinate. Affine maps
//! act on the spatial variables only; diameters use the parabolic metric.

mod carleson;
mod probe;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit_affine_l2, fit_affine_l2_constrained, fit_affine_minimax, AffineFit, SampleSet};
use crate::funcmodel::Field;
use crate::geometry::{AffineMap, ParabolicBox};
use crate::quadrature::{axis_rule, box_closed, box_rule, closed_axis, QuadratureSpec};

pub use carleson::{parabolic_carleson_sum, ParabolicSelector};
pub use probe::{rademacher_probe, DifferentiabilityProbe, PROBE_SAMPLES};

/// Values of a field on a space-time tensor grid.
struct SpaceTimeGrid {
    space_dim: usize,
    space_points: Vec<f64>,
    space_weights: Vec<f64>,
    time_weights: Vec<f64>,
    /// `values[it * nx + ix]`
    values: Vec<f64>,
}

impl SpaceTimeGrid {
    fn new<F: Field + ?Sized>(psi: &F, pbox: &ParabolicBox, quad: &QuadratureSpec) -> Self {
        let m = pbox.space_dim();
        let (space_points, space_weights) = box_rule(&pbox.space_box(), quad.nodes, quad.rule);
        let time = axis_rule(pbox.t0, pbox.duration, quad.nodes, quad.rule);
        let nx = space_weights.len();
        let mut values = Vec::with_capacity(nx * time.len());
        let mut p = vec![0.0; m + 1];
        for &(t, _) in &time {
            p[m] = t;
            for ix in 0..nx {
                p[..m].copy_from_slice(&space_points[ix * m..(ix + 1) * m]);
                values.push(psi.value(&p));
            }
        }
        Self { space_dim: m, space_points, space_weights, time_weights: time.iter().map(|t| t.1).collect(), values }
    }

    fn nx(&self) -> usize {
        self.space_weights.len()
    }

    fn slice(&self, it: usize) -> SampleSet {
        let nx = self.nx();
        SampleSet::from_parts(
            self.space_dim,
            self.space_points.clone(),
            self.values[it * nx..(it + 1) * nx].to_vec(),
            self.space_weights.clone(),
        )
    }

    /// All space-time samples, with spatial abscissas only.
    fn cloud(&self) -> SampleSet {
        let nx = self.nx();
        let nt = self.time_weights.len();
        let mut points = Vec::with_capacity(self.space_points.len() * nt);
        let mut weights = Vec::with_capacity(nx * nt);
        for wt in &self.time_weights {
            points.extend_from_slice(&self.space_points);
            weights.extend(self.space_weights.iter().map(|wx| wx * wt));
        }
        SampleSet::from_parts(self.space_dim, points, self.values.clone(), weights)
    }

    fn time_total(&self) -> f64 {
        self.time_weights.iter().sum()
    }

    fn space_total(&self) -> f64 {
        self.space_weights.iter().sum()
    }

    /// Per-slice fits `A_t`.
    fn slice_fits(&self, bound: Option<f64>) -> Result<Vec<AffineFit>> {
        (0..self.time_weights.len())
            .map(|it| {
                let s = self.slice(it);
                match bound {
                    None => fit_affine_l2(&s),
                    Some(l) => fit_affine_l2_constrained(&s, l),
                }
                .map_err(degenerate)
            })
            .collect()
    }

    /// `⨍_{I_1} ⨍_{I_2} |ψ(x,t) - c_x|^2 dt dx` with `c_x` the time mean.
    fn vertical_variance(&self) -> f64 {
        let nx = self.nx();
        let tw = self.time_total();
        let mut acc = 0.0;
        for ix in 0..nx {
            // Shifted by the first value so that constant rows give exactly zero.
            let v0 = self.values[ix];
            let mean = v0
                + self.time_weights.iter().enumerate().map(|(it, w)| w * (self.values[it * nx + ix] - v0)).sum::<f64>()
                    / tw;
            let var: f64 = self
                .time_weights
                .iter()
                .enumerate()
                .map(|(it, w)| w * (self.values[it * nx + ix] - mean).powi(2))
                .sum::<f64>()
                / tw;
            acc += self.space_weights[ix] * var;
        }
        acc / self.space_total()
    }
}

fn degenerate(e: Error) -> Error {
    match e {
        Error::RankDeficient { pivot } => {
            Error::DegenerateBox(format!("spatial quadrature is rank deficient (pivot {pivot:e})"))
        }
        other => other,
    }
}

fn check<F: Field + ?Sized>(psi: &F, pbox: &ParabolicBox) -> Result<()> {
    if pbox.dim() < 2 {
        return Err(Error::InvalidInput("parabolic boxes need n >= 2".into()));
    }
    psi.check_region(&pbox.to_axis_box())
}

/// Horizontal affinity `A(Q)` (or `A^L(Q)` with a gradient bound).
pub fn horizontal_affinity<F: Field + ?Sized>(
    psi: &F,
    pbox: &ParabolicBox,
    quad: &QuadratureSpec,
    bound: Option<f64>,
) -> Result<f64> {
    check(psi, pbox)?;
    let grid = SpaceTimeGrid::new(psi, pbox, quad);
    let fits = grid.slice_fits(bound)?;
    let mean: f64 = fits.iter().zip(&grid.time_weights).map(|(f, w)| w * f.objective).sum::<f64>() / grid.time_total();
    Ok((mean / pbox.space_diam().powi(2)).sqrt())
}

/// Vertical oscillation `osc(Q)`.
pub fn vertical_osc<F: Field + ?Sized>(psi: &F, pbox: &ParabolicBox, quad: &QuadratureSpec) -> Result<f64> {
    check(psi, pbox)?;
    let grid = SpaceTimeGrid::new(psi, pbox, quad);
    Ok((grid.vertical_variance() / pbox.duration).sqrt())
}

/// `sqrt(Σ w r^2 / diam^{n+1}) / diam` for a mean square `ms` over the box.
fn normalize_l2(ms: f64, pbox: &ParabolicBox) -> f64 {
    let d = pbox.diam();
    (ms * pbox.measure() / d.powi(pbox.dim() as i32 + 1)).sqrt() / d
}

/// Parabolic `β_2(Q)` (or `β_2^L(Q)`), with the best spatial affine map.
pub fn parabolic_beta2_fit<F: Field + ?Sized>(
    psi: &F,
    pbox: &ParabolicBox,
    quad: &QuadratureSpec,
    bound: Option<f64>,
) -> Result<(f64, AffineMap)> {
    check(psi, pbox)?;
    let cloud = SpaceTimeGrid::new(psi, pbox, quad).cloud();
    let fit = match bound {
        None => fit_affine_l2(&cloud),
        Some(l) => fit_affine_l2_constrained(&cloud, l),
    }
    .map_err(degenerate)?;
    Ok((normalize_l2(fit.objective, pbox), fit.map))
}

pub fn parabolic_beta2<F: Field + ?Sized>(
    psi: &F,
    pbox: &ParabolicBox,
    quad: &QuadratureSpec,
    bound: Option<f64>,
) -> Result<f64> {
    parabolic_beta2_fit(psi, pbox, quad, bound).map(|r| r.0)
}

/// Parabolic `β_∞(Q)` (or `β_∞^L(Q)`) on the closed space-time grid.
pub fn parabolic_beta_inf<F: Field + ?Sized>(
    psi: &F,
    pbox: &ParabolicBox,
    quad: &QuadratureSpec,
    bound: Option<f64>,
) -> Result<f64> {
    check(psi, pbox)?;
    let m = pbox.space_dim();
    let space = box_closed(&pbox.space_box(), quad.nodes);
    let times = closed_axis(pbox.t0, pbox.duration, quad.nodes);
    let nx = space.len() / m;
    let mut set = SampleSet::with_capacity(m, nx * times.len());
    let mut p = vec![0.0; m + 1];
    for &t in &times {
        p[m] = t;
        for ix in 0..nx {
            let x = &space[ix * m..(ix + 1) * m];
            p[..m].copy_from_slice(x);
            set.push(x, psi.value(&p), 1.0);
        }
    }
    let fit = fit_affine_minimax(&set, bound).map_err(degenerate)?;
    Ok(fit.objective / pbox.diam())
}

/// Output of [`combine_affine_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedAffine {
    /// Time average of the per-slice fits.
    pub map: AffineMap,
    /// `⨍_Q |ψ - A|^2`.
    pub residual_sq: f64,
    /// `⨍_{I_2} ⨍_{I_1} |ψ(x,t) - A_t(x)|^2`.
    pub horizontal: f64,
    /// `⨍_{I_1} ⨍_{I_2} |ψ(x,t) - c_x|^2`.
    pub vertical: f64,
    /// `6 horizontal + 4 vertical`.
    pub bound: f64,
    pub holds: bool,
    /// `residual_sq` with the normalization of the parabolic `β_2`.
    pub normalized: f64,
}

/// Builds `A = ⨍_{I_2} A_t dt` from per-slice fits and certifies
/// `⨍_Q |ψ - A|^2 <= 6 β_h + 4 β_v`.
pub fn combine_affine_bound<F: Field + ?Sized>(
    psi: &F,
    pbox: &ParabolicBox,
    quad: &QuadratureSpec,
    bound: Option<f64>,
) -> Result<CombinedAffine> {
    check(psi, pbox)?;
    let grid = SpaceTimeGrid::new(psi, pbox, quad);
    let fits = grid.slice_fits(bound)?;
    let tw = grid.time_total();
    let m = grid.space_dim;
    let mut gradient = vec![0.0; m];
    let mut intercept = 0.0;
    let mut horizontal = 0.0;
    for (f, w) in fits.iter().zip(&grid.time_weights) {
        for k in 0..m {
            gradient[k] += w * f.map.gradient[k];
        }
        intercept += w * f.map.intercept;
        horizontal += w * f.objective;
    }
    gradient.iter_mut().for_each(|g| *g /= tw);
    let map = AffineMap::new(gradient, intercept / tw);
    horizontal /= tw;
    let vertical = grid.vertical_variance();
    let cloud = grid.cloud();
    let residual_sq = crate::fitting::objective(&cloud, &map, crate::fitting::FitNorm::L2);
    let bound_value = 6.0 * horizontal + 4.0 * vertical;
    Ok(CombinedAffine {
        normalized: normalize_l2(residual_sq, pbox),
        map,
        residual_sq,
        horizontal,
        vertical,
        bound: bound_value,
        holds: residual_sq <= bound_value + 1e-10,
    })
}

/// Output of [`dt_carleson_quotient`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtQuotient {
    /// Off-diagonal part plus the diagonal-band extension.
    pub value: f64,
    /// Contribution assigned to the excluded diagonal band.
    pub diagonal_band: f64,
}

/// `|Q|^{-1} ∫_{I_1} ∬_{I_2 x I_2} |ψ(x,t) - ψ(x,s)|^2 / |s - t|^2`.
///
/// The midpoint rule skips the diagonal cells `t_i = s_i`; each is filled
/// with the mean of the quotients on its off-diagonal neighbours.
pub fn dt_carleson_quotient<F: Field + ?Sized>(
    psi: &F,
    pbox: &ParabolicBox,
    quad: &QuadratureSpec,
) -> Result<DtQuotient> {
    check(psi, pbox)?;
    let spec = QuadratureSpec { rule: crate::quadrature::Rule::Midpoint, ..quad.clone() };
    let grid = SpaceTimeGrid::new(psi, pbox, &spec);
    let time = axis_rule(pbox.t0, pbox.duration, spec.nodes, spec.rule);
    let nt = time.len();
    let nx = grid.nx();
    let (mut off, mut band) = (0.0, 0.0);
    for ix in 0..nx {
        let v = |it: usize| grid.values[it * nx + ix];
        let quotient = |i: usize, j: usize| ((v(i) - v(j)) / (time[i].0 - time[j].0)).powi(2);
        let mut off_x = 0.0;
        let mut band_x = 0.0;
        for i in 0..nt {
            for j in 0..nt {
                if i != j {
                    off_x += time[i].1 * time[j].1 * quotient(i, j);
                }
            }
            let neighbours: Vec<f64> = [i.checked_sub(1), (i + 1 < nt).then_some(i + 1)]
                .into_iter()
                .flatten()
                .map(|j| quotient(i, j))
                .collect();
            band_x += time[i].1 * time[i].1 * neighbours.iter().sum::<f64>() / neighbours.len() as f64;
        }
        off += grid.space_weights[ix] * off_x;
        band += grid.space_weights[ix] * band_x;
    }
    let measure = pbox.measure();
    Ok(DtQuotient { value: (off + band) / measure, diagonal_band: band / measure })
}

/// All coefficients of one box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCoefficients {
    pub pbox: ParabolicBox,
    pub affinity: f64,
    pub osc: f64,
    pub beta2: f64,
    pub beta_inf: f64,
    pub bound: Option<f64>,
    pub affinity_restricted: Option<f64>,
    pub beta2_restricted: Option<f64>,
    pub beta_inf_restricted: Option<f64>,
    pub dt_quotient: DtQuotient,
    pub nodes: usize,
}

impl ParabolicCoefficients {
    pub fn compute<F: Field + ?Sized>(
        psi: &F,
        pbox: &ParabolicBox,
        quad: &QuadratureSpec,
        bound: Option<f64>,
    ) -> Result<Self> {
        let restricted = |g: &dyn Fn(Option<f64>) -> Result<f64>| bound.map(|l| g(Some(l))).transpose();
        Ok(Self {
            pbox: pbox.clone(),
            affinity: horizontal_affinity(psi, pbox, quad, None)?,
            osc: vertical_osc(psi, pbox, quad)?,
            beta2: parabolic_beta2(psi, pbox, quad, None)?,
            beta_inf: parabolic_beta_inf(psi, pbox, quad, None)?,
            bound,
            affinity_restricted: restricted(&|l| horizontal_affinity(psi, pbox, quad, l))?,
            beta2_restricted: restricted(&|l| parabolic_beta2(psi, pbox, quad, l))?,
            beta_inf_restricted: restricted(&|l| parabolic_beta_inf(psi, pbox, quad, l))?,
            dt_quotient: dt_carleson_quotient(psi, pbox, quad)?,
            nodes: quad.nodes,
        })
    }

    pub const CSV_HEADER: &'static str =
        "space_min,side,t0,duration,affinity,osc,beta2,beta_inf,affinity_l,beta2_l,beta_inf_l,dt_quotient,dt_band\n";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.12e}"));
        format!(
            "{},{:e},{:e},{:e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{:.12e},{:.12e}\n",
            self.pbox.space_min.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "),
            self.pbox.side,
            self.pbox.t0,
            self.pbox.duration,
            self.affinity,
            self.osc,
            self.beta2,
            self.beta_inf,
            opt(self.affinity_restricted),
            opt(self.beta2_restricted),
            opt(self.beta_inf_restricted),
            self.dt_quotient.value,
            self.dt_quotient.diagonal_band
        )
    }
}

/// Exponent `2 / (n + 3)` relating sup and L2 coefficients in `R^n`.
pub fn holder_exponent(n: usize) -> f64 {
    2.0 / (n as f64 + 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub pbox: ParabolicBox,
    /// `β_2^L(2Q)`
    pub beta2_double: f64,
    /// `β_∞^L(Q)`
    pub beta_inf: f64,
    /// `β_∞^L(Q) / β_2^L(2Q)^{exponent}`; zero when both vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub exponent: f64,
    pub constant: f64,
    pub rows: Vec<HolderRow>,
    /// Indices of rows with `ratio > constant`.
    pub violations: Vec<usize>,
    /// Smallest constant with no violations.
    pub fitted_constant: f64,
}

/// Checks `β_∞^L(Q) <= constant * β_2^L(2Q)^{2/(n+3)}` on every box.
pub fn holder_exponent_check<F: Field + ?Sized>(
    psi: &F,
    boxes: &[ParabolicBox],
    bound: f64,
    constant: f64,
    quad: &QuadratureSpec,
) -> Result<HolderReport> {
    use rayon::prelude::*;
    let n = psi.dim();
    let exponent = holder_exponent(n);
    let rows: Vec<HolderRow> = boxes
        .par_iter()
        .map(|q| {
            let beta2_double = parabolic_beta2(psi, &q.dilate(2.0), quad, Some(bound))?;
            let beta_inf = parabolic_beta_inf(psi, q, quad, Some(bound))?;
            let ratio = if beta_inf <= 1e-12 { 0.0 } else { beta_inf / beta2_double.powf(exponent) };
            Ok(HolderRow { pbox: q.clone(), beta2_double, beta_inf, ratio })
        })
        .collect::<Result<_>>()?;
    let violations = rows.iter().enumerate().filter(|(_, r)| r.ratio > constant).map(|(i, _)| i).collect();
    let fitted_constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(HolderReport { exponent, constant, rows, violations, fitted_constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::{FunctionField, TimeTerm};
    use crate::quadrature::Rule;

    fn exact() -> QuadratureSpec {
        QuadratureSpec { rule: Rule::GaussLegendre, nodes: 7, ..QuadratureSpec::default() }
    }

    fn square_plus(time: TimeTerm) -> FunctionField {
        FunctionField::separable(FunctionField::Square { dim: 1 }, time)
    }

    #[test]
    fn affinity_examples() {
        let b = ParabolicBox::general(vec![-1.0], 2.0, 0.0, 1.0).unwrap();
        let a = horizontal_affinity(&square_plus(TimeTerm::Zero), &b, &exact(), None).unwrap();
        assert!((a - 1.0 / 45f64.sqrt()).abs() < 1e-13);
        let steep = FunctionField::affine(vec![2.0, 0.0], 0.0);
        let u = ParabolicBox::new(vec![0.0], 1.0, 0.0).unwrap();
        let al = horizontal_affinity(&steep, &u, &exact(), Some(1.0)).unwrap();
        assert!((al - (1.0f64 / 12.0).sqrt()).abs() < 1e-9);
        let prod = FunctionField::Product { a0: vec![1.0], a1: vec![0.5], b0: 0.0, b1: 2.0 };
        assert!(horizontal_affinity(&prod, &u, &exact(), None).unwrap() < 1e-10);
    }

    #[test]
    fn oscillation_examples() {
        let u = ParabolicBox::new(vec![0.0], 1.0, 0.0).unwrap();
        let t = FunctionField::affine(vec![0.0, 1.0], 0.0);
        assert!((vertical_osc(&t, &u, &exact()).unwrap() - (1.0f64 / 12.0).sqrt()).abs() < 1e-13);
        assert!(vertical_osc(&square_plus(TimeTerm::Zero), &u, &exact()).unwrap() < 1e-12);
    }

    #[test]
    fn beta2_of_time_field_matches_exact_integral() {
        let u = ParabolicBox::new(vec![0.0], 1.0, 0.0).unwrap();
        let t = FunctionField::affine(vec![0.0, 1.0], 0.0);
        let (b, map) = parabolic_beta2_fit(&t, &u, &exact(), None).unwrap();
        assert!(map.gradient[0].abs() < 1e-12 && (map.intercept - 0.5).abs() < 1e-12);
        // diam = 2, n + 1 = 3: β_2^2 = (1/12) / 2^3 / 2^2
        assert!((b * b - 1.0 / 12.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn combination_certificate() {
        let b = ParabolicBox::general(vec![-1.0], 2.0, 0.0, 1.0).unwrap();
        let c = combine_affine_bound(&square_plus(TimeTerm::Zero), &b, &exact(), None).unwrap();
        assert!((c.map.intercept - 1.0 / 3.0).abs() < 1e-13 && c.map.gradient[0].abs() < 1e-13);
        assert!((c.residual_sq - c.horizontal).abs() < 1e-14 && c.vertical < 1e-20);
        assert!(c.holds);
        let c = combine_affine_bound(&square_plus(TimeTerm::Linear { rate: 1.0 }), &b, &exact(), None).unwrap();
        assert!((c.map.intercept - (1.0 / 3.0 + 0.5)).abs() < 1e-13);
        // the splits are orthogonal: residual = horizontal + vertical exactly
        assert!((c.residual_sq - c.horizontal - c.vertical).abs() < 1e-13);
        assert!(c.holds);
    }

    #[test]
    fn dt_quotient_examples() {
        let u = ParabolicBox::new(vec![0.0], 1.0, 0.0).unwrap();
        let q = QuadratureSpec::default();
        let t = FunctionField::affine(vec![0.0, 1.0], 0.0);
        assert!((dt_carleson_quotient(&t, &u, &q).unwrap().value - 1.0).abs() < 1e-12);
        assert!(dt_carleson_quotient(&square_plus(TimeTerm::Zero), &u, &q).unwrap().value < 1e-12);
        let s = FunctionField::separable(FunctionField::constant(1, 0.0), TimeTerm::Sin { amplitude: 1.0 });
        let v = dt_carleson_quotient(&s, &u, &q).unwrap();
        assert!(v.value > 0.0 && v.value <= 1.0);
    }

    #[test]
    fn restriction_is_monotone() {
        let u = ParabolicBox::new(vec![0.0], 1.0, 0.0).unwrap();
        let f = FunctionField::separable(FunctionField::affine(vec![3.0], 0.0), TimeTerm::Sin { amplitude: 1.0 });
        let q = QuadratureSpec::default();
        let free = parabolic_beta2(&f, &u, &q, None).unwrap();
        let tight = parabolic_beta2(&f, &u, &q, Some(1.0)).unwrap();
        let loose = parabolic_beta2(&f, &u, &q, Some(10.0)).unwrap();
        assert!(free <= tight);
        assert!((free - loose).abs() <= 1e-10);
        let c = ParabolicCoefficients::compute(&f, &u, &q, Some(1.0)).unwrap();
        assert!(c.affinity <= c.affinity_restricted.unwrap());
        assert!(c.beta_inf <= c.beta_inf_restricted.unwrap() + 1e-12);
    }
}
