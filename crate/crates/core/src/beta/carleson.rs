use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{beta_integralgeometric, beta_p_cube, index_label};
use crate::error::Result;
use crate::funcmodel::{lipschitz_estimate, Field, Metric};
use crate::geometry::DyadicCube;
use crate::quadrature::QuadratureSpec;

/// Coefficient summed over the dyadic tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// `β_2` on the dilated cube.
    Beta2,
    /// `β^1_{∞,2}`: sup-norm coefficients averaged over lines.
    LineSup,
    /// `β^{n-1}_{2,2}`: L2 coefficients averaged over hyperplanes.
    PlaneL2,
    /// Root-sum-of-squares of `LineSup` and `PlaneL2`.
    Combined,
}

impl Selector {
    pub fn label(self) -> &'static str {
        match self {
            Selector::Beta2 => "beta2",
            Selector::LineSup => "line_sup",
            Selector::PlaneL2 => "plane_l2",
            Selector::Combined => "combined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelContribution {
    /// Depth below the root.
    pub depth: usize,
    pub cubes: usize,
    /// `Σ coefficient^power |Q|` over the cubes at this depth.
    pub contribution: f64,
    pub max_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeValue {
    pub depth: usize,
    pub level: i32,
    /// Spatial index, with the time index appended for parabolic boxes.
    pub index: Vec<i64>,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub selector: String,
    pub dilation: f64,
    pub power: f64,
    pub root_measure: f64,
    /// Estimated Lipschitz constant used for normalization.
    pub lipschitz: f64,
    pub levels: Vec<LevelContribution>,
    /// `S(J)` for `J = 0..=depth`.
    pub cumulative: Vec<f64>,
    /// `S(J) / (lipschitz * root_measure)`.
    pub ratios: Vec<f64>,
    pub cubes: Vec<CubeValue>,
}

impl CarlesonReport {
    pub(crate) fn assemble(
        selector: &str,
        dilation: f64,
        power: f64,
        root_measure: f64,
        lipschitz: f64,
        per_level: Vec<(usize, Vec<(CubeValue, f64)>)>,
    ) -> Self {
        let mut levels = Vec::with_capacity(per_level.len());
        let mut cubes = Vec::new();
        let mut cumulative = Vec::with_capacity(per_level.len());
        let mut running = 0.0;
        for (depth, values) in per_level {
            let contribution: f64 = values.iter().map(|(v, measure)| v.value.powf(power) * measure).sum();
            let max_coefficient = values.iter().map(|(v, _)| v.value).fold(0.0f64, f64::max);
            levels.push(LevelContribution { depth, cubes: values.len(), contribution, max_coefficient });
            running += contribution;
            cumulative.push(running);
            cubes.extend(values.into_iter().map(|(v, _)| v));
        }
        let scale = lipschitz * root_measure;
        let ratios = cumulative
            .iter()
            .map(|&s| {
                if s == 0.0 {
                    0.0
                } else if scale > 0.0 {
                    s / scale
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        Self {
            selector: selector.to_string(),
            dilation,
            power,
            root_measure,
            lipschitz,
            levels,
            cumulative,
            ratios,
            cubes,
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Geometric decay rate of the per-level contributions between two
    /// depths: `exp` of the least-squares slope of `ln(contribution)`.
    pub fn decay_ratio(&self, from: usize, to: usize) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .levels
            .iter()
            .filter(|l| l.depth >= from && l.depth <= to && l.contribution > 0.0)
            .map(|l| (l.depth as f64, l.contribution.ln()))
            .collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        let m = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
        (sxy / sxx).exp()
    }

    /// Per-level profile: `depth,cubes,contribution,cumulative,ratio,max_coefficient`.
    pub fn levels_csv(&self) -> String {
        let mut out = String::from("depth,cubes,contribution,cumulative,ratio,max_coefficient\n");
        for (i, l) in self.levels.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                l.depth, l.cubes, l.contribution, self.cumulative[i], self.ratios[i], l.max_coefficient
            ));
        }
        out
    }

    /// Per-cube values: `depth,level,index,value,stderr`.
    pub fn cubes_csv(&self) -> String {
        let mut out = String::from("depth,level,index,value,stderr\n");
        for c in &self.cubes {
            out.push_str(&format!(
                "{},{},{},{:.12e},{:.6e}\n",
                c.depth,
                c.level,
                index_label(&c.index),
                c.value,
                c.stderr
            ));
        }
        out
    }
}

/// Samples used for the Lipschitz normalization.
pub(crate) const LIPSCHITZ_SAMPLES: usize = 4096;

/// `Σ coefficient(C Q)^2 |Q|` over the dyadic cubes `Q ⊂ root` down to
/// `depth` levels below the root.
pub fn carleson_sum<F: Field + ?Sized>(
    f: &F,
    root: &DyadicCube,
    dilation: f64,
    depth: usize,
    selector: Selector,
    quad: &QuadratureSpec,
) -> Result<CarlesonReport> {
    let n = root.dim();
    let root_region = root.to_box().dilate(dilation);
    f.check_region(&root_region)?;
    let lipschitz = lipschitz_estimate(f, &root_region, LIPSCHITZ_SAMPLES, quad.seed, Metric::Euclidean);
    let coefficient = |cube: &DyadicCube| -> Result<(f64, f64)> {
        let region = cube.to_box().dilate(dilation);
        match selector {
            Selector::Beta2 => beta_p_cube(f, &region, 2.0, quad, None).map(|r| (r.value, 0.0)),
            Selector::LineSup => {
                beta_integralgeometric(f, &region, 1, f64::INFINITY, 2.0, quad).map(|r| (r.value, r.stderr))
            }
            Selector::PlaneL2 => beta_integralgeometric(f, &region, n - 1, 2.0, 2.0, quad).map(|r| (r.value, r.stderr)),
            Selector::Combined => crate::reconstruct::combined_beta(f, &region, quad).map(|c| (c.value, c.stderr)),
        }
    };
    let mut per_level = Vec::with_capacity(depth + 1);
    for (d, cubes) in root.descendants(depth).into_iter().enumerate() {
        let values: Vec<(CubeValue, f64)> = cubes
            .par_iter()
            .map(|c| {
                coefficient(c).map(|(value, stderr)| {
                    (CubeValue { depth: d, level: c.level, index: c.index.clone(), value, stderr }, c.volume())
                })
            })
            .collect::<Result<_>>()?;
        per_level.push((d, values));
    }
    Ok(CarlesonReport::assemble(selector.label(), dilation, 2.0, root.volume(), lipschitz, per_level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::FunctionField;

    #[test]
    fn affine_sum_vanishes_and_is_monotone() {
        let f = FunctionField::affine(vec![1.0, 2.0], 0.0);
        let r = carleson_sum(&f, &DyadicCube::unit(2), 3.0, 3, Selector::Beta2, &QuadratureSpec::default()).unwrap();
        assert!(r.total() <= 1e-18);
        let g = FunctionField::ridge_kink(1, 0, 1.0 / 3.0);
        let r = carleson_sum(&g, &DyadicCube::unit(1), 3.0, 6, Selector::Beta2, &QuadratureSpec::default()).unwrap();
        assert!(r.cumulative.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.levels.len(), 7);
        assert_eq!(r.levels[6].cubes, 64);
    }
}
