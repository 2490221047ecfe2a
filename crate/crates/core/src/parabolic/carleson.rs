use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{horizontal_affinity, parabolic_beta2, parabolic_beta_inf, vertical_osc};
use crate::beta::{CarlesonReport, CubeValue};
use crate::error::Result;
use crate::funcmodel::{lipschitz_estimate, Field, Metric};
use crate::geometry::ParabolicDyadic;
use crate::quadrature::QuadratureSpec;

/// Coefficient summed over the parabolic dyadic tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParabolicSelector {
    Beta2,
    Beta2Restricted {
        bound: f64,
    },
    Affinity,
    AffinityRestricted {
        bound: f64,
    },
    Osc,
    /// `β_∞`, summed with power `n + 3`.
    BetaInf,
}

impl ParabolicSelector {
    pub fn label(self) -> &'static str {
        match self {
            Self::Beta2 => "beta2",
            Self::Beta2Restricted { .. } => "beta2_restricted",
            Self::Affinity => "affinity",
            Self::AffinityRestricted { .. } => "affinity_restricted",
            Self::Osc => "osc",
            Self::BetaInf => "beta_inf",
        }
    }

    pub fn power(self, n: usize) -> f64 {
        match self {
            Self::BetaInf => n as f64 + 3.0,
            _ => 2.0,
        }
    }
}

/// `Σ coefficient(C Q)^power |Q|` over dyadic parabolic boxes `Q ⊂ root`.
/// The ratio is normalized by the Lipschitz constant of the field in the
/// parabolic metric.
pub fn parabolic_carleson_sum<F: Field + ?Sized>(
    psi: &F,
    root: &ParabolicDyadic,
    dilation: f64,
    depth: usize,
    selector: ParabolicSelector,
    quad: &QuadratureSpec,
) -> Result<CarlesonReport> {
    let n = root.space_index.len() + 1;
    let root_box = root.to_box();
    let region = root_box.dilate(dilation).to_axis_box();
    psi.check_region(&region)?;
    let lipschitz =
        lipschitz_estimate(psi, &region, crate::beta::carleson::LIPSCHITZ_SAMPLES, quad.seed, Metric::Parabolic);
    let coefficient = |q: &ParabolicDyadic| -> Result<f64> {
        let b = q.to_box().dilate(dilation);
        match selector {
            ParabolicSelector::Beta2 => parabolic_beta2(psi, &b, quad, None),
            ParabolicSelector::Beta2Restricted { bound } => parabolic_beta2(psi, &b, quad, Some(bound)),
            ParabolicSelector::Affinity => horizontal_affinity(psi, &b, quad, None),
            ParabolicSelector::AffinityRestricted { bound } => horizontal_affinity(psi, &b, quad, Some(bound)),
            ParabolicSelector::Osc => vertical_osc(psi, &b, quad),
            ParabolicSelector::BetaInf => parabolic_beta_inf(psi, &b, quad, None),
        }
    };
    let mut per_level = Vec::with_capacity(depth + 1);
    for (d, boxes) in root.descendants(depth).into_iter().enumerate() {
        let values: Vec<(CubeValue, f64)> = boxes
            .par_iter()
            .map(|q| {
                coefficient(q).map(|value| {
                    let mut index = q.space_index.clone();
                    index.push(q.time_index);
                    (CubeValue { depth: d, level: q.level, index, value, stderr: 0.0 }, q.to_box().measure())
                })
            })
            .collect::<Result<_>>()?;
        per_level.push((d, values));
    }
    Ok(CarlesonReport::assemble(
        selector.label(),
        dilation,
        selector.power(n),
        root_box.measure(),
        lipschitz,
        per_level,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::{FunctionField, TimeTerm};

    #[test]
    fn time_independent_field_has_no_oscillation() {
        let psi = FunctionField::separable(FunctionField::ridge_kink(1, 0, 1.0 / 3.0), TimeTerm::Zero);
        let r = parabolic_carleson_sum(
            &psi,
            &ParabolicDyadic::unit(2),
            3.0,
            2,
            ParabolicSelector::Osc,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(r.cubes.iter().all(|c| c.value == 0.0));
        assert_eq!(r.levels[2].cubes, 64);
    }
}
