//! Discrete minimax affine fitting.
//!
//! The problem `min_{a,b} max_i |y_i - a.x_i - b|` is a linear program in
//! `(a, b, h)`. It is solved by an exchange loop: the LP restricted to a
//! small active subset is solved exactly by a dense simplex method on its
//! dual, then the points violating the current level are added, until the
//! subset optimum is attained on the full set. The restricted optimum is a
//! lower bound and the full-set maximum an upper bound, so the gap certifies
//! the result.

use super::{fit_affine_l2, AffineFit, FitNorm, SampleSet};
use crate::error::{Error, Result};
use crate::geometry::AffineMap;
use crate::linalg::{dot, norm};

const MAX_ROUNDS: usize = 400;
const ADD_PER_ROUND: usize = 8;
/// Box bound on the scaled coefficients; keeps every restricted LP bounded.
const COEFF_BOUND: f64 = 1e6;

/// Minimax affine fit, optionally with `|gradient| <= bound`.
pub fn fit_affine_minimax(samples: &SampleSet, bound: Option<f64>) -> Result<AffineFit> {
    // Validates the sample set and rejects affinely degenerate abscissas.
    let l2 = fit_affine_l2(samples)?;
    if let Some(l) = bound {
        if !(l > 0.0) {
            return Err(Error::InvalidInput(format!("gradient bound must be positive, got {l}")));
        }
    }
    let d = samples.dim();
    let n = samples.len();
    let ys = samples.values();
    let (ymin, ymax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if d == 0 || ymax == ymin {
        let map = AffineMap::constant(d, 0.5 * (ymin + ymax));
        return Ok(AffineFit { map, objective: 0.5 * (ymax - ymin), norm: FitNorm::Linf, constraint: bound });
    }

    // Per-axis centering and scaling.
    let mut xc = vec![0.0; d];
    let mut xs = vec![0.0f64; d];
    for k in 0..d {
        let (lo, hi) = (0..n)
            .map(|i| samples.point(i)[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        xc[k] = 0.5 * (lo + hi);
        xs[k] = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    }
    let yc = 0.5 * (ymin + ymax);
    let ys_scale = 0.5 * (ymax - ymin);
    let xh: Vec<f64> =
        (0..n).flat_map(|i| (0..d).map(move |k| (i, k))).map(|(i, k)| (samples.point(i)[k] - xc[k]) / xs[k]).collect();
    let yh: Vec<f64> = ys.iter().map(|y| (y - yc) / ys_scale).collect();
    let xh_row = |i: usize| &xh[i * d..(i + 1) * d];

    let to_original = |z: &[f64]| -> AffineMap {
        let a: Vec<f64> = (0..d).map(|k| z[k] * ys_scale / xs[k]).collect();
        let b = yc + ys_scale * z[d] - dot(&a, &xc);
        AffineMap::new(a, b)
    };
    let scaled_residual = |z: &[f64], i: usize| yh[i] - dot(&z[..d], xh_row(i)) - z[d];

    // Seed the active set with the extreme residuals of the L2 fit.
    let r2 = samples.residuals(&l2.map);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| r2[j].abs().total_cmp(&r2[i].abs()).then(i.cmp(&j)));
    let mut active: Vec<usize> = order.iter().copied().take(2 * (d + 2)).collect();
    let mut in_active = vec![false; n];
    active.iter().for_each(|&i| in_active[i] = true);
    let mut cuts: Vec<Vec<f64>> = Vec::new();

    let q = d + 2;
    for _ in 0..MAX_ROUNDS {
        // Primal rows `m . z >= r` with z = (a, b, h).
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(2 * active.len() + 2 * (d + 1) + cuts.len());
        for &i in &active {
            let x = xh_row(i);
            let mut up: Vec<f64> = x.to_vec();
            up.push(1.0);
            up.push(1.0);
            rows.push((up, yh[i]));
            let mut dn: Vec<f64> = x.iter().map(|v| -v).collect();
            dn.push(-1.0);
            dn.push(1.0);
            rows.push((dn, -yh[i]));
        }
        for k in 0..=d {
            for sign in [1.0, -1.0] {
                let mut m = vec![0.0; q];
                m[k] = sign;
                rows.push((m, -COEFF_BOUND));
            }
        }
        if let Some(l) = bound {
            for u in &cuts {
                let mut m: Vec<f64> = (0..d).map(|k| -u[k] / xs[k]).collect();
                m.push(0.0);
                m.push(0.0);
                rows.push((m, -l / ys_scale));
            }
        }
        let z = solve_dual(&rows, q)?;
        let level = z[d + 1];
        let tol = 1e-12 * (1.0 + level.abs());

        let mut worst: Vec<(f64, usize)> = (0..n)
            .filter(|&i| !in_active[i])
            .map(|i| (scaled_residual(&z, i).abs(), i))
            .filter(|(r, _)| *r > level + tol)
            .collect();
        let mut progressed = false;
        if let Some(l) = bound {
            let a = to_original(&z).gradient;
            let na = norm(&a);
            if na > l * (1.0 + 1e-12) {
                cuts.push(a.iter().map(|v| v / na).collect());
                progressed = true;
            }
        }
        if !worst.is_empty() {
            worst.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, i) in worst.iter().take(ADD_PER_ROUND) {
                in_active[i] = true;
                active.push(i);
            }
            progressed = true;
        }
        if !progressed || (bound.is_some() && worst.is_empty() && cuts.len() > 200) {
            let mut map = to_original(&z);
            if let Some(l) = bound {
                let na = map.lipschitz();
                if na > l {
                    map.gradient.iter_mut().for_each(|v| *v *= l / na);
                    let r = samples.residuals(&AffineMap::new(map.gradient.clone(), 0.0));
                    let (lo, hi) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                    map.intercept = 0.5 * (lo + hi);
                }
            }
            let objective = super::objective(samples, &map, FitNorm::Linf);
            return Ok(AffineFit { map, objective, norm: FitNorm::Linf, constraint: bound });
        }
    }
    Err(Error::NonConvergence(format!("minimax exchange did not settle within {MAX_ROUNDS} rounds")))
}

/// Solves `min h` over `M z >= r` (`h` is the last coordinate of `z`) through
/// its dual `max r.y` s.t. `M^T y = e_h`, `y >= 0`, using a two-phase dense
/// tableau simplex with Bland's rule. Returns the primal optimum `z`.
fn solve_dual(rows: &[(Vec<f64>, f64)], q: usize) -> Result<Vec<f64>> {
    let k = rows.len();
    let cols = k + q;
    let mut t = vec![0.0; q * cols];
    let mut rhs = vec![0.0; q];
    rhs[q - 1] = 1.0;
    for (j, (m, _)) in rows.iter().enumerate() {
        for i in 0..q {
            t[i * cols + j] = m[i];
        }
    }
    for i in 0..q {
        t[i * cols + k + i] = 1.0;
    }
    let mut basis: Vec<usize> = (k..k + q).collect();
    let tol = 1e-11;

    let run = |t: &mut Vec<f64>,
               rhs: &mut Vec<f64>,
               basis: &mut Vec<usize>,
               cost: &dyn Fn(usize) -> f64,
               phase2: bool|
     -> Result<()> {
        for _ in 0..50_000 {
            let reduced = |j: usize, t: &[f64], basis: &[usize]| -> f64 {
                (0..q).map(|i| cost(basis[i]) * t[i * cols + j]).sum::<f64>() - cost(j)
            };
            let limit = if phase2 { k } else { cols };
            let entering = (0..limit).find(|&j| !basis.contains(&j) && reduced(j, t, basis) < -tol);
            let Some(e) = entering else { return Ok(()) };
            let mut leave: Option<(f64, usize, usize)> = None;
            for i in 0..q {
                let a = t[i * cols + e];
                let ratio = if phase2 && basis[i] >= k && a.abs() > tol && rhs[i] <= tol {
                    0.0
                } else if a > tol {
                    rhs[i] / a
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((r, _, b)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && basis[i] < b),
                };
                if better {
                    leave = Some((ratio, i, basis[i]));
                }
            }
            let Some((_, r, _)) = leave else {
                return Err(Error::NonConvergence("unbounded dual in minimax subproblem".into()));
            };
            let p = t[r * cols + e];
            for j in 0..cols {
                t[r * cols + j] /= p;
            }
            rhs[r] /= p;
            for i in 0..q {
                if i != r {
                    let f = t[i * cols + e];
                    if f != 0.0 {
                        for j in 0..cols {
                            t[i * cols + j] -= f * t[r * cols + j];
                        }
                        rhs[i] -= f * rhs[r];
                    }
                }
            }
            basis[r] = e;
        }
        Err(Error::NonConvergence("simplex iteration limit in minimax subproblem".into()))
    };

    let phase1_cost = |j: usize| if j >= k { -1.0 } else { 0.0 };
    run(&mut t, &mut rhs, &mut basis, &phase1_cost, false)?;
    let infeasibility: f64 = (0..q).filter(|&i| basis[i] >= k).map(|i| rhs[i]).sum();
    if infeasibility > 1e-9 {
        return Err(Error::NonConvergence("minimax subproblem has no feasible dual".into()));
    }
    let phase2_cost = |j: usize| if j < k { rows[j].1 } else { 0.0 };
    run(&mut t, &mut rhs, &mut basis, &phase2_cost, true)?;
    // Simplex multipliers sit under the artificial columns.
    Ok((0..q).map(|a| (0..q).map(|i| phase2_cost(basis[i]) * t[i * cols + k + a]).sum::<f64>()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AxisBox;
    use crate::quadrature::{box_closed, box_rule, Rule};

    fn grid_1d(lo: f64, hi: f64, k: usize, f: impl Fn(f64) -> f64) -> SampleSet {
        let pts = box_closed(&AxisBox::new(vec![lo], vec![hi - lo]).unwrap(), k);
        let w = vec![1.0; pts.len()];
        SampleSet::from_points(1, pts, w, |x| f(x[0]))
    }

    /// Brute-force oracle: grid search over (a, b).
    fn grid_search(s: &SampleSet, a_range: (f64, f64), b_range: (f64, f64), steps: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            let a = a_range.0 + (a_range.1 - a_range.0) * i as f64 / steps as f64;
            for j in 0..=steps {
                let b = b_range.0 + (b_range.1 - b_range.0) * j as f64 / steps as f64;
                let m = AffineMap::new(vec![a], b);
                best = best.min(super::super::objective(s, &m, FitNorm::Linf));
            }
        }
        best
    }

    #[test]
    fn square_equioscillates() {
        let s = grid_1d(-1.0, 1.0, 50, |x| x * x);
        let f = fit_affine_minimax(&s, None).unwrap();
        assert!(f.map.gradient[0].abs() < 1e-9);
        assert!((f.map.intercept - 0.5).abs() < 1e-9);
        assert!((f.objective - 0.5).abs() < 1e-9);
        assert!(f.objective <= grid_search(&s, (-0.5, 0.5), (0.0, 1.0), 200) + 1e-12);
    }

    #[test]
    fn kink_equioscillates() {
        let s = grid_1d(-1.0, 1.0, 50, f64::abs);
        let f = fit_affine_minimax(&s, None).unwrap();
        assert!((f.objective - 0.5).abs() < 1e-9);
        assert!((f.map.intercept - 0.5).abs() < 1e-9);
    }

    #[test]
    fn affine_data_fit_exactly() {
        let (pts, _) = box_rule(&AxisBox::cube(vec![0.0; 3], 1.0).unwrap(), 5, Rule::Midpoint);
        let w = vec![1.0; pts.len() / 3];
        let s = SampleSet::from_points(3, pts, w, |x| 1.0 - x[0] + 2.0 * x[1] + 0.5 * x[2]);
        let f = fit_affine_minimax(&s, None).unwrap();
        assert!(f.objective < 1e-12);
    }

    #[test]
    fn constrained_minimax_respects_bound() {
        let s = grid_1d(0.0, 1.0, 40, |x| 3.0 * x + x * x);
        let f = fit_affine_minimax(&s, Some(1.0)).unwrap();
        assert!(f.map.lipschitz() <= 1.0 + 1e-9);
        let oracle = grid_search(&s, (-1.0, 1.0), (-1.0, 3.0), 400);
        assert!(f.objective <= oracle + 1e-8, "{} vs {}", f.objective, oracle);
        assert!(f.objective >= oracle - 1e-2);
    }

    #[test]
    fn two_dimensional_cone() {
        let (pts, _) = box_rule(&AxisBox::symmetric(2, -1.0, 1.0).unwrap(), 21, Rule::Midpoint);
        let w = vec![1.0; pts.len() / 2];
        let s = SampleSet::from_points(2, pts, w, |x| x[0].hypot(x[1]));
        let f = fit_affine_minimax(&s, None).unwrap();
        let max_r = s.iter().map(|p| p.abscissa[0].hypot(p.abscissa[1])).fold(0.0f64, f64::max);
        let min_r = s.iter().map(|p| p.abscissa[0].hypot(p.abscissa[1])).fold(f64::INFINITY, f64::min);
        assert!((f.objective - 0.5 * (max_r - min_r)).abs() < 1e-9);
    }
}
