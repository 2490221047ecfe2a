//! Small dense linear algebra used by the fitting and geometry code.
//!
//! Matrices are row-major `Vec<f64>` of size `n * n`; every system here has
//! dimension at most a handful, so partial-pivot elimination is all we need.

/// Result of an LU-style elimination that failed on a small pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallPivot(pub f64);

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot whose magnitude is `<= tol` aborts the solve.
pub fn solve(a: &[f64], b: &[f64], n: usize, tol: f64) -> Result<Vec<f64>, SmallPivot> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv_row, piv_val) =
            (col..n).map(|r| (r, m[r * n + col].abs())).fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if piv_val <= tol {
            return Err(SmallPivot(piv_val));
        }
        if piv_row != col {
            for k in 0..n {
                m.swap(col * n + k, piv_row * n + k);
            }
            x.swap(col, piv_row);
        }
        let p = m[col * n + col];
        for r in (col + 1)..n {
            let factor = m[r * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= factor * m[col * n + k];
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in (col + 1)..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Ok(x)
}

/// Determinant by elimination with partial pivoting.
pub fn det(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let (piv_row, piv_val) =
            (col..n).map(|r| (r, m[r * n + col].abs())).fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if piv_val == 0.0 {
            return 0.0;
        }
        if piv_row != col {
            for k in 0..n {
                m.swap(col * n + k, piv_row * n + k);
            }
            d = -d;
        }
        let p = m[col * n + col];
        d *= p;
        for r in (col + 1)..n {
            let factor = m[r * n + col] / p;
            for k in col..n {
                m[r * n + k] -= factor * m[col * n + k];
            }
        }
    }
    d
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Orthonormal basis of the orthogonal complement of the unit vector `e`.
///
/// Gram-Schmidt over the coordinate axes, starting from the axis least
/// aligned with `e`, so the result is a deterministic function of `e`.
pub fn complement_basis(e: &[f64]) -> Vec<Vec<f64>> {
    let n = e.len();
    let mut axes: Vec<usize> = (0..n).collect();
    axes.sort_by(|&i, &j| e[i].abs().partial_cmp(&e[j].abs()).unwrap().then(i.cmp(&j)));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    for &ax in &axes {
        if basis.len() + 1 == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[ax] = 1.0;
        let proj = dot(&v, e);
        v = add_scaled(&v, -proj, e);
        for b in &basis {
            let p = dot(&v, b);
            v = add_scaled(&v, -p, b);
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            basis.push(scale(&v, 1.0 / nv));
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let x = solve(&a, &[3.0, 5.0], 2, 1e-14).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_system_reports_pivot() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(solve(&a, &[1.0, 2.0], 2, 1e-12).is_err());
    }

    #[test]
    fn determinant_of_permutation() {
        let a = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(det(&a, 3), -1.0);
    }

    #[test]
    fn complement_is_orthonormal() {
        let e = [0.6, 0.0, 0.8];
        let b = complement_basis(&e);
        assert_eq!(b.len(), 2);
        for (i, u) in b.iter().enumerate() {
            assert!(dot(u, &e).abs() < 1e-14);
            assert!((norm(u) - 1.0).abs() < 1e-14);
            for w in &b[i + 1..] {
                assert!(dot(u, w).abs() < 1e-14);
            }
        }
    }
}
