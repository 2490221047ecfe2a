use serde::{Deserialize, Serialize};

use super::plane::{intersect_refs, transversality, Hyperplane};
use crate::error::{Error, Result};
use crate::linalg::{self, complement_basis, dot, norm};

/// Simplex with `n + 1` vertices in `R^n`; `faces[j]` is the outward face
/// plane opposite `vertices[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub faces: Vec<Hyperplane>,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim();
        let m: Vec<f64> = self.vertices[1..].iter().flat_map(|v| linalg::sub(v, &self.vertices[0])).collect();
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        linalg::det(&m, n).abs() / fact
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.faces.iter().all(|f| f.signed_distance(x) <= tol)
    }

    /// Parameter interval of `{base + s dir}` inside the simplex.
    pub fn clip_line(&self, base: &[f64], dir: &[f64]) -> Option<(f64, f64)> {
        let mut s0 = f64::NEG_INFINITY;
        let mut s1 = f64::INFINITY;
        for f in &self.faces {
            let slope = dot(&f.normal, dir);
            let value = f.signed_distance(base);
            if slope.abs() < 1e-15 {
                if value > 0.0 {
                    return None;
                }
            } else if slope > 0.0 {
                s1 = s1.min(-value / slope);
            } else {
                s0 = s0.max(-value / slope);
            }
        }
        (s1 > s0).then_some((s0, s1))
    }

    /// Indices of the vertices lying on face `j`.
    pub fn face_vertices(&self, j: usize) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&i| i != j).collect()
    }
}

/// Simplex whose facets lie on the given `n + 1` hyperplanes.
pub fn simplex_from_planes(planes: &[Hyperplane]) -> Result<Simplex> {
    let n = planes.first().map(|p| p.dim()).unwrap_or(0);
    if n == 0 || planes.len() != n + 1 {
        return Err(Error::DegenerateSimplex(format!("need n + 1 = {} planes, got {}", n + 1, planes.len())));
    }
    let tau = transversality(planes);
    if !(tau > 1e-8) {
        return Err(Error::DegenerateSimplex(format!("planes are not transversal (tau = {tau:e})")));
    }
    let mut vertices = Vec::with_capacity(n + 1);
    for skip in 0..=n {
        let refs: Vec<&Hyperplane> = planes.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| p).collect();
        vertices.push(intersect_refs(&refs).map_err(|e| Error::DegenerateSimplex(e.to_string()))?);
    }
    let faces = planes
        .iter()
        .enumerate()
        .map(|(j, p)| {
            if p.signed_distance(&vertices[j]) > 0.0 {
                Hyperplane { normal: p.normal.iter().map(|c| -c).collect(), offset: -p.offset }
            } else {
                p.clone()
            }
        })
        .collect();
    let simplex = Simplex { vertices, faces };
    if !(simplex.volume() > 0.0) {
        return Err(Error::DegenerateSimplex("zero volume".into()));
    }
    Ok(simplex)
}

/// Facet planes of a regular simplex centred at `center` with the given
/// inradius, with outward normals.
pub fn regular_simplex_planes(center: &[f64], inradius: f64) -> Vec<Hyperplane> {
    let n = center.len();
    let m = n + 1;
    let ones = vec![1.0 / (m as f64).sqrt(); m];
    let basis = complement_basis(&ones);
    let centroid = 1.0 / m as f64;
    (0..m)
        .map(|i| {
            let mut e = vec![-centroid; m];
            e[i] += 1.0;
            let v: Vec<f64> = basis.iter().map(|b| dot(b, &e)).collect();
            let nv = norm(&v);
            let outward: Vec<f64> = v.iter().map(|c| -c / nv).collect();
            let offset = inradius + dot(center, &outward);
            Hyperplane { normal: outward, offset }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(e: &[f64], t: f64) -> Hyperplane {
        Hyperplane::new(e.to_vec(), t).unwrap()
    }

    #[test]
    fn unit_triangle() {
        let s =
            simplex_from_planes(&[plane(&[1.0, 0.0], 0.0), plane(&[0.0, 1.0], 0.0), plane(&[1.0, 1.0], 1.0)]).unwrap();
        let mut vs = s.vertices.clone();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        for (v, e) in vs.iter().zip(expect) {
            assert!((v[0] - e[0]).abs() < 1e-14 && (v[1] - e[1]).abs() < 1e-14);
        }
        assert!((s.volume() - 0.5).abs() < 1e-14);
        assert!(s.contains(&[0.2, 0.2], 0.0));
        assert!(!s.contains(&[0.8, 0.8], 0.0));
    }

    #[test]
    fn standard_tetrahedron_volume() {
        let s = simplex_from_planes(&[
            plane(&[1.0, 0.0, 0.0], 0.0),
            plane(&[0.0, 1.0, 0.0], 0.0),
            plane(&[0.0, 0.0, 1.0], 0.0),
            plane(&[1.0, 1.0, 1.0], 1.0),
        ])
        .unwrap();
        assert!((s.volume() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn parallel_pair_is_degenerate() {
        let r = simplex_from_planes(&[plane(&[1.0, 0.0], 0.0), plane(&[1.0, 0.0], 1.0), plane(&[0.0, 1.0], 0.0)]);
        assert!(matches!(r, Err(Error::DegenerateSimplex(_))));
    }

    #[test]
    fn regular_simplex_has_requested_inradius() {
        for n in 2..=3 {
            let c = vec![0.5; n];
            let planes = regular_simplex_planes(&c, 0.3);
            let s = simplex_from_planes(&planes).unwrap();
            for f in &s.faces {
                assert!((f.signed_distance(&c) + 0.3).abs() < 1e-12);
            }
            for (j, v) in s.vertices.iter().enumerate() {
                assert!((linalg::norm(&linalg::sub(v, &c)) - 0.3 * n as f64).abs() < 1e-12, "vertex {j}");
            }
        }
    }

    #[test]
    fn clip_line_in_triangle() {
        let s = simplex_from_planes(&regular_simplex_planes(&[0.0, 0.0], 1.0)).unwrap();
        let (a, b) = s.clip_line(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(a < 0.0 && b > 0.0);
        for t in [a, b] {
            let p = [t, 0.0];
            let on_face = s.faces.iter().any(|f| f.signed_distance(&p).abs() < 1e-12);
            assert!(on_face);
        }
    }
}
