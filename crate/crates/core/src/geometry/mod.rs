//! Dyadic decompositions, affine planes and lines, simplices, metrics and
//! Monte Carlo samplers for the translation-invariant measures on lines and
//! hyperplanes.

mod cells;
mod plane;
mod sampling;
mod simplex;

pub use cells::{AxisBox, DyadicCube, ParabolicBox, ParabolicDyadic};
pub use plane::{
    intersect_hyperplanes, parabolic_distance, plane_metric, transversality, AffineMap, Hyperplane, LineSeg, DET_TOL,
};
pub use sampling::{
    estimate_measure, hyperplane_measure, line_measure, random_boxes, random_parabolic_boxes, sample_hyperplanes,
    sample_lines, unit_ball_volume, MeasureEstimate,
};
pub use simplex::{regular_simplex_planes, simplex_from_planes, Simplex};

/// All `k`-element index subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::combinations;

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }
}
