//! Element mass matrices for lowest-order Whitney forms.

use crate::linalg::SparseMatrix;
use crate::mesh::SubMesh;

/// `∫ λ_a λ_b` over a simplex of dimension `n` and measure `vol`.
fn barycentric_product(n: usize, vol: f64, a: usize, b: usize) -> f64 {
    let delta = if a == b { 2.0 } else { 1.0 };
    vol * delta / ((n + 1) * (n + 2)) as f64
}

/// Gradients of the barycentric coordinates of a triangle and its area.
pub fn barycentric_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let g = [
        [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
        [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
        [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
    ];
    (g, 0.5 * det.abs())
}

/// Local edges of a triangle with increasing vertex labels, in lexicographic order.
pub const TRIANGLE_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Whitney 1-form mass matrix `∫ W_e · W_f` on one triangle, where
/// `W_ij = λ_i ∇λ_j − λ_j ∇λ_i` and edges follow [`TRIANGLE_EDGES`].
pub fn whitney_edge_mass(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let (g, area) = barycentric_gradients(p);
    let gg = |a: usize, b: usize| g[a][0] * g[b][0] + g[a][1] * g[b][1];
    let ii = |a: usize, b: usize| barycentric_product(2, area, a, b);
    let mut m = [[0.0; 3]; 3];
    for (e, &(i, j)) in TRIANGLE_EDGES.iter().enumerate() {
        for (f, &(k, l)) in TRIANGLE_EDGES.iter().enumerate() {
            m[e][f] = ii(i, k) * gg(j, l) - ii(i, l) * gg(j, k) - ii(j, k) * gg(i, l) + ii(j, l) * gg(i, k);
        }
    }
    m
}

/// Weighted `q`-form mass matrix on a sub-mesh, one weight per included cell.
/// Cells with zero weight contribute nothing.
pub(crate) fn local_mass(sub: &SubMesh, q: usize, cell_weights: &[f64]) -> SparseMatrix {
    let mesh = sub.parent();
    let n = mesh.dim();
    let mut triplets = Vec::new();
    for (ci, (&cell, &w)) in sub.cells().iter().zip(cell_weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        let verts = mesh.simplices(n).get(cell);
        let vol = mesh.cell_measures(n)[cell];
        if q == n {
            triplets.push((ci, ci, w / vol));
        } else if q == 0 {
            let local: Vec<usize> =
                verts.iter().map(|&v| sub.local_index(0, v).expect("closure contains vertices")).collect();
            for a in 0..=n {
                for b in 0..=n {
                    triplets.push((local[a], local[b], w * barycentric_product(n, vol, a, b)));
                }
            }
        } else {
            let pts = [mesh.vertices()[verts[0]], mesh.vertices()[verts[1]], mesh.vertices()[verts[2]]];
            let m = whitney_edge_mass(pts);
            let local: Vec<usize> = TRIANGLE_EDGES
                .iter()
                .map(|&(i, j)| {
                    let e = mesh.simplices(1).find(&[verts[i], verts[j]]).expect("edge of triangle");
                    sub.local_index(1, e).expect("closure contains edges")
                })
                .collect();
            for e in 0..3 {
                for f in 0..3 {
                    triplets.push((local[e], local[f], w * m[e][f]));
                }
            }
        }
    }
    let size = sub.num_simplices(q);
    SparseMatrix::from_triplets(size, size, triplets).expect("local indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_triangle_edge_mass() {
        // W01 = (1-y, x), W02 = (y, 1-x), W12 = (-y, x), integrated by hand
        let m = whitney_edge_mass([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expected = [[1.0 / 3.0, 1.0 / 6.0, 0.0], [1.0 / 6.0, 1.0 / 3.0, 0.0], [0.0, 0.0, 1.0 / 6.0]];
        for e in 0..3 {
            for f in 0..3 {
                assert_abs_diff_eq!(m[e][f], expected[e][f], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gradients_sum_to_zero() {
        let (g, area) = barycentric_gradients([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]);
        assert_abs_diff_eq!(g[0][0] + g[1][0] + g[2][0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[0][1] + g[1][1] + g[2][1], 0.0, epsilon = 1e-14);
        assert!(area > 0.0);
    }
}
