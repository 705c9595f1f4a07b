//! Structured simplicial meshes in one and two dimensions.
//!
//! Simplices are stored as strictly increasing vertex tuples. The coboundary
//! of a `q`-simplex face obtained by omitting vertex `j` carries the sign
//! `(-1)^j`, so `d^{q+1} d^q = 0` holds with integer entries.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

/// Padded vertex tuple used as a hash key; unused slots hold `usize::MAX`.
type SimplexKey = [usize; 3];

fn key_of(verts: &[usize]) -> SimplexKey {
    let mut k = [usize::MAX; 3];
    k[..verts.len()].copy_from_slice(verts);
    k
}

/// All simplices of one dimension, stored flat with a fixed arity.
#[derive(Clone, Debug)]
pub struct SimplexSet {
    arity: usize,
    verts: Vec<usize>,
    lookup: HashMap<SimplexKey, usize>,
}

impl SimplexSet {
    fn new(arity: usize, simplices: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let mut verts = Vec::new();
        let mut lookup = HashMap::new();
        for (i, s) in simplices.into_iter().enumerate() {
            debug_assert_eq!(s.len(), arity);
            lookup.insert(key_of(&s), i);
            verts.extend(s);
        }
        Self { arity, verts, lookup }
    }

    pub fn len(&self) -> usize {
        self.verts.len() / self.arity
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.verts[i * self.arity..(i + 1) * self.arity]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.verts.chunks(self.arity)
    }

    /// Index of the simplex with the given (sorted) vertex tuple.
    pub fn find(&self, verts: &[usize]) -> Option<usize> {
        self.lookup.get(&key_of(verts)).copied()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 2]>,
    simplices: Vec<SimplexSet>,
    measures: Vec<Vec<f64>>,
}

impl Mesh {
    /// Builds a mesh from its top-dimensional cells. Vertices not referenced
    /// by any cell are dropped (indices are renumbered monotonically), and
    /// all lower-dimensional faces are generated in lexicographic order.
    pub fn from_cells(dim: usize, vertices: &[[f64; 2]], cells: &[Vec<usize>]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidRange(format!("mesh dimension {dim} not in {{1, 2}}")));
        }
        if cells.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut used = vec![false; vertices.len()];
        for c in cells {
            if c.len() != dim + 1 {
                return Err(Error::InvalidRange(format!("cell {c:?} is not a {dim}-simplex")));
            }
            for &v in c {
                *used.get_mut(v).ok_or(Error::InvalidCell(v))? = true;
            }
        }
        let mut renumber = vec![usize::MAX; vertices.len()];
        let mut kept = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                renumber[i] = kept.len();
                kept.push(vertices[i]);
            }
        }
        let mut top: Vec<Vec<usize>> = cells
            .iter()
            .map(|c| {
                let mut s: Vec<usize> = c.iter().map(|&v| renumber[v]).collect();
                s.sort_unstable();
                s
            })
            .collect();
        for s in &top {
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidRange(format!("degenerate cell {s:?}")));
            }
        }
        let mut levels: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim + 1];
        levels[0] = (0..kept.len()).map(|v| vec![v]).collect();
        for q in (1..dim).rev() {
            let source = if q + 1 == dim { &top } else { &levels[q + 1] };
            let faces: BTreeSet<Vec<usize>> = source.iter().flat_map(|s| faces_of(s)).collect();
            levels[q] = faces.into_iter().collect();
        }
        // keep top cells in the caller's order so cell indices stay meaningful
        levels[dim] = std::mem::take(&mut top);
        let simplices: Vec<SimplexSet> = levels
            .into_iter()
            .enumerate()
            .map(|(q, list)| SimplexSet::new(q + 1, list))
            .collect();
        let mut mesh = Self { dim, vertices: kept, simplices, measures: Vec::new() };
        mesh.measures = (0..=dim).map(|q| mesh.compute_measures(q)).collect();
        if let Some((q, i)) = (0..=dim)
            .flat_map(|q| mesh.measures[q].iter().enumerate().map(move |(i, &m)| (q, i, m)))
            .find(|&(_, _, m)| !(m > 0.0))
            .map(|(q, i, _)| (q, i))
        {
            return Err(Error::InvalidRange(format!("{q}-simplex {i} has zero measure")));
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn simplices(&self, q: usize) -> &SimplexSet {
        &self.simplices[q]
    }

    pub fn num_simplices(&self, q: usize) -> usize {
        self.simplices.get(q).map_or(0, SimplexSet::len)
    }

    pub fn num_cells(&self) -> usize {
        self.num_simplices(self.dim)
    }

    /// Length/area of each `q`-simplex; vertices have unit measure.
    pub fn cell_measures(&self, q: usize) -> &[f64] {
        &self.measures[q]
    }

    /// Coordinates of the vertices of simplex `i` of dimension `q`.
    pub fn simplex_points(&self, q: usize, i: usize) -> Vec<[f64; 2]> {
        self.simplices[q].get(i).iter().map(|&v| self.vertices[v]).collect()
    }

    /// Barycenter of simplex `i` of dimension `q`.
    pub fn barycenter(&self, q: usize, i: usize) -> [f64; 2] {
        let pts = self.simplex_points(q, i);
        let n = pts.len() as f64;
        let sx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let sy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        [sx, sy]
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        self.barycenter(self.dim, cell)
    }

    /// Cells whose barycenter satisfies `pred`.
    pub fn cells_where(&self, pred: impl Fn([f64; 2]) -> bool) -> Vec<usize> {
        (0..self.num_cells()).filter(|&c| pred(self.cell_center(c))).collect()
    }

    pub fn total_measure(&self) -> f64 {
        self.measures[self.dim].iter().sum()
    }

    /// Signed incidence matrix `d^q` of shape `#(q+1)-simplices × #q-simplices`.
    pub fn coboundary_matrix(&self, q: usize) -> Result<SparseMatrix> {
        if q >= self.dim {
            return Err(Error::DegreeOutOfRange {
                degree: q,
                admissible: format!("0..{}", self.dim),
            });
        }
        let upper = &self.simplices[q + 1];
        let lower = &self.simplices[q];
        let mut triplets = Vec::with_capacity(upper.len() * (q + 2));
        for (row, s) in upper.iter().enumerate() {
            for (j, face) in faces_of(s).enumerate() {
                let col = lower.find(&face).expect("mesh is closed under faces");
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                triplets.push((row, col, sign));
            }
        }
        SparseMatrix::from_triplets(upper.len(), lower.len(), triplets)
    }

    /// Copy of the mesh restricted to the given cells.
    pub fn restrict_cells(&self, cells: &[usize]) -> Result<Self> {
        let top: Vec<Vec<usize>> = cells
            .iter()
            .map(|&c| {
                if c >= self.num_cells() {
                    Err(Error::InvalidCell(c))
                } else {
                    Ok(self.simplices[self.dim].get(c).to_vec())
                }
            })
            .collect::<Result<_>>()?;
        Self::from_cells(self.dim, &self.vertices, &top)
    }

    fn compute_measures(&self, q: usize) -> Vec<f64> {
        (0..self.simplices[q].len())
            .map(|i| {
                let p = self.simplex_points(q, i);
                match q {
                    0 => 1.0,
                    1 => ((p[1][0] - p[0][0]).powi(2) + (p[1][1] - p[0][1]).powi(2)).sqrt(),
                    _ => {
                        let (ax, ay) = (p[1][0] - p[0][0], p[1][1] - p[0][1]);
                        let (bx, by) = (p[2][0] - p[0][0], p[2][1] - p[0][1]);
                        0.5 * (ax * by - ay * bx).abs()
                    }
                }
            })
            .collect()
    }
}

/// Faces of a sorted simplex in the order "omit vertex 0, omit vertex 1, ...".
pub fn faces_of(s: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..s.len()).map(move |j| {
        s.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect()
    })
}

/// Uniform mesh of `[a, b]` with `cells` intervals.
pub fn build_interval_mesh(a: f64, b: f64, cells: usize) -> Result<Mesh> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidRange(format!("interval [{a}, {b}]")));
    }
    if cells == 0 {
        return Err(Error::InvalidRange("interval mesh needs at least one cell".into()));
    }
    let h = (b - a) / cells as f64;
    let vertices: Vec<[f64; 2]> = (0..=cells)
        .map(|i| [if i == cells { b } else { a + h * i as f64 }, 0.0])
        .collect();
    let top: Vec<Vec<usize>> = (0..cells).map(|i| vec![i, i + 1]).collect();
    Mesh::from_cells(1, &vertices, &top)
}

/// Structured triangulation of `[x0, x1] × [y0, y1]`: each grid quad is split
/// along its lower-left to upper-right diagonal.
pub fn build_triangle_mesh(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(x0 < x1) || !(y0 < y1) {
        return Err(Error::InvalidRange(format!("box [{x0}, {x1}] x [{y0}, {y1}]")));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidRange("triangle mesh needs nx, ny >= 1".into()));
    }
    let (hx, hy) = ((x1 - x0) / nx as f64, (y1 - y0) / ny as f64);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + hx * i as f64 };
            let y = if j == ny { y1 } else { y0 + hy * j as f64 };
            vertices.push([x, y]);
        }
    }
    let v = |i: usize, j: usize| j * (nx + 1) + i;
    let mut top = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            top.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            top.push(vec![v(i, j), v(i, j + 1), v(i + 1, j + 1)]);
        }
    }
    Mesh::from_cells(2, &vertices, &top)
}

/// Closure of a set of parent cells, with injective maps from sub-simplex
/// indices to parent simplex indices (increasing, so orientation is inherited).
#[derive(Clone, Debug)]
pub struct SubMesh {
    parent: Arc<Mesh>,
    cells: Vec<usize>,
    dof_map: Vec<Vec<usize>>,
}

impl SubMesh {
    pub fn parent(&self) -> &Arc<Mesh> {
        &self.parent
    }

    /// Parent indices of the included top cells, increasing.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn num_simplices(&self, q: usize) -> usize {
        self.dof_map.get(q).map_or(0, Vec::len)
    }

    /// Parent index of local simplex `i` of dimension `q`.
    pub fn parent_index(&self, q: usize, i: usize) -> usize {
        self.dof_map[q][i]
    }

    pub fn dof_map(&self, q: usize) -> &[usize] {
        &self.dof_map[q]
    }

    /// Local index of a parent simplex, if it lies in the closure.
    pub fn local_index(&self, q: usize, parent: usize) -> Option<usize> {
        self.dof_map[q].binary_search(&parent).ok()
    }

    /// 0/1 matrix `R_q` selecting sub-simplices out of parent cochains.
    pub fn selection_matrix(&self, q: usize) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.num_simplices(q),
            self.parent.num_simplices(q),
            self.dof_map[q].iter().enumerate().map(|(i, &p)| (i, p, 1.0)),
        )
        .expect("dof map is within parent bounds")
    }

    /// Coboundary `d^q` on the sub-mesh, obtained by row/column selection of
    /// the parent coboundary.
    pub fn coboundary_matrix(&self, q: usize) -> Result<SparseMatrix> {
        let parent_d = self.parent.coboundary_matrix(q)?;
        let rows = &self.dof_map[q + 1];
        let mut triplets = Vec::new();
        for (i, &pr) in rows.iter().enumerate() {
            let (cols, vals) = parent_d.row(pr);
            for (&pc, &v) in cols.iter().zip(vals) {
                let j = self.local_index(q, pc).expect("faces of included simplices are included");
                triplets.push((i, j, v));
            }
        }
        SparseMatrix::from_triplets(rows.len(), self.num_simplices(q), triplets)
    }

    /// Standalone mesh with the same cells.
    pub fn to_mesh(&self) -> Result<Mesh> {
        self.parent.restrict_cells(&self.cells)
    }

    pub fn measure(&self) -> f64 {
        let m = self.parent.cell_measures(self.parent.dim());
        self.cells.iter().map(|&c| m[c]).sum()
    }
}

/// Extracts the closure of a nonempty set of parent cells.
pub fn extract_submesh(mesh: &Arc<Mesh>, cells: &[usize]) -> Result<SubMesh> {
    if cells.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = mesh.dim();
    let mut cell_set = BTreeSet::new();
    for &c in cells {
        if c >= mesh.num_cells() {
            return Err(Error::InvalidCell(c));
        }
        cell_set.insert(c);
    }
    let mut dof_map: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    dof_map[n] = cell_set.iter().copied().collect();
    for q in (0..n).rev() {
        let mut faces = BTreeSet::new();
        for &s in &dof_map[q + 1] {
            for face in faces_of(mesh.simplices(q + 1).get(s)) {
                faces.insert(mesh.simplices(q).find(&face).expect("closed under faces"));
            }
        }
        dof_map[q] = faces.into_iter().collect();
    }
    Ok(SubMesh { parent: Arc::clone(mesh), cells: dof_map[n].clone(), dof_map })
}
