//! The discrete L² Čech-de Rham complex.
//!
//! A cochain of total degree `k` stores one coefficient vector per block
//! `(p, q, i)` with `p + q = k`, where `i` runs over the nonempty
//! `(p+1)`-fold intersections and the vector holds one value per `q`-simplex
//! of that intersection's sub-mesh. Blocks are ordered by `p`, then by
//! multi-index. All operators are assembled as global sparse matrices over
//! this layout.

mod mass;

use std::fmt;
use std::io::{self, Write};
use std::ops::Range;
use std::sync::{Arc, OnceLock};

pub use mass::{barycentric_gradients, whitney_edge_mass, TRIANGLE_EDGES};

use crate::cover::{Cover, MultiIndex, Patch};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, DenseMatrix, Factorization, SparseMatrix};
use crate::mesh::Mesh;
use crate::par;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex {
    pub p: usize,
    pub q: usize,
    pub idx: MultiIndex,
}

impl fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.idx.indices().iter().map(usize::to_string).collect();
        write!(f, "p{}_q{}_U{}", self.p, self.q, ids.join("."))
    }
}

/// Block structure of `A^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    k: usize,
    blocks: Vec<BlockIndex>,
    offsets: Vec<usize>,
}

impl Layout {
    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[BlockIndex] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &BlockIndex {
        &self.blocks[b]
    }

    /// Range of block `b` inside a flat cochain vector.
    pub fn range(&self, b: usize) -> Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    /// Position of the block with form degree `q` on intersection `idx`.
    pub fn find(&self, q: usize, idx: &MultiIndex) -> Option<usize> {
        let key = BlockIndex { p: idx.degree(), q, idx: idx.clone() };
        self.blocks.binary_search(&key).ok()
    }

    /// Block containing flat position `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }
}

/// Element of `A^k`, stored as one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    layout: Arc<Layout>,
    values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(layout: &Arc<Layout>) -> Self {
        Self { layout: Arc::clone(layout), values: vec![0.0; layout.dim()] }
    }

    pub fn from_values(layout: &Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cochain of degree {} needs {} values, got {}",
                layout.degree(),
                layout.dim(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite cochain value".into()));
        }
        Ok(Self { layout: Arc::clone(layout), values })
    }

    pub fn degree(&self) -> usize {
        self.layout.degree()
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn block(&self, b: usize) -> &[f64] {
        &self.values[self.layout.range(b)]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [f64] {
        let r = self.layout.range(b);
        &mut self.values[r]
    }
}

/// Piecewise-constant weight per top cell of every block of `A^k`.
///
/// A block may be identically zero, which switches that block off in the
/// inner product (degenerate couplings); otherwise all entries must be
/// strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    layout: Arc<Layout>,
    cells: Vec<Vec<f64>>,
}

impl WeightField {
    pub fn degree(&self) -> usize {
        self.layout.degree()
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Flat indices of all blocks with nonzero weight.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&b| !self.is_zero_block(b)).flat_map(|b| self.layout.range(b)).collect()
    }

    pub fn cell_values(&self, b: usize) -> &[f64] {
        &self.cells[b]
    }

    pub fn is_zero_block(&self, b: usize) -> bool {
        self.cells[b].iter().all(|&w| w == 0.0)
    }

    /// Whether every block is strictly positive (the inner product is definite).
    pub fn is_positive(&self) -> bool {
        (0..self.cells.len()).all(|b| !self.is_zero_block(b))
    }

    /// Copy with every entry multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let cells = self.cells.iter().map(|c| c.iter().map(|w| w * s).collect()).collect();
        let out = Self { layout: Arc::clone(&self.layout), cells };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        for (b, cells) in self.cells.iter().enumerate() {
            let block = self.layout.block(b);
            if let Some(w) = cells.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(Error::NonPositiveWeight(format!("weight {w} on block {block}")));
            }
            let zeros = cells.iter().filter(|&&w| w == 0.0).count();
            if zeros > 0 && zeros < cells.len() {
                return Err(Error::NonPositiveWeight(format!("block {block} is only partly zero")));
            }
        }
        Ok(())
    }
}

/// Weight fields for every degree `0..=max_degree + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    fields: Vec<WeightField>,
}

impl Weights {
    pub fn get(&self, k: usize) -> &WeightField {
        &self.fields[k]
    }

    pub fn set(&mut self, field: WeightField) -> Result<()> {
        let k = field.degree();
        if k >= self.fields.len() || *field.layout != *self.fields[k].layout {
            return Err(Error::DimensionMismatch(format!("weight field of degree {k} does not fit")));
        }
        self.fields[k] = field;
        Ok(())
    }
}

/// Sparse operator between two cochain spaces.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    domain: Arc<Layout>,
    codomain: Arc<Layout>,
    matrix: SparseMatrix,
}

impl BlockOperator {
    fn assemble(domain: &Arc<Layout>, codomain: &Arc<Layout>, blocks: Vec<(usize, usize, SparseMatrix)>) -> Self {
        let mut triplets = Vec::new();
        for (bo, bi, m) in &blocks {
            let (r0, c0) = (codomain.range(*bo).start, domain.range(*bi).start);
            triplets.extend(m.shifted_triplets(r0, c0));
        }
        let matrix = SparseMatrix::from_triplets(codomain.dim(), domain.dim(), triplets)
            .expect("block shapes match the layouts");
        Self { domain: Arc::clone(domain), codomain: Arc::clone(codomain), matrix }
    }

    pub fn domain(&self) -> &Arc<Layout> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<Layout> {
        &self.codomain
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseMatrix {
        self.matrix
    }

    pub fn apply(&self, x: &Cochain) -> Result<Cochain> {
        if **x.layout() != *self.domain {
            return Err(Error::DimensionMismatch(format!(
                "operator acts on degree {}, got a cochain of degree {}",
                self.domain.degree(),
                x.degree()
            )));
        }
        Ok(Cochain { layout: Arc::clone(&self.codomain), values: self.matrix.mul_vec(x.values()) })
    }

    /// The sub-matrix mapping domain block `bi` to codomain block `bo`.
    pub fn block(&self, bo: usize, bi: usize) -> SparseMatrix {
        let (rows, cols) = (self.codomain.range(bo), self.domain.range(bi));
        let mut triplets = Vec::new();
        for r in rows.clone() {
            let (cs, vs) = self.matrix.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                if cols.contains(&c) {
                    triplets.push((r - rows.start, c - cols.start, v));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), cols.len(), triplets).expect("sub-block indices are in range")
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }

    /// Coordinate-format text dump (1-based, matrix-market style).
    pub fn write_matrix_market(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "% degree {} -> {}", self.domain.degree(), self.codomain.degree())?;
        writeln!(out, "{} {} {}", self.matrix.nrows(), self.matrix.ncols(), self.matrix.nnz())?;
        for (r, c, v) in self.matrix.iter() {
            writeln!(out, "{} {} {v:e}", r + 1, c + 1)?;
        }
        Ok(())
    }
}

/// The codifferential `D*_k = M_{k−1}⁻¹ (D^{k−1})ᵀ M_k`, kept in factored form.
#[derive(Debug)]
pub struct Codifferential {
    domain: Arc<Layout>,
    codomain: Arc<Layout>,
    lower_mass: SparseMatrix,
    weighted_transpose: SparseMatrix,
    factor: OnceLock<Result<Factorization>>,
}

impl Codifferential {
    /// `M_{k−1}`.
    pub fn lower_mass(&self) -> &SparseMatrix {
        &self.lower_mass
    }

    /// `(D^{k−1})ᵀ M_k`.
    pub fn weighted_transpose(&self) -> &SparseMatrix {
        &self.weighted_transpose
    }

    pub fn apply(&self, x: &Cochain) -> Result<Cochain> {
        if **x.layout() != *self.domain {
            return Err(Error::DimensionMismatch("codifferential applied to wrong degree".into()));
        }
        let rhs = self.weighted_transpose.mul_vec(x.values());
        if self.codomain.dim() == 0 {
            return Ok(Cochain::zeros(&self.codomain));
        }
        let factor = self.factor.get_or_init(|| Factorization::new(&self.lower_mass));
        let values = factor.as_ref().map_err(Clone::clone)?.solve(&rhs)?;
        Ok(Cochain { layout: Arc::clone(&self.codomain), values })
    }

    /// Dense matrix of the operator, for small verification problems.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        if self.codomain.dim() == 0 {
            return Ok(DenseMatrix::zeros(0, self.domain.dim()));
        }
        solve_spd(&self.lower_mass.to_dense(), &self.weighted_transpose.to_dense())
    }
}

/// The four cross terms of `Δ_D − (Δ_d + Δ_δ)`, as dense matrices on `A^k`.
#[derive(Clone, Debug)]
pub struct CouplingTerms {
    pub k: usize,
    /// `d* δ`
    pub d_star_delta: DenseMatrix,
    /// `δ d*`
    pub delta_d_star: DenseMatrix,
    /// `δ* d`
    pub delta_star_d: DenseMatrix,
    /// `d δ*`
    pub d_delta_star: DenseMatrix,
}

impl CouplingTerms {
    /// `(−1)^k (d*δ − δd* + δ*d − dδ*)`.
    pub fn sum(&self) -> DenseMatrix {
        let s = if self.k % 2 == 0 { 1.0 } else { -1.0 };
        let acc = self
            .d_star_delta
            .add(&self.delta_d_star.scale(-1.0))
            .and_then(|m| m.add(&self.delta_star_d))
            .and_then(|m| m.add(&self.d_delta_star.scale(-1.0)))
            .expect("all terms are square on A^k");
        acc.scale(s)
    }
}

/// Cochain spaces and operators of the total complex over a cover.
#[derive(Clone, Debug)]
pub struct Complex {
    cover: Arc<Cover>,
    layouts: Vec<Arc<Layout>>,
}

impl Complex {
    pub fn new(cover: Arc<Cover>) -> Self {
        let n = cover.mesh().dim();
        let top = n + cover.max_level();
        let layouts = (0..=top + 1)
            .map(|k| {
                let mut blocks = Vec::new();
                let mut offsets = vec![0];
                for p in k.saturating_sub(n)..=k.min(cover.max_level()) {
                    let q = k - p;
                    for patch in cover.level(p) {
                        blocks.push(BlockIndex { p, q, idx: patch.index.clone() });
                        offsets.push(offsets.last().unwrap() + patch.submesh.num_simplices(q));
                    }
                }
                Arc::new(Layout { k, blocks, offsets })
            })
            .collect();
        Self { cover, layouts }
    }

    pub fn cover(&self) -> &Arc<Cover> {
        &self.cover
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.cover.mesh()
    }

    /// Largest degree with a nonzero cochain space, `n + max_level`.
    pub fn max_degree(&self) -> usize {
        self.layouts.len() - 2
    }

    pub fn layout(&self, k: usize) -> Result<&Arc<Layout>> {
        self.check_degree(k)?;
        Ok(&self.layouts[k])
    }

    /// Layout of `A^k` for `k ≤ max_degree + 1` (the last one is empty).
    fn layout_or_empty(&self, k: usize) -> &Arc<Layout> {
        &self.layouts[k.min(self.layouts.len() - 1)]
    }

    pub fn dim(&self, k: usize) -> usize {
        self.layouts.get(k).map_or(0, |l| l.dim())
    }

    pub fn zero_cochain(&self, k: usize) -> Result<Cochain> {
        Ok(Cochain::zeros(self.layout(k)?))
    }

    pub fn patch(&self, block: &BlockIndex) -> &Patch {
        self.cover.patch(&block.idx).expect("layout blocks name existing patches")
    }

    fn check_degree(&self, k: usize) -> Result<()> {
        if k > self.max_degree() {
            return Err(Error::DegreeOutOfRange {
                degree: k,
                admissible: format!("0..={}", self.max_degree()),
            });
        }
        Ok(())
    }

    /// Weight field on `A^k` with a constant value everywhere.
    pub fn uniform_weights(&self, k: usize, value: f64) -> Result<WeightField> {
        self.weights_from_fn(k, |_, _| value)
    }

    /// Weight field with one value per block.
    pub fn block_weights(&self, k: usize, f: impl Fn(&BlockIndex) -> f64) -> Result<WeightField> {
        self.weights_from_fn(k, |b, _| f(b))
    }

    /// Weight field evaluated at cell barycenters.
    pub fn weights_from_fn(&self, k: usize, f: impl Fn(&BlockIndex, [f64; 2]) -> f64) -> Result<WeightField> {
        let layout = Arc::clone(self.layout_or_empty(k));
        if k > self.max_degree() + 1 {
            self.check_degree(k)?;
        }
        let cells = layout
            .blocks()
            .iter()
            .map(|b| self.patch(b).submesh.cells().iter().map(|&c| f(b, self.mesh().cell_center(c))).collect())
            .collect();
        let field = WeightField { layout, cells };
        field.validate()?;
        Ok(field)
    }

    /// Unit weights on every degree.
    pub fn unit_weights(&self) -> Weights {
        let fields = (0..self.layouts.len())
            .map(|k| self.uniform_weights(k, 1.0).expect("unit weights are valid"))
            .collect();
        Weights { fields }
    }

    /// Block-diagonal `d`: `A^{p,q} → A^{p,q+1}` on every intersection.
    pub fn d_operator(&self, k: usize) -> Result<BlockOperator> {
        self.check_degree(k)?;
        let (from, to) = (self.layout_or_empty(k), self.layout_or_empty(k + 1));
        let n = self.mesh().dim();
        let blocks = par::map_range(from.num_blocks(), |bi| {
            let b = from.block(bi);
            if b.q >= n {
                return None;
            }
            let bo = to.find(b.q + 1, &b.idx).expect("same intersection one form degree up");
            let m = self.patch(b).submesh.coboundary_matrix(b.q).expect("q < n");
            Some((bo, bi, m))
        });
        Ok(BlockOperator::assemble(from, to, blocks.into_iter().flatten().collect()))
    }

    /// Čech difference `δ`: `(δα)_i = Σ_j (−1)^j α_{i∖i_j}|_{U_i}`.
    pub fn delta_operator(&self, k: usize) -> Result<BlockOperator> {
        self.check_degree(k)?;
        let (from, to) = (self.layout_or_empty(k), self.layout_or_empty(k + 1));
        let blocks = par::map_range(to.num_blocks(), |bo| {
            let b = to.block(bo);
            if b.p == 0 {
                return Vec::new();
            }
            (0..=b.p)
                .map(|j| {
                    let src = b.idx.omit(j);
                    let bi = from.find(b.q, &src).expect("sub-intersections are present");
                    let r = self.cover.restriction(b.q, &src, &b.idx).expect("restriction assembled");
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    (bo, bi, r.scale(sign))
                })
                .collect()
        });
        Ok(BlockOperator::assemble(from, to, blocks.into_iter().flatten().collect()))
    }

    /// Total differential `D^k = d + (−1)^k δ`.
    pub fn total_derivative(&self, k: usize) -> Result<BlockOperator> {
        let d = self.d_operator(k)?;
        let delta = self.delta_operator(k)?;
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        let matrix = d.matrix.add(&delta.matrix.scale(s))?;
        Ok(BlockOperator { matrix, ..d })
    }

    /// Block-diagonal weighted mass matrix of `A^k`.
    pub fn mass_matrix(&self, k: usize, w: &WeightField) -> Result<BlockOperator> {
        let layout = self.layout_or_empty(k);
        if k > self.max_degree() + 1 || *w.layout != **layout {
            return Err(Error::DimensionMismatch(format!(
                "weight field of degree {} used for mass matrix of degree {k}",
                w.degree()
            )));
        }
        w.validate()?;
        let blocks = par::map_range(layout.num_blocks(), |b| {
            let block = layout.block(b);
            (b, b, mass::local_mass(&self.patch(block).submesh, block.q, w.cell_values(b)))
        });
        Ok(BlockOperator::assemble(layout, layout, blocks))
    }

    /// Codifferential `D*_k: A^k → A^{k−1}` for `k ≥ 1`.
    pub fn codifferential(&self, k: usize, w_k: &WeightField, w_km1: &WeightField) -> Result<Codifferential> {
        if k == 0 {
            return Err(Error::DegreeOutOfRange { degree: 0, admissible: format!("1..={}", self.max_degree()) });
        }
        self.check_degree(k)?;
        let d = self.total_derivative(k - 1)?;
        let m_k = self.mass_matrix(k, w_k)?;
        let m_km1 = self.mass_matrix(k - 1, w_km1)?;
        let weighted_transpose = d.matrix.transpose().matmul(m_k.matrix())?;
        Ok(Codifferential {
            domain: Arc::clone(self.layout_or_empty(k)),
            codomain: Arc::clone(self.layout_or_empty(k - 1)),
            lower_mass: m_km1.into_matrix(),
            weighted_transpose,
            factor: OnceLock::new(),
        })
    }

    /// Dense weighted adjoint `M_low⁻¹ Aᵀ M_high` of an operator `A`.
    pub fn weighted_adjoint(&self, op: &SparseMatrix, m_low: &SparseMatrix, m_high: &SparseMatrix) -> Result<DenseMatrix> {
        if m_low.nrows() == 0 {
            return Ok(DenseMatrix::zeros(0, m_high.nrows()));
        }
        let rhs = op.transpose().matmul(m_high)?;
        solve_spd(&m_low.to_dense(), &rhs.to_dense())
    }

    /// The four cross terms separating `Δ_D^k` from `Δ_d + Δ_δ`.
    pub fn coupling_terms(&self, k: usize, weights: &Weights) -> Result<CouplingTerms> {
        self.check_degree(k)?;
        let n_k = self.dim(k);
        let m_k = self.mass_matrix(k, weights.get(k))?.into_matrix();
        let m_kp1 = self.mass_matrix(k + 1, weights.get(k + 1))?.into_matrix();
        let d_k = self.d_operator(k)?.into_matrix();
        let delta_k = self.delta_operator(k)?.into_matrix();
        // adjoints out of A^{k+1}
        let d_star_up = self.weighted_adjoint(&d_k, &m_k, &m_kp1)?;
        let delta_star_up = self.weighted_adjoint(&delta_k, &m_k, &m_kp1)?;
        let d_star_delta = d_star_up.matmul(&delta_k.to_dense())?;
        let delta_star_d = delta_star_up.matmul(&d_k.to_dense())?;
        let (delta_d_star, d_delta_star) = if k == 0 {
            (DenseMatrix::zeros(n_k, n_k), DenseMatrix::zeros(n_k, n_k))
        } else {
            let m_km1 = self.mass_matrix(k - 1, weights.get(k - 1))?.into_matrix();
            let d_km1 = self.d_operator(k - 1)?.into_matrix();
            let delta_km1 = self.delta_operator(k - 1)?.into_matrix();
            let d_star = self.weighted_adjoint(&d_km1, &m_km1, &m_k)?;
            let delta_star = self.weighted_adjoint(&delta_km1, &m_km1, &m_k)?;
            (delta_km1.to_dense().matmul(&d_star)?, d_km1.to_dense().matmul(&delta_star)?)
        };
        Ok(CouplingTerms { k, d_star_delta, delta_d_star, delta_star_d, d_delta_star })
    }
}
