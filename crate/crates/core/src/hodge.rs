//! Hodge-Laplace problems on the discrete complex: harmonic spaces,
//! cohomology, source solves, orthogonal decomposition and Poincaré constants.
//!
//! With `B = (D^{k−1})ᵀ M_k` and `K = (D^k)ᵀ M_{k+1} D^k`, the weak
//! Hodge-Laplacian is `M_k Δ = Bᵀ M_{k−1}⁻¹ B + K`. Source problems are posed
//! in mixed form with `γ = D*α` as an extra unknown and a Lagrange
//! multiplier enforcing `α ⊥ ker Δ`.

use std::sync::Arc;

use crate::complex::{BlockOperator, Cochain, Complex, Layout, WeightField, Weights};
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, dot, exact_rank, norm, nullspace, range_basis, solve_lower, solve_lower_transpose, symmetric_eigen,
    DenseMatrix, Factorization, SparseMatrix,
};

/// Relative singular-value threshold for null spaces and ranges.
pub const HARMONIC_TOL: f64 = 1e-8;
/// Largest cochain space handled by dense routines.
pub const DENSE_BUDGET: usize = 5000;
/// Harmonic fraction of a source above which it is projected.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

fn check_budget(dim: usize) -> Result<()> {
    if dim > DENSE_BUDGET {
        return Err(Error::SizeLimit { dim, budget: DENSE_BUDGET });
    }
    Ok(())
}

fn require_positive(w: &WeightField, what: &str) -> Result<()> {
    if !w.is_positive() {
        return Err(Error::NonPositiveWeight(format!(
            "{what} needs strictly positive weights on degree {}",
            w.degree()
        )));
    }
    Ok(())
}

/// Mass matrices and differentials around degree `k`.
#[derive(Clone, Debug)]
pub struct HodgeOperators {
    pub k: usize,
    pub m_km1: Option<SparseMatrix>,
    pub m_k: SparseMatrix,
    pub m_kp1: SparseMatrix,
    pub d_km1: Option<BlockOperator>,
    pub d_k: BlockOperator,
    /// `(D^{k−1})ᵀ M_k`
    pub b: Option<SparseMatrix>,
    /// `(D^k)ᵀ M_{k+1} D^k`
    pub stiffness: SparseMatrix,
}

impl HodgeOperators {
    pub fn new(complex: &Complex, k: usize, weights: &Weights) -> Result<Self> {
        let d_k = complex.total_derivative(k)?;
        let m_k = complex.mass_matrix(k, weights.get(k))?.into_matrix();
        let m_kp1 = complex.mass_matrix(k + 1, weights.get(k + 1))?.into_matrix();
        let stiffness = d_k.matrix().transpose().matmul(&m_kp1)?.matmul(d_k.matrix())?;
        let (m_km1, d_km1, b) = if k == 0 {
            (None, None, None)
        } else {
            let d = complex.total_derivative(k - 1)?;
            let m = complex.mass_matrix(k - 1, weights.get(k - 1))?.into_matrix();
            let b = d.matrix().transpose().matmul(&m_k)?;
            (Some(m), Some(d), Some(b))
        };
        Ok(Self { k, m_km1, m_k, m_kp1, d_km1, d_k, b, stiffness })
    }

    pub fn dim(&self) -> usize {
        self.m_k.nrows()
    }

    pub fn lower_dim(&self) -> usize {
        self.m_km1.as_ref().map_or(0, SparseMatrix::nrows)
    }
}

/// `M_k`-orthonormal basis of the discrete harmonic space `ker D^k ∩ ker D*_k`.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub k: usize,
    layout: Arc<Layout>,
    vectors: Vec<Vec<f64>>,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn cochains(&self) -> Vec<Cochain> {
        self.vectors.iter().map(|v| Cochain::from_values(&self.layout, v.clone()).expect("basis fits layout")).collect()
    }

    /// Coefficients `Hᵀ ℓ` of a load vector `ℓ = M φ`.
    pub fn coefficients(&self, load: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|h| dot(h, load)).collect()
    }

    /// `Σ c_i h_i`.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.dim()];
        for (h, &c) in self.vectors.iter().zip(coefficients) {
            out.iter_mut().zip(h).for_each(|(o, v)| *o += c * v);
        }
        out
    }

    /// `M_k`-orthogonal projection onto the harmonic space.
    pub fn project(&self, mass: &SparseMatrix, x: &[f64]) -> Vec<f64> {
        self.combine(&self.coefficients(&mass.mul_vec(x)))
    }
}

/// Restricts a sparse matrix to the given rows and converts it to dense.
fn dense_rows(m: &SparseMatrix, rows: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows.len(), m.ncols());
    for (i, &r) in rows.iter().enumerate() {
        let (cols, vals) = m.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            out.set(i, c, v);
        }
    }
    out
}

fn dense_principal(m: &SparseMatrix, idx: &[usize]) -> DenseMatrix {
    let mut pos = vec![usize::MAX; m.ncols()];
    idx.iter().enumerate().for_each(|(i, &j)| pos[j] = i);
    let mut out = DenseMatrix::zeros(idx.len(), idx.len());
    for (i, &r) in idx.iter().enumerate() {
        let (cols, vals) = m.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if pos[c] != usize::MAX {
                out.set(i, pos[c], v);
            }
        }
    }
    out
}

/// `Lᵀ A`, with `L Lᵀ` the mass matrix restricted to blocks of nonzero weight.
/// `‖Lᵀ A x‖² = ‖A x‖²_M`.
fn half_weighted(op: &SparseMatrix, mass: &SparseMatrix, w: &WeightField) -> Result<DenseMatrix> {
    let active = w.active_indices();
    if active.is_empty() {
        return Ok(DenseMatrix::zeros(0, op.ncols()));
    }
    let l = cholesky(&dense_principal(mass, &active))?;
    l.transpose().matmul(&dense_rows(op, &active))
}

/// Makes the columns of `n` orthonormal in the `mass` inner product.
fn mass_orthonormalize(columns: Vec<Vec<f64>>, mass: &SparseMatrix) -> Result<Vec<Vec<f64>>> {
    if columns.is_empty() {
        return Ok(columns);
    }
    let h = columns.len();
    let mc: Vec<Vec<f64>> = columns.iter().map(|c| mass.mul_vec(c)).collect();
    let mut g = DenseMatrix::zeros(h, h);
    for i in 0..h {
        for j in 0..h {
            g.set(i, j, dot(&columns[i], &mc[j]));
        }
    }
    let c = cholesky(&g)?;
    let n = DenseMatrix::from_columns(columns[0].len(), &columns);
    // H = N C⁻ᵀ, computed as (C⁻¹ Nᵀ)ᵀ
    let ht = solve_lower(&c, &n.transpose());
    Ok((0..h).map(|i| (0..ht.ncols()).map(|j| ht.get(i, j)).collect()).collect())
}

/// Harmonic basis from the null space of `[Lᵀ_{k+1} D^k ; L⁻¹_{k−1} (D^{k−1})ᵀ M_k]`.
pub fn harmonic_basis(complex: &Complex, k: usize, weights: &Weights) -> Result<HarmonicBasis> {
    let layout = Arc::clone(complex.layout(k)?);
    check_budget(layout.dim())?;
    require_positive(weights.get(k), "harmonic basis")?;
    let ops = HodgeOperators::new(complex, k, weights)?;
    let mut stacked = half_weighted(ops.d_k.matrix(), &ops.m_kp1, weights.get(k + 1))?;
    if let (Some(m_km1), Some(b)) = (&ops.m_km1, &ops.b) {
        require_positive(weights.get(k - 1), "codifferential")?;
        let l = cholesky(&m_km1.to_dense())?;
        stacked = stacked.vstack(&solve_lower(&l, &b.to_dense()))?;
    }
    let null = nullspace(&stacked, HARMONIC_TOL)?;
    let vectors = mass_orthonormalize(null, &ops.m_k)?;
    Ok(HarmonicBasis { k, layout, vectors })
}

/// Kernel of `D⁰` (in the weighted sense) from connected components: two
/// degree-0 unknowns are linked whenever a row of `D⁰` in a block of nonzero
/// `A¹` weight couples them. Sparse, so it has no size limit.
pub fn kernel_k0(complex: &Complex, weights: &Weights) -> Result<HarmonicBasis> {
    let layout = Arc::clone(complex.layout(0)?);
    require_positive(weights.get(0), "harmonic basis")?;
    let d0 = complex.total_derivative(0)?;
    let w1 = weights.get(1);
    let n = layout.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for b in 0..w1.layout().num_blocks() {
        if w1.is_zero_block(b) {
            continue;
        }
        for r in w1.layout().range(b) {
            let (cols, _) = d0.matrix().row(r);
            for pair in cols.windows(2) {
                let (a, c) = (find(&mut parent, pair[0]), find(&mut parent, pair[1]));
                if a != c {
                    parent[a.max(c)] = a.min(c);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let pos = match roots.iter().position(|&x| x == r) {
            Some(p) => p,
            None => {
                roots.push(r);
                columns.push(vec![0.0; n]);
                roots.len() - 1
            }
        };
        columns[pos][i] = 1.0;
    }
    let m0 = complex.mass_matrix(0, weights.get(0))?.into_matrix();
    let vectors = mass_orthonormalize(columns, &m0)?;
    Ok(HarmonicBasis { k: 0, layout, vectors })
}

/// Cohomology dimensions `dim A^k − rank D^k − rank D^{k−1}` for every
/// admissible `k`, with ranks computed exactly over the integers.
pub fn cohomology_dims(complex: &Complex) -> Result<Vec<usize>> {
    let top = complex.max_degree();
    for k in 0..=top {
        check_budget(complex.dim(k))?;
    }
    let ranks: Vec<usize> =
        (0..=top).map(|k| exact_rank(complex.total_derivative(k)?.matrix())).collect::<Result<_>>()?;
    Ok((0..=top).map(|k| complex.dim(k) - ranks[k] - if k > 0 { ranks[k - 1] } else { 0 }).collect())
}

/// Right-hand side of `Δ_D α = φ` for a fixed degree and weights.
#[derive(Clone, Debug)]
pub struct HodgeProblem {
    pub complex: Arc<Complex>,
    pub k: usize,
    pub weights: Weights,
    /// Load vector `ℓ` with entries `⟨φ, e_i⟩_{M_k}`.
    pub load: Vec<f64>,
}

impl HodgeProblem {
    /// Problem with source cochain `φ`, so that `ℓ = M_k φ`.
    pub fn from_source(complex: Arc<Complex>, k: usize, weights: Weights, phi: &Cochain) -> Result<Self> {
        if phi.degree() != k || phi.values().len() != complex.dim(k) {
            return Err(Error::DimensionMismatch(format!("source of degree {} for a degree-{k} problem", phi.degree())));
        }
        let load = complex.mass_matrix(k, weights.get(k))?.matrix().mul_vec(phi.values());
        Ok(Self { complex, k, weights, load })
    }

    /// Problem with an assembled load vector (for example from quadrature).
    pub fn from_load(complex: Arc<Complex>, k: usize, weights: Weights, load: Vec<f64>) -> Result<Self> {
        complex.layout(k)?;
        if load.len() != complex.dim(k) {
            return Err(Error::DimensionMismatch(format!("load of length {} for dim {}", load.len(), complex.dim(k))));
        }
        if load.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite load".into()));
        }
        Ok(Self { complex, k, weights, load })
    }
}

#[derive(Clone, Debug)]
pub struct HodgeSolution {
    pub alpha: Cochain,
    /// `D^k α`
    pub beta: Cochain,
    /// `D*_k α`; absent at `k = 0`.
    pub gamma: Option<Cochain>,
    /// `‖M_kΔα − (ℓ − ℓ_harm)‖ / ‖ℓ − ℓ_harm‖`.
    pub residual: f64,
    /// `‖Hᵀ M α‖ / ‖α‖_M`.
    pub orthogonality: f64,
    /// Coefficients of the harmonic part of the source.
    pub harmonic_component: Vec<f64>,
    /// `‖Hᵀ ℓ‖ / ‖φ‖_M`.
    pub harmonic_fraction: f64,
    pub projected: bool,
    pub kernel_dim: usize,
    pub warnings: Vec<String>,
}

/// Solves the saddle system
/// `[−M_{k−1}, B, 0; Bᵀ, K, M_k H; 0, (M_k H)ᵀ, 0] (γ, α, p) = (0, ℓ, 0)`.
fn solve_saddle(problem: &HodgeProblem, ops: &HodgeOperators, basis: &HarmonicBasis) -> Result<HodgeSolution> {
    let (n1, n2, h) = (ops.lower_dim(), ops.dim(), basis.dim());
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    if let (Some(m_km1), Some(b)) = (&ops.m_km1, &ops.b) {
        triplets.extend(m_km1.scale(-1.0).shifted_triplets(0, 0));
        triplets.extend(b.shifted_triplets(0, n1));
        triplets.extend(b.transpose().shifted_triplets(n1, 0));
    }
    triplets.extend(ops.stiffness.shifted_triplets(n1, n1));
    let mh: Vec<Vec<f64>> = basis.vectors().iter().map(|v| ops.m_k.mul_vec(v)).collect();
    for (j, col) in mh.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            if v != 0.0 {
                triplets.push((n1 + i, n1 + n2 + j, v));
                triplets.push((n1 + n2 + j, n1 + i, v));
            }
        }
    }
    let size = n1 + n2 + h;
    let system = SparseMatrix::from_triplets(size, size, triplets)?;
    let factor = Factorization::new(&system)?;

    let load = &problem.load;
    let coeffs = basis.coefficients(load);
    let m_factor = Factorization::new(&ops.m_k)?;
    let phi_norm = dot(load, &m_factor.solve(load)?).max(0.0).sqrt();
    let harm_norm = norm(&coeffs);
    let harmonic_fraction = if phi_norm > 0.0 { harm_norm / phi_norm } else { 0.0 };
    let projected = harmonic_fraction > COMPATIBILITY_TOL;
    let mut warnings = Vec::new();
    if projected {
        warnings.push(format!(
            "source has a harmonic component (relative size {harmonic_fraction:.3e}); it was projected out"
        ));
    }

    let mut rhs = vec![0.0; size];
    rhs[n1..n1 + n2].copy_from_slice(load);
    let x = factor.solve(&rhs)?;
    let sigma = &x[..n1];
    let alpha = x[n1..n1 + n2].to_vec();

    // residual of the eliminated equation against the projected load
    let mut projected_load = load.clone();
    for (col, &c) in mh.iter().zip(&coeffs) {
        projected_load.iter_mut().zip(col).for_each(|(l, v)| *l -= c * v);
    }
    let mut lap = ops.stiffness.mul_vec(&alpha);
    let gamma_values = if let (Some(m_km1), Some(b)) = (&ops.m_km1, &ops.b) {
        let g = Factorization::new(m_km1)?.solve(&b.mul_vec(&alpha))?;
        let bt = b.mul_vec_transpose(&g);
        lap.iter_mut().zip(&bt).for_each(|(l, v)| *l += v);
        debug_assert_eq!(g.len(), sigma.len());
        Some(g)
    } else {
        None
    };
    let r: Vec<f64> = lap.iter().zip(&projected_load).map(|(a, b)| a - b).collect();
    let pnorm = norm(&projected_load);
    let residual = if pnorm > 0.0 { norm(&r) / pnorm } else { norm(&r) };

    let alpha_m = dot(&alpha, &ops.m_k.mul_vec(&alpha)).max(0.0).sqrt();
    let ortho = norm(&basis.coefficients(&ops.m_k.mul_vec(&alpha)));
    let orthogonality = if alpha_m > 0.0 { ortho / alpha_m } else { ortho };

    let complex = &problem.complex;
    let layout_k = complex.layout(problem.k)?;
    let alpha_c = Cochain::from_values(layout_k, alpha)?;
    let beta = ops.d_k.apply(&alpha_c)?;
    let gamma = match gamma_values {
        Some(g) => Some(Cochain::from_values(complex.layout(problem.k - 1)?, g)?),
        None => None,
    };
    Ok(HodgeSolution {
        alpha: alpha_c,
        beta,
        gamma,
        residual,
        orthogonality,
        harmonic_component: coeffs,
        harmonic_fraction,
        projected,
        kernel_dim: h,
        warnings,
    })
}

/// Degree-0 solve `[K, M₀H; (M₀H)ᵀ, 0]` with the sparse kernel basis.
pub fn solve_primal_k0(problem: &HodgeProblem) -> Result<HodgeSolution> {
    if problem.k != 0 {
        return Err(Error::DegreeOutOfRange { degree: problem.k, admissible: "0".into() });
    }
    let ops = HodgeOperators::new(&problem.complex, 0, &problem.weights)?;
    let basis = kernel_k0(&problem.complex, &problem.weights)?;
    solve_saddle(problem, &ops, &basis)
}

/// Mixed solve at any degree with the dense harmonic basis.
pub fn solve_mixed(problem: &HodgeProblem) -> Result<HodgeSolution> {
    let k = problem.k;
    if k > 0 {
        require_positive(problem.weights.get(k - 1), "mixed solve")?;
    }
    let ops = HodgeOperators::new(&problem.complex, k, &problem.weights)?;
    let basis = harmonic_basis(&problem.complex, k, &problem.weights)?;
    solve_saddle(problem, &ops, &basis)
}

/// Dense `Δ_D^k = D^{k−1} D*_k + D*_{k+1} D^k`.
pub fn dense_hodge_laplacian(complex: &Complex, k: usize, weights: &Weights) -> Result<DenseMatrix> {
    check_budget(complex.dim(k))?;
    let ops = HodgeOperators::new(complex, k, weights)?;
    let up = complex.weighted_adjoint(ops.d_k.matrix(), &ops.m_k, &ops.m_kp1)?.matmul(&ops.d_k.to_dense())?;
    match (&ops.d_km1, &ops.m_km1) {
        (Some(d), Some(m)) => {
            let down = d.to_dense().matmul(&complex.weighted_adjoint(d.matrix(), m, &ops.m_k)?)?;
            up.add(&down)
        }
        _ => Ok(up),
    }
}

/// Dense `Δ_d + Δ_δ = d d* + d* d + δ δ* + δ* δ` with the same weights.
pub fn dense_split_laplacian(complex: &Complex, k: usize, weights: &Weights) -> Result<DenseMatrix> {
    check_budget(complex.dim(k))?;
    let m_k = complex.mass_matrix(k, weights.get(k))?.into_matrix();
    let m_kp1 = complex.mass_matrix(k + 1, weights.get(k + 1))?.into_matrix();
    let n = complex.dim(k);
    let mut acc = DenseMatrix::zeros(n, n);
    for op in [complex.d_operator(k)?, complex.delta_operator(k)?] {
        let up = complex.weighted_adjoint(op.matrix(), &m_k, &m_kp1)?.matmul(&op.to_dense())?;
        acc = acc.add(&up)?;
    }
    if k > 0 {
        let m_km1 = complex.mass_matrix(k - 1, weights.get(k - 1))?.into_matrix();
        for op in [complex.d_operator(k - 1)?, complex.delta_operator(k - 1)?] {
            let down = op.to_dense().matmul(&complex.weighted_adjoint(op.matrix(), &m_km1, &m_k)?)?;
            acc = acc.add(&down)?;
        }
    }
    Ok(acc)
}

/// `ω = ω_exact + ω_harmonic + ω_coexact`, pairwise `M_k`-orthogonal.
#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub exact: Cochain,
    pub harmonic: Cochain,
    pub coexact: Cochain,
    /// `M_k`-norm of the component of `ω_coexact` in `ker D^k`, relative to `‖ω‖_M`.
    pub kernel_residual: f64,
}

pub fn hodge_decompose(complex: &Complex, k: usize, weights: &Weights, omega: &Cochain) -> Result<HodgeDecomposition> {
    let layout = complex.layout(k)?;
    if **omega.layout() != **layout {
        return Err(Error::DimensionMismatch("cochain degree does not match".into()));
    }
    check_budget(layout.dim())?;
    require_positive(weights.get(k), "Hodge decomposition")?;
    let m_k = complex.mass_matrix(k, weights.get(k))?.into_matrix();
    let l = cholesky(&m_k.to_dense())?;
    let n = layout.dim();
    let w = omega.values();
    let lt_omega = l.transpose().mul_vec(w);

    // exact part: M-orthogonal projection onto im D^{k−1}, in coordinates y = Lᵀx
    let range = if k > 0 {
        let d = complex.total_derivative(k - 1)?;
        range_basis(&l.transpose().matmul(&d.to_dense())?, HARMONIC_TOL)?
    } else {
        Vec::new()
    };
    let mut y = vec![0.0; n];
    for q in &range {
        let c = dot(q, &lt_omega);
        y.iter_mut().zip(q).for_each(|(yi, qi)| *yi += c * qi);
    }
    let exact = solve_lower_transpose(&l, &DenseMatrix::from_columns(n, &[y])).column(0);

    let basis = harmonic_basis(complex, k, weights)?;
    let harmonic = basis.project(&m_k, w);
    let coexact: Vec<f64> = (0..n).map(|i| w[i] - exact[i] - harmonic[i]).collect();

    let lt_co = l.transpose().mul_vec(&coexact);
    let in_range: f64 = range.iter().map(|q| dot(q, &lt_co).powi(2)).sum();
    let in_harm: f64 = basis.coefficients(&m_k.mul_vec(&coexact)).iter().map(|c| c * c).sum();
    let omega_norm = norm(&lt_omega);
    let kernel_residual =
        if omega_norm > 0.0 { (in_range + in_harm).sqrt() / omega_norm } else { (in_range + in_harm).sqrt() };

    Ok(HodgeDecomposition {
        exact: Cochain::from_values(layout, exact)?,
        harmonic: Cochain::from_values(layout, harmonic)?,
        coexact: Cochain::from_values(layout, coexact)?,
        kernel_residual,
    })
}

#[derive(Clone, Debug)]
pub struct PoincareConstant {
    pub k: usize,
    /// `C_k = λ_min^{−1/2}`.
    pub constant: f64,
    /// Smallest nonzero eigenvalue of `K x = λ M_k x`.
    pub eigenvalue: f64,
    /// `M_k`-orthonormal basis of `ker D^k`.
    pub kernel: Vec<Vec<f64>>,
}

/// Smallest `C` with `‖α‖ ≤ C ‖D^k α‖` on the `M_k`-complement of `ker D^k`.
pub fn poincare_constant(complex: &Complex, k: usize, weights: &Weights) -> Result<PoincareConstant> {
    if k >= complex.max_degree() {
        return Err(Error::DegreeOutOfRange { degree: k, admissible: format!("0..{}", complex.max_degree()) });
    }
    check_budget(complex.dim(k))?;
    require_positive(weights.get(k), "Poincaré constant")?;
    let ops = HodgeOperators::new(complex, k, weights)?;
    let l = cholesky(&ops.m_k.to_dense())?;
    // L⁻¹ K L⁻ᵀ, symmetric
    let y = solve_lower(&l, &ops.stiffness.to_dense());
    let a = solve_lower(&l, &y.transpose());
    let a = a.add(&a.transpose())?.scale(0.5);
    let (values, vectors) = symmetric_eigen(&a)?;
    let lmax = values.last().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        return Err(Error::SingularSystem(format!("D^{k} vanishes; no Poincaré inequality to measure")));
    }
    let cutoff = HARMONIC_TOL * lmax;
    let first = values.iter().position(|&v| v > cutoff).expect("lmax exceeds the cutoff");
    let eigenvalue = values[first];
    let n = values.len();
    let kernel_cols: Vec<Vec<f64>> = (0..first).map(|j| vectors.column(j)).collect();
    let kernel = if kernel_cols.is_empty() {
        Vec::new()
    } else {
        let x = solve_lower_transpose(&l, &DenseMatrix::from_columns(n, &kernel_cols));
        (0..first).map(|j| x.column(j)).collect()
    };
    Ok(PoincareConstant { k, constant: eigenvalue.powf(-0.5), eigenvalue, kernel })
}
