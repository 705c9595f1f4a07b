//! Sparse and dense matrix kernels.
//!
//! Storage and products are implemented here; factorizations (sparse LU,
//! dense SVD, symmetric eigendecomposition, Cholesky) are delegated to `faer`.

use std::collections::HashMap;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};

/// Relative residual every direct solve must meet.
/// Restricts the dense and sparse kernels to one thread, so that every
/// floating-point reduction runs in a fixed order.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(Par::Seq);
}

pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and entries that sum to exactly zero are dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!("non-finite entry at ({r}, {c})")));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows_of.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { rows, cols, row_ptr, col_idx: keep_cols, values: keep_vals })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
            .expect("diagonal entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// Iterates over stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec: length mismatch");
        (0..self.rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// Computes `selfᵀ x` without forming the transpose.
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "mul_vec_transpose: length mismatch");
        let mut out = vec![0.0; self.cols];
        for (r, c, v) in self.iter() {
            out[c] += v * x[r];
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.iter().map(|(r, c, v)| (c, r, v)))
            .expect("transpose preserves bounds")
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zeros(self.rows, self.cols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Self::from_triplets(self.rows, self.cols, self.iter().chain(other.iter()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut triplets = Vec::new();
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for r in 0..self.rows {
            acc.clear();
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    *acc.entry(c).or_insert(0.0) += a * b;
                }
            }
            let mut row: Vec<_> = acc.iter().map(|(&c, &v)| (r, c, v)).collect();
            row.sort_by_key(|e| e.1);
            triplets.extend(row);
        }
        Self::from_triplets(self.rows, other.cols, triplets)
    }

    /// Places `block` with its top-left corner at `(row0, col0)` in a matrix
    /// of the given shape, returning the shifted triplets.
    pub fn shifted_triplets(&self, row0: usize, col0: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.iter().map(move |(r, c, v)| (r + row0, c + col0, v))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        self.iter().all(|(r, c, v)| (v - self.get(c, r)).abs() <= tol)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            out.set(r, c, v);
        }
        out
    }

    /// Returns the matrix as integer triplets if every entry is integral.
    pub fn to_integer_triplets(&self) -> Option<Vec<(usize, usize, i64)>> {
        self.iter()
            .map(|(r, c, v)| {
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    Some((r, c, v as i64))
                } else {
                    None
                }
            })
            .collect()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.rows, self.cols, &triplets)
            .map_err(|e| Error::InvalidMatrix(format!("{e:?}")))
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix with {} values",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, values: rows.concat() })
    }

    /// Builds an `n x columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(n: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(n, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), n);
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec: length mismatch");
        self.values.chunks(self.cols.max(1)).take(self.rows).map(|row| dot(row, x)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let product = self.to_faer() * other.to_faer();
        Ok(Self::from_faer(product.as_ref()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("dense add".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, values })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch("vstack column count".into()));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, values })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |r, c| self.get(r, c))
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.set(r, c, m[(r, c)]);
            }
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Sparse LU factorization (row pivoting) of a square system, reusable for
/// many right-hand sides.
pub struct Factorization {
    matrix: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.matrix.nrows()).finish()
    }
}

impl Factorization {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "system must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::SingularSystem(format!("factorization failed: {e:?}")))?;
        Ok(Self { matrix: matrix.clone(), lu })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Solves `A x = b` with up to three steps of iterative refinement and
    /// checks `‖Ax − b‖ ≤ 1e−10 ‖b‖`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch(format!("rhs length {} for n = {n}", rhs.len())));
        }
        let bnorm = norm(rhs);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = self.raw_solve(rhs);
        let mut rel = f64::INFINITY;
        for _ in 0..4 {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularSystem("non-finite solution (vanishing pivot)".into()));
            }
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            rel = norm(&r) / bnorm;
            if rel <= SOLVE_TOLERANCE * 1e-2 {
                break;
            }
            let dx = self.raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        let ax = self.matrix.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = rel.min(norm(&r) / bnorm);
        if !(rel <= SOLVE_TOLERANCE) {
            return Err(Error::SingularSystem(format!("relative residual {rel:e} after refinement")));
        }
        Ok(x)
    }

    fn raw_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Solves a square (possibly indefinite) sparse system.
pub fn solve_symmetric(system: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(system)?.solve(rhs)
}

/// Orthonormal basis of the right null space: right singular vectors with
/// `σ ≤ rel_tol · σ_max`. A zero matrix yields a full basis.
pub fn nullspace(matrix: &DenseMatrix, rel_tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = matrix.ncols();
    if n == 0 {
        return Ok(Vec::new());
    }
    if matrix.nrows() == 0 || matrix.values.iter().all(|&v| v == 0.0) {
        return Ok((0..n).map(|i| unit_vector(n, i)).collect());
    }
    let svd = matrix
        .to_faer()
        .svd()
        .map_err(|e| Error::SingularSystem(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let smax = s[0];
    let cutoff = rel_tol * smax;
    Ok((0..n)
        .filter(|&j| j >= s.nrows() || s[j] <= cutoff)
        .map(|j| (0..n).map(|i| v[(i, j)]).collect())
        .collect())
}

/// Orthonormal basis of the column space: left singular vectors with
/// `σ > rel_tol · σ_max`.
pub fn range_basis(matrix: &DenseMatrix, rel_tol: f64) -> Result<Vec<Vec<f64>>> {
    let m = matrix.nrows();
    if m == 0 || matrix.ncols() == 0 || matrix.values.iter().all(|&v| v == 0.0) {
        return Ok(Vec::new());
    }
    let svd = matrix
        .to_faer()
        .thin_svd()
        .map_err(|e| Error::SingularSystem(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let u = svd.U();
    let cutoff = rel_tol * s[0];
    Ok((0..s.nrows())
        .filter(|&j| s[j] > cutoff)
        .map(|j| (0..m).map(|i| u[(i, j)]).collect())
        .collect())
}

/// Singular values in nonincreasing order.
pub fn singular_values(matrix: &DenseMatrix) -> Result<Vec<f64>> {
    if matrix.nrows() == 0 || matrix.ncols() == 0 {
        return Ok(Vec::new());
    }
    matrix
        .to_faer()
        .singular_values()
        .map_err(|e| Error::SingularSystem(format!("svd did not converge: {e:?}")))
}

/// Eigenvalues (nondecreasing) and eigenvectors (as columns) of a symmetric matrix.
pub fn symmetric_eigen(matrix: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::DimensionMismatch("eigen of non-square matrix".into()));
    }
    if matrix.nrows() == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    let evd = matrix
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SingularSystem(format!("eigensolver did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((values, DenseMatrix::from_faer(evd.U())))
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky(matrix: &DenseMatrix) -> Result<DenseMatrix> {
    if matrix.nrows() == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let llt = matrix
        .to_faer()
        .llt(Side::Lower)
        .map_err(|e| Error::SingularSystem(format!("matrix is not positive definite: {e:?}")))?;
    Ok(DenseMatrix::from_faer(llt.L()))
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn solve_lower(l: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut x = b.to_faer();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.to_faer().as_ref(), x.as_mut(), Par::Seq);
    DenseMatrix::from_faer(x.as_ref())
}

/// Solves `Lᵀ X = B` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut x = b.to_faer();
    let lf = l.to_faer();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(lf.transpose(), x.as_mut(), Par::Seq);
    DenseMatrix::from_faer(x.as_ref())
}

/// Solves `A X = B` for symmetric positive definite `A` (dense Cholesky).
pub fn solve_spd(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let l = cholesky(a)?;
    Ok(solve_lower_transpose(&l, &solve_lower(&l, b)))
}

/// Exact rank of an integer matrix, by Gaussian elimination over two large
/// prime fields. The rank over ℚ is the maximum of the two.
pub fn exact_rank(matrix: &SparseMatrix) -> Result<usize> {
    let triplets = matrix
        .to_integer_triplets()
        .ok_or_else(|| Error::InvalidMatrix("exact rank needs integer entries".into()))?;
    let mut rows: Vec<Vec<(usize, i64)>> = vec![Vec::new(); matrix.nrows()];
    for (r, c, v) in triplets {
        rows[r].push((c, v));
    }
    const PRIMES: [u64; 2] = [2_147_483_647, 1_000_000_007];
    Ok(PRIMES.iter().map(|&p| rank_mod_p(&rows, p)).max().unwrap_or(0))
}

fn rank_mod_p(rows: &[Vec<(usize, i64)>], p: u64) -> usize {
    let to_field = |v: i64| -> u64 { v.rem_euclid(p as i64) as u64 };
    let mut pivots: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
    for row in rows {
        let mut cur: Vec<(usize, u64)> =
            row.iter().map(|&(c, v)| (c, to_field(v))).filter(|e| e.1 != 0).collect();
        cur.sort_by_key(|e| e.0);
        while let Some(&(lead, coef)) = cur.first() {
            match pivots.get(&lead) {
                Some(piv) => {
                    // cur -= coef * piv  (piv has leading coefficient 1)
                    let factor = p - coef;
                    cur = axpy_mod(&cur, piv, factor, p);
                }
                None => {
                    let inv = pow_mod(coef, p - 2, p);
                    let normalized = cur.iter().map(|&(c, v)| (c, mul_mod(v, inv, p))).collect();
                    pivots.insert(lead, normalized);
                    break;
                }
            }
        }
    }
    pivots.len()
}

fn axpy_mod(x: &[(usize, u64)], y: &[(usize, u64)], a: u64, p: u64) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
        let (c, v) = if take_x {
            i += 1;
            x[i - 1]
        } else if take_y {
            j += 1;
            (y[j - 1].0, mul_mod(a, y[j - 1].1, p))
        } else {
            i += 1;
            j += 1;
            (x[i - 1].0, (x[i - 1].1 + mul_mod(a, y[j - 1].1, p)) % p)
        };
        if v != 0 {
            out.push((c, v));
        }
    }
    out
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn unit_vector(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}
