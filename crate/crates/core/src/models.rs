//! The coupled-physics applications as degree-0 Hodge-Laplace problems:
//! two elastically joined rods, multi-continuum (double porosity) flow, and
//! a thin inclusion embedded in a bulk medium (disk in a square).
//!
//! Degree-0 cochains carry unit weights; the material coefficients are the
//! weights of `A¹`: `w_i` on the `(p, q) = (0, 1)` block of `U_i` and the
//! exchange coefficient `w_{ij}` on the `(1, 0)` block of `U_i ∩ U_j`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::complex::{BlockIndex, Cochain, Complex, Weights};
use crate::cover::build_cover;
use crate::error::{Error, Result};
use crate::hodge::{kernel_k0, HodgeProblem};
use crate::mesh::{build_interval_mesh, build_triangle_mesh, Mesh};

/// Scalar field of position (the second coordinate is zero in 1D).
pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

pub fn constant(c: f64) -> ScalarFn {
    Arc::new(move |_| c)
}

#[derive(Clone)]
pub struct RodsConfig {
    /// Overlap half-width, `U_0 = (−1, ε)` and `U_1 = (−ε, 1)`.
    pub epsilon: f64,
    /// Cells per unit length; `ε · cells_per_unit` should be an integer so
    /// that the overlap is resolved exactly.
    pub cells_per_unit: usize,
    pub w0: f64,
    pub w1: f64,
    pub w01: f64,
    pub f0: ScalarFn,
    pub f1: ScalarFn,
}

#[derive(Clone)]
pub struct MultiContinuumConfig {
    /// `[x0, y0, x1, y1]`.
    pub extents: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    /// One permeability per continuum.
    pub permeabilities: Vec<f64>,
    /// Symmetric exchange coefficients with zero diagonal.
    pub exchange: Vec<Vec<f64>>,
    pub forcings: Vec<ScalarFn>,
    /// Enables the `∂_t α` term in transient runs.
    pub compressible: bool,
}

#[derive(Clone)]
pub struct InclusionConfig {
    pub extents: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub center: [f64; 2],
    pub radius: f64,
    /// Bulk permeability.
    pub w0: f64,
    /// Conductance of the inclusion.
    pub w1: f64,
    pub w01: f64,
    pub f0: ScalarFn,
    pub f1: ScalarFn,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("{name} must be nonnegative and finite, got {v}")));
    }
    Ok(())
}

/// 3-point Gauss rule on `[0, 1]` as `(barycentric point, weight)`.
fn gauss_1d() -> [([f64; 3], f64); 3] {
    let s = 0.5 * (3.0f64 / 5.0).sqrt();
    [
        ([0.5 + s, 0.5 - s, 0.0], 5.0 / 18.0),
        ([0.5, 0.5, 0.0], 8.0 / 18.0),
        ([0.5 - s, 0.5 + s, 0.0], 5.0 / 18.0),
    ]
}

/// 7-point degree-5 rule on triangles (weights sum to one).
fn dunavant_7() -> [([f64; 3], f64); 7] {
    let (a1, b1, w1) = (0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506);
    let (a2, b2, w2) = (0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827);
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// Quadrature points of one top cell: `(barycentric coords, point, weight·|σ|)`.
fn cell_quadrature(mesh: &Mesh, cell: usize) -> Vec<([f64; 3], [f64; 2], f64)> {
    let n = mesh.dim();
    let pts = mesh.simplex_points(n, cell);
    let vol = mesh.cell_measures(n)[cell];
    let rule: Vec<([f64; 3], f64)> = if n == 1 { gauss_1d().to_vec() } else { dunavant_7().to_vec() };
    rule.into_iter()
        .map(|(lam, w)| {
            let mut x = [0.0; 2];
            for (l, p) in lam.iter().zip(&pts) {
                x[0] += l * p[0];
                x[1] += l * p[1];
            }
            (lam, x, w * vol)
        })
        .collect()
}

/// Degree-0 load vector `ℓ_{i,a} = ∫_{U_i} f_i λ_a` by cell quadrature.
pub fn load_k0(complex: &Complex, f: impl Fn(&BlockIndex, [f64; 2]) -> f64) -> Result<Vec<f64>> {
    let layout = complex.layout(0)?;
    let mesh = complex.mesh();
    let n = mesh.dim();
    let mut load = vec![0.0; layout.dim()];
    for (b, block) in layout.blocks().iter().enumerate() {
        let sub = &complex.patch(block).submesh;
        let off = layout.range(b).start;
        for &cell in sub.cells() {
            let verts = mesh.simplices(n).get(cell);
            for (lam, x, w) in cell_quadrature(mesh, cell) {
                let fx = f(block, x);
                for (a, &v) in verts.iter().enumerate() {
                    load[off + sub.local_index(0, v).expect("vertex in closure")] += w * fx * lam[a];
                }
            }
        }
    }
    Ok(load)
}

/// Nodal interpolant of a degree-0 field.
pub fn interpolate_k0(complex: &Complex, f: impl Fn(&BlockIndex, [f64; 2]) -> f64) -> Result<Cochain> {
    de_rham(complex, 0, |b, x| [f(b, x), 0.0])
}

/// de Rham map of a proxy field onto `A^k`: point values on vertices, line
/// integrals of `f · t` on edges, oriented integrals of `f[0]` on 2-cells.
/// In 1D the proxy of a 1-form is `f[0]`.
pub fn de_rham(complex: &Complex, k: usize, f: impl Fn(&BlockIndex, [f64; 2]) -> [f64; 2]) -> Result<Cochain> {
    let layout = complex.layout(k)?;
    let mesh = complex.mesh();
    let mut out = Cochain::zeros(layout);
    for (b, block) in layout.blocks().iter().enumerate() {
        let sub = &complex.patch(block).submesh;
        let vals: Vec<f64> = sub
            .dof_map(block.q)
            .iter()
            .map(|&s| {
                let pts = mesh.simplex_points(block.q, s);
                match block.q {
                    0 => f(block, pts[0])[0],
                    1 => {
                        let t = [pts[1][0] - pts[0][0], pts[1][1] - pts[0][1]];
                        gauss_1d()
                            .iter()
                            .map(|(lam, w)| {
                                let x = [lam[0] * pts[0][0] + lam[1] * pts[1][0], lam[0] * pts[0][1] + lam[1] * pts[1][1]];
                                let v = f(block, x);
                                w * (v[0] * t[0] + v[1] * t[1])
                            })
                            .sum()
                    }
                    _ => {
                        let (e1, e2) = ([pts[1][0] - pts[0][0], pts[1][1] - pts[0][1]], [pts[2][0] - pts[0][0], pts[2][1] - pts[0][1]]);
                        let sign = (e1[0] * e2[1] - e1[1] * e2[0]).signum();
                        sign * cell_quadrature(mesh, s).into_iter().map(|(_, x, w)| w * f(block, x)[0]).sum::<f64>()
                    }
                }
            })
            .collect();
        out.block_mut(b).copy_from_slice(&vals);
    }
    Ok(out)
}

/// `(Σ_i ‖a_{h,i} − a_i‖²_{L²(U_i)})^{1/2}` with the discrete field
/// interpolated linearly inside each cell.
pub fn l2_error_k0(complex: &Complex, alpha: &Cochain, exact: impl Fn(&BlockIndex, [f64; 2]) -> f64) -> Result<f64> {
    let layout = complex.layout(0)?;
    if **alpha.layout() != **layout {
        return Err(Error::DimensionMismatch("L2 error needs a degree-0 cochain".into()));
    }
    let mesh = complex.mesh();
    let n = mesh.dim();
    let mut acc = 0.0;
    for (b, block) in layout.blocks().iter().enumerate() {
        let sub = &complex.patch(block).submesh;
        let vals = alpha.block(b);
        for &cell in sub.cells() {
            let verts = mesh.simplices(n).get(cell);
            let nodal: Vec<f64> = verts.iter().map(|&v| vals[sub.local_index(0, v).expect("vertex")]).collect();
            for (lam, x, w) in cell_quadrature(mesh, cell) {
                let uh: f64 = nodal.iter().zip(&lam).map(|(u, l)| u * l).sum();
                acc += w * (uh - exact(block, x)).powi(2);
            }
        }
    }
    Ok(acc.sqrt())
}

/// Weights for a degree-0 model: unit on `A⁰`, `diffusion[i]` on the
/// 1-forms of `U_i`, `exchange[i][j]` on `U_i ∩ U_j`, unit elsewhere.
fn model_weights(complex: &Complex, diffusion: &[f64], exchange: &dyn Fn(usize, usize) -> f64) -> Result<Weights> {
    let mut weights = complex.unit_weights();
    let w1 = complex.block_weights(1, |b| match b.p {
        0 => diffusion[b.idx.indices()[0]],
        _ => exchange(b.idx.indices()[0], b.idx.indices()[1]),
    })?;
    weights.set(w1)?;
    Ok(weights)
}

/// Two rods on `Ω = (−1, 1)` joined on the overlap `(−ε, ε)`.
pub fn build_rods(config: &RodsConfig) -> Result<HodgeProblem> {
    let eps = config.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    if config.cells_per_unit == 0 {
        return Err(Error::InvalidConfig("cells_per_unit must be at least 1".into()));
    }
    positive("w0", config.w0)?;
    positive("w1", config.w1)?;
    nonnegative("w01", config.w01)?;
    let mesh = Arc::new(build_interval_mesh(-1.0, 1.0, 2 * config.cells_per_unit)?);
    let u0 = mesh.cells_where(|c| c[0] < eps);
    let u1 = mesh.cells_where(|c| c[0] > -eps);
    if u0.len() == mesh.num_cells() || u1.len() == mesh.num_cells() {
        return Err(Error::InvalidConfig(format!("mesh too coarse to resolve epsilon = {eps}")));
    }
    let complex = Arc::new(Complex::new(Arc::new(build_cover(&mesh, vec![u0, u1])?)));
    if complex.cover().max_level() < 1 {
        return Err(Error::InvalidConfig(format!("mesh too coarse to resolve the overlap for epsilon = {eps}")));
    }
    let weights = model_weights(&complex, &[config.w0, config.w1], &|_, _| config.w01)?;
    let (f0, f1) = (Arc::clone(&config.f0), Arc::clone(&config.f1));
    let load = load_k0(&complex, |b, x| if b.idx.indices()[0] == 0 { f0(x) } else { f1(x) })?;
    HodgeProblem::from_load(complex, 0, weights, load)
}

fn validate_exchange(n: usize, exchange: &[Vec<f64>]) -> Result<()> {
    if exchange.len() != n || exchange.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig(format!("exchange matrix must be {n}x{n}")));
    }
    for i in 0..n {
        if exchange[i][i] != 0.0 {
            return Err(Error::InvalidConfig("exchange matrix must have a zero diagonal".into()));
        }
        for j in 0..n {
            nonnegative(&format!("exchange[{i}][{j}]"), exchange[i][j])?;
            if exchange[i][j] != exchange[j][i] {
                return Err(Error::InvalidConfig("exchange matrix must be symmetric".into()));
            }
        }
    }
    Ok(())
}

/// `N` fully overlapping continua on a rectangle.
pub fn build_multicontinuum(config: &MultiContinuumConfig) -> Result<HodgeProblem> {
    let n = config.permeabilities.len();
    if n < 2 {
        return Err(Error::InvalidConfig("multi-continuum model needs at least two continua".into()));
    }
    if config.forcings.len() != n {
        return Err(Error::InvalidConfig(format!("expected {n} forcings, got {}", config.forcings.len())));
    }
    for (i, &w) in config.permeabilities.iter().enumerate() {
        positive(&format!("permeability[{i}]"), w)?;
    }
    validate_exchange(n, &config.exchange)?;
    let [x0, y0, x1, y1] = config.extents;
    let mesh = Arc::new(build_triangle_mesh(x0, y0, x1, y1, config.nx, config.ny)?);
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    let complex = Arc::new(Complex::new(Arc::new(build_cover(&mesh, vec![all; n])?)));
    let weights = model_weights(&complex, &config.permeabilities, &|i, j| config.exchange[i][j])?;
    let load = load_k0(&complex, |b, x| (config.forcings[b.idx.indices()[0]])(x))?;
    HodgeProblem::from_load(complex, 0, weights, load)
}

/// Bulk `U_0 = Ω` with an inclusion `U_1` of cells whose centers lie in a disk.
pub fn build_inclusion(config: &InclusionConfig) -> Result<HodgeProblem> {
    let [x0, y0, x1, y1] = config.extents;
    let [cx, cy] = config.center;
    let r = config.radius;
    positive("radius", r)?;
    if !(cx - r > x0 && cx + r < x1 && cy - r > y0 && cy + r < y1) {
        return Err(Error::InvalidConfig("inclusion must lie strictly inside the box".into()));
    }
    positive("w0", config.w0)?;
    positive("w1", config.w1)?;
    nonnegative("w01", config.w01)?;
    let mesh = Arc::new(build_triangle_mesh(x0, y0, x1, y1, config.nx, config.ny)?);
    let inside = mesh.cells_where(|c| (c[0] - cx).powi(2) + (c[1] - cy).powi(2) < r * r);
    if inside.is_empty() {
        return Err(Error::InclusionTooSmall);
    }
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    let complex = Arc::new(Complex::new(Arc::new(build_cover(&mesh, vec![all, inside])?)));
    let weights = model_weights(&complex, &[config.w0, config.w1], &|_, _| config.w01)?;
    let (f0, f1) = (Arc::clone(&config.f0), Arc::clone(&config.f1));
    let load = load_k0(&complex, |b, x| if b.idx.indices()[0] == 0 { f0(x) } else { f1(x) })?;
    HodgeProblem::from_load(complex, 0, weights, load)
}

/// Exact solution and matching forcing, one pair per cover set.
#[derive(Clone)]
pub struct Manufactured {
    pub exact: Vec<ScalarFn>,
    pub forcing: Vec<ScalarFn>,
}

/// Neumann cosines on each rod:
/// `a_0 = cos(π(x+1)/(1+ε))`, `a_1 = cos(π(x+ε)/(1+ε))`, with
/// `f_i = w_i k² a_i ∓ 𝟙_{01} w_{01}(a_1 − a_0)`, `k = π/(1+ε)`.
pub fn rods_manufactured(eps: f64, w0: f64, w1: f64, w01: f64) -> Manufactured {
    let k = PI / (1.0 + eps);
    let a0 = move |x: [f64; 2]| (k * (x[0] + 1.0)).cos();
    let a1 = move |x: [f64; 2]| (k * (x[0] + eps)).cos();
    let overlap = move |x: [f64; 2]| x[0] > -eps && x[0] < eps;
    let exch = move |x: [f64; 2]| if overlap(x) { w01 * (a1(x) - a0(x)) } else { 0.0 };
    Manufactured {
        exact: vec![Arc::new(a0), Arc::new(a1)],
        forcing: vec![
            Arc::new(move |x| w0 * k * k * a0(x) - exch(x)),
            Arc::new(move |x| w1 * k * k * a1(x) + exch(x)),
        ],
    }
}

/// Neumann cosines on the unit square, `a_0 = cos πx cos πy`,
/// `a_1 = cos 2πx`, with exchange `f_i = −∇·(w_i∇a_i) + w_{01}(a_i − a_j)`.
pub fn double_porosity_manufactured(w0: f64, w1: f64, w01: f64) -> Manufactured {
    let a0 = |x: [f64; 2]| (PI * x[0]).cos() * (PI * x[1]).cos();
    let a1 = |x: [f64; 2]| (2.0 * PI * x[0]).cos();
    Manufactured {
        exact: vec![Arc::new(a0), Arc::new(a1)],
        forcing: vec![
            Arc::new(move |x| w0 * 2.0 * PI * PI * a0(x) + w01 * (a0(x) - a1(x))),
            Arc::new(move |x| w1 * 4.0 * PI * PI * a1(x) + w01 * (a1(x) - a0(x))),
        ],
    }
}

/// Exchange flux `⟨w_{ij} (a_j − a_i), 1⟩_{U_ij}` for every overlap block of
/// a degree-0 solution, in the order of the `A¹` layout.
pub fn exchange_fluxes(problem: &HodgeProblem, alpha: &Cochain) -> Result<Vec<(BlockIndex, f64)>> {
    let complex = &problem.complex;
    let d = complex.total_derivative(0)?;
    let m1 = complex.mass_matrix(1, problem.weights.get(1))?;
    let beta = d.apply(alpha)?;
    let flux = m1.matrix().mul_vec(beta.values());
    let layout = complex.layout(1)?;
    Ok(layout
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.p == 1)
        .map(|(i, b)| (b.clone(), layout.range(i).map(|r| flux[r]).sum()))
        .collect())
}

/// Per-set balance of a degree-0 solution: net exchange out of `U_i`,
/// `Σ_j ⟨w_{ij}(a_i − a_j), 1⟩`, against the source `∫_{U_i} f_i` after the
/// harmonic part of the load has been removed.
#[derive(Clone, Debug, PartialEq)]
pub struct MassBalance {
    pub set: usize,
    pub exchange: f64,
    pub source: f64,
}

impl MassBalance {
    pub fn residual(&self) -> f64 {
        (self.exchange - self.source).abs()
    }
}

pub fn mass_balance(problem: &HodgeProblem, alpha: &Cochain) -> Result<Vec<MassBalance>> {
    if problem.k != 0 {
        return Err(Error::InvalidConfig("mass balance is defined for degree-0 problems".into()));
    }
    let complex = &problem.complex;
    let layout = complex.layout(0)?;
    let basis = kernel_k0(complex, &problem.weights)?;
    let mass = complex.mass_matrix(0, problem.weights.get(0))?;
    let coeffs = basis.coefficients(&problem.load);
    let harm = mass.matrix().mul_vec(&basis.combine(&coeffs));
    let projected: Vec<f64> = problem.load.iter().zip(&harm).map(|(l, h)| l - h).collect();
    let fluxes = exchange_fluxes(problem, alpha)?;
    Ok((0..complex.cover().num_sets())
        .map(|i| {
            let exchange = fluxes
                .iter()
                .map(|(b, f)| match b.idx.indices() {
                    [_, c] if *c == i => *f,
                    [a, _] if *a == i => -*f,
                    _ => 0.0,
                })
                .sum();
            let source = layout
                .find(0, &crate::cover::MultiIndex::single(i))
                .map_or(0.0, |b| projected[layout.range(b)].iter().sum());
            MassBalance { set: i, exchange, source }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::solve_primal_k0;

    #[test]
    fn quadrature_rules_are_exact() {
        // Σ w = 1 and exact for x^4 on the reference interval
        let g = gauss_1d();
        assert!((g.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-14);
        let m4: f64 = g.iter().map(|(l, w)| w * l[1].powi(4)).sum();
        assert!((m4 - 0.2).abs() < 1e-14);
        let d = dunavant_7();
        assert!((d.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-12);
        // ∫ λ1^2 λ2^2 over the reference triangle (area 1/2) is 4/720·... = 1/180
        let v: f64 = d.iter().map(|(l, w)| 0.5 * w * l[1].powi(2) * l[2].powi(2)).sum();
        assert!((v - 1.0 / 180.0).abs() < 1e-12);
    }

    #[test]
    fn de_rham_commutes_with_d() {
        // D of the interpolant of a gradient field equals the interpolant of the gradient
        let mesh = Arc::new(build_triangle_mesh(0.0, 0.0, 1.0, 1.0, 3, 3).unwrap());
        let sets = vec![mesh.cells_where(|c| c[0] < 0.7), mesh.cells_where(|c| c[0] > 0.3)];
        let c = Complex::new(Arc::new(build_cover(&mesh, sets).unwrap()));
        let u = |x: [f64; 2]| x[0] * x[0] - x[0] * x[1] + 2.0 * x[1];
        let grad = |x: [f64; 2]| [2.0 * x[0] - x[1], -x[0] + 2.0];
        let a = de_rham(&c, 0, |b, x| [if b.idx.indices()[0] == 0 { u(x) } else { 0.0 }, 0.0]).unwrap();
        let da = c.d_operator(0).unwrap().apply(&a).unwrap();
        let g = de_rham(&c, 1, |b, x| if b.p == 0 && b.idx.indices()[0] == 0 { grad(x) } else { [0.0, 0.0] }).unwrap();
        for (x, y) in da.values().iter().zip(g.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        // curl of a gradient integrates to zero around every triangle
        let dg = c.d_operator(1).unwrap().apply(&g).unwrap();
        assert!(dg.values().iter().all(|v| v.abs() < 1e-12));
        // unit density integrates to the oriented area
        let area = de_rham(&c, 2, |_, _| [1.0, 0.0]).unwrap();
        let layout = c.layout(2).unwrap();
        for (b, block) in layout.blocks().iter().enumerate().filter(|(_, b)| b.q == 2) {
            assert!(area.block(b).iter().all(|v| (v.abs() - 1.0 / 18.0).abs() < 1e-14), "{block:?}");
        }
    }

    #[test]
    fn zero_forcing_rods() {
        let cfg = RodsConfig { epsilon: 0.25, cells_per_unit: 8, w0: 1.0, w1: 1.0, w01: 1.0, f0: constant(0.0), f1: constant(0.0) };
        let s = solve_primal_k0(&build_rods(&cfg).unwrap()).unwrap();
        assert!(s.alpha.values().iter().all(|&v| v == 0.0));
        assert_eq!(s.kernel_dim, 1);
    }

    #[test]
    fn config_validation() {
        let base = RodsConfig { epsilon: 0.25, cells_per_unit: 8, w0: 1.0, w1: 1.0, w01: 1.0, f0: constant(0.0), f1: constant(0.0) };
        assert!(build_rods(&RodsConfig { epsilon: 1.5, ..base.clone() }).is_err());
        assert!(build_rods(&RodsConfig { w0: 0.0, ..base.clone() }).is_err());
        let inc = InclusionConfig {
            extents: [0.0, 0.0, 1.0, 1.0],
            nx: 4,
            ny: 4,
            center: [0.5, 0.5],
            radius: 0.01,
            w0: 1.0,
            w1: 1.0,
            w01: 1.0,
            f0: constant(0.0),
            f1: constant(0.0),
        };
        assert!(matches!(build_inclusion(&inc), Err(Error::InclusionTooSmall)));
        assert!(build_inclusion(&InclusionConfig { radius: 0.6, ..inc }).is_err());
    }
}
