//! Time stepping for `∂_t^ℓ α + Δ_D α = φ` with `ℓ ∈ {1, 2}`.
//!
//! Heat (`ℓ = 1`) uses implicit Euler, wave (`ℓ = 2`) the implicit midpoint
//! rule on the first-order system `(α, v)`. Loads are dual vectors `ℓ = M_k φ`.

use std::sync::Arc;

use crate::complex::{Cochain, Complex, Layout, Weights};
use crate::error::{Error, Result};
use crate::hodge::HodgeOperators;
use crate::linalg::{dot, Factorization, SparseMatrix};

/// Weak Hodge-Laplacian `M_k Δ = Bᵀ M_{k−1}⁻¹ B + K` with a cached factor of `M_{k−1}`.
#[derive(Debug)]
pub struct LaplacianOperator {
    layout: Arc<Layout>,
    ops: HodgeOperators,
    lower: Option<Factorization>,
}

impl LaplacianOperator {
    pub fn new(complex: &Complex, k: usize, weights: &Weights) -> Result<Self> {
        let layout = Arc::clone(complex.layout(k)?);
        let ops = HodgeOperators::new(complex, k, weights)?;
        let lower = match &ops.m_km1 {
            Some(m) if m.nrows() > 0 => Some(Factorization::new(m)?),
            _ => None,
        };
        Ok(Self { layout, ops, lower })
    }

    pub fn degree(&self) -> usize {
        self.ops.k
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.ops.m_k
    }

    pub fn operators(&self) -> &HodgeOperators {
        &self.ops
    }

    /// `D*_k x = M_{k−1}⁻¹ B x` (empty at `k = 0`).
    pub fn codifferential(&self, x: &[f64]) -> Result<Vec<f64>> {
        match (&self.ops.b, &self.lower) {
            (Some(b), Some(f)) => f.solve(&b.mul_vec(x)),
            _ => Ok(Vec::new()),
        }
    }

    /// `M_k Δ x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.ops.stiffness.mul_vec(x);
        if let Some(b) = &self.ops.b {
            let g = self.codifferential(x)?;
            y.iter_mut().zip(b.mul_vec_transpose(&g)).for_each(|(yi, v)| *yi += v);
        }
        Ok(y)
    }

    /// `‖x‖²_M`, `‖D x‖²_M`, `‖D* x‖²_M`.
    pub fn norms_squared(&self, x: &[f64]) -> Result<(f64, f64, f64)> {
        let a = dot(x, &self.ops.m_k.mul_vec(x));
        let dx = self.ops.d_k.matrix().mul_vec(x);
        let b = dot(&dx, &self.ops.m_kp1.mul_vec(&dx));
        let c = match &self.ops.m_km1 {
            Some(m) => {
                let g = self.codifferential(x)?;
                dot(&g, &m.mul_vec(&g))
            }
            None => 0.0,
        };
        Ok((a, b, c))
    }

    /// Factorizes `a M + b L` through the mixed system
    /// `[−b M_{k−1}, b B; b Bᵀ, a M + b K]`.
    pub fn shifted(&self, a: f64, b: f64) -> Result<ShiftedSolver> {
        if !(a > 0.0) || !(b >= 0.0) {
            return Err(Error::InvalidRange(format!("shift ({a}, {b}) must have a > 0, b >= 0")));
        }
        let n1 = self.ops.lower_dim();
        let n2 = self.ops.dim();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        if let (Some(m), Some(bb)) = (&self.ops.m_km1, &self.ops.b) {
            triplets.extend(m.scale(-b).shifted_triplets(0, 0));
            let bs = bb.scale(b);
            triplets.extend(bs.shifted_triplets(0, n1));
            triplets.extend(bs.transpose().shifted_triplets(n1, 0));
        }
        triplets.extend(self.ops.m_k.scale(a).shifted_triplets(n1, n1));
        triplets.extend(self.ops.stiffness.scale(b).shifted_triplets(n1, n1));
        let system = SparseMatrix::from_triplets(n1 + n2, n1 + n2, triplets)?;
        Ok(ShiftedSolver { n1, n2, factor: Factorization::new(&system)? })
    }
}

#[derive(Debug)]
pub struct ShiftedSolver {
    n1: usize,
    n2: usize,
    factor: Factorization,
}

impl ShiftedSolver {
    /// Solves `(a M + b L) x = r`.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; self.n1 + self.n2];
        rhs[self.n1..].copy_from_slice(r);
        Ok(self.factor.solve(&rhs)?.split_off(self.n1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransientState {
    pub t: f64,
    pub alpha: Cochain,
    /// `∂_t α`, used by the wave stepper.
    pub velocity: Option<Cochain>,
}

impl TransientState {
    pub fn new(alpha: Cochain, velocity: Option<Cochain>) -> Self {
        Self { t: 0.0, alpha, velocity }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Heat,
    Wave,
}

impl Scheme {
    /// Maps the time-derivative order `ℓ` to a scheme.
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Self::Heat),
            2 => Ok(Self::Wave),
            other => Err(Error::InvalidConfig(format!("time-derivative order must be 1 or 2, got {other}"))),
        }
    }
}

/// Implicit Euler: `(M + dt L) α^{n+1} = M α^n + dt ℓ`.
#[derive(Debug)]
pub struct HeatStepper {
    lap: Arc<LaplacianOperator>,
    dt: f64,
    solver: ShiftedSolver,
}

impl HeatStepper {
    pub fn new(lap: Arc<LaplacianOperator>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidRange(format!("time step {dt} must be positive")));
        }
        let solver = lap.shifted(1.0, dt)?;
        Ok(Self { lap, dt, solver })
    }

    pub fn step(&self, state: &TransientState, load: Option<&[f64]>) -> Result<TransientState> {
        let mut rhs = self.lap.mass().mul_vec(state.alpha.values());
        if let Some(l) = load {
            rhs.iter_mut().zip(l).for_each(|(r, li)| *r += self.dt * li);
        }
        let alpha = Cochain::from_values(self.lap.layout(), self.solver.solve(&rhs)?)?;
        Ok(TransientState { t: state.t + self.dt, alpha, velocity: None })
    }
}

/// Implicit midpoint:
/// `(M + dt²/4 L) α^{n+1} = M α^n + dt M v^n − dt²/4 L α^n + dt²/2 ℓ`,
/// `v^{n+1} = 2 (α^{n+1} − α^n) / dt − v^n`.
#[derive(Debug)]
pub struct WaveStepper {
    lap: Arc<LaplacianOperator>,
    dt: f64,
    solver: ShiftedSolver,
}

impl WaveStepper {
    pub fn new(lap: Arc<LaplacianOperator>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidRange(format!("time step {dt} must be positive")));
        }
        let solver = lap.shifted(1.0, dt * dt / 4.0)?;
        Ok(Self { lap, dt, solver })
    }

    pub fn step(&self, state: &TransientState, load: Option<&[f64]>) -> Result<TransientState> {
        let dt = self.dt;
        let a0 = state.alpha.values();
        let zero;
        let v0 = match &state.velocity {
            Some(v) => v.values(),
            None => {
                zero = vec![0.0; a0.len()];
                &zero
            }
        };
        let m = self.lap.mass();
        let ma = m.mul_vec(a0);
        let mv = m.mul_vec(v0);
        let la = self.lap.apply(a0)?;
        let mut rhs: Vec<f64> = (0..a0.len()).map(|i| ma[i] + dt * mv[i] - 0.25 * dt * dt * la[i]).collect();
        if let Some(l) = load {
            rhs.iter_mut().zip(l).for_each(|(r, li)| *r += 0.5 * dt * dt * li);
        }
        let a1 = self.solver.solve(&rhs)?;
        let v1: Vec<f64> = (0..a0.len()).map(|i| 2.0 * (a1[i] - a0[i]) / dt - v0[i]).collect();
        let layout = self.lap.layout();
        Ok(TransientState {
            t: state.t + dt,
            alpha: Cochain::from_values(layout, a1)?,
            velocity: Some(Cochain::from_values(layout, v1)?),
        })
    }
}

/// One implicit Euler step with a fresh factorization.
pub fn step_heat(lap: &Arc<LaplacianOperator>, state: &TransientState, dt: f64, load: Option<&[f64]>) -> Result<TransientState> {
    HeatStepper::new(Arc::clone(lap), dt)?.step(state, load)
}

/// One implicit midpoint step with a fresh factorization.
pub fn step_wave(lap: &Arc<LaplacianOperator>, state: &TransientState, dt: f64, load: Option<&[f64]>) -> Result<TransientState> {
    WaveStepper::new(Arc::clone(lap), dt)?.step(state, load)
}

/// One row of a transient energy history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub energy: f64,
    pub alpha_norm: f64,
    pub d_alpha_norm: f64,
    pub codiff_norm: f64,
}

/// Heat energy `½‖α‖²`; wave energy `½‖v‖² + ½(‖Dα‖² + ‖D*α‖²)`.
pub fn energy_record(lap: &LaplacianOperator, scheme: Scheme, state: &TransientState) -> Result<EnergyRecord> {
    let (a, b, c) = lap.norms_squared(state.alpha.values())?;
    let energy = match scheme {
        Scheme::Heat => 0.5 * a,
        Scheme::Wave => {
            let kinetic = state.velocity.as_ref().map_or(0.0, |v| dot(v.values(), &lap.mass().mul_vec(v.values())));
            0.5 * kinetic + 0.5 * (b + c)
        }
    };
    Ok(EnergyRecord { t: state.t, energy, alpha_norm: a.sqrt(), d_alpha_norm: b.sqrt(), codiff_norm: c.sqrt() })
}

/// Runs `steps` steps and returns the final state with the energy history
/// (initial state included).
pub fn simulate(
    lap: &Arc<LaplacianOperator>,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    initial: TransientState,
    load: Option<&[f64]>,
) -> Result<(TransientState, Vec<EnergyRecord>)> {
    let mut history = Vec::with_capacity(steps + 1);
    history.push(energy_record(lap, scheme, &initial)?);
    let mut state = initial;
    match scheme {
        Scheme::Heat => {
            let s = HeatStepper::new(Arc::clone(lap), dt)?;
            for _ in 0..steps {
                state = s.step(&state, load)?;
                history.push(energy_record(lap, scheme, &state)?);
            }
        }
        Scheme::Wave => {
            let s = WaveStepper::new(Arc::clone(lap), dt)?;
            for _ in 0..steps {
                state = s.step(&state, load)?;
                history.push(energy_record(lap, scheme, &state)?);
            }
        }
    }
    Ok((state, history))
}

/// Self-convergence study: runs to `t_final` with `base_steps · 2^i` steps
/// for `i = 0..levels` and returns `(dt, ‖α_dt − α_{dt/2}‖_M)` for each
/// consecutive pair. The runs are independent and execute in parallel.
pub fn self_convergence(
    lap: &Arc<LaplacianOperator>,
    scheme: Scheme,
    t_final: f64,
    base_steps: usize,
    levels: usize,
    initial: &TransientState,
    load: Option<&[f64]>,
) -> Result<Vec<(f64, f64)>> {
    if levels < 2 {
        return Err(Error::InvalidRange("self-convergence needs at least two levels".into()));
    }
    let finals = crate::par::map_range(levels, |i| {
        let steps = base_steps << i;
        simulate(lap, scheme, t_final / steps as f64, steps, initial.clone(), load).map(|(s, _)| s)
    });
    let finals: Vec<TransientState> = finals.into_iter().collect::<Result<_>>()?;
    Ok(finals
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let diff: Vec<f64> = w[0].alpha.values().iter().zip(w[1].alpha.values()).map(|(a, b)| a - b).collect();
            let dt = t_final / (base_steps << i) as f64;
            (dt, dot(&diff, &lap.mass().mul_vec(&diff)).sqrt())
        })
        .collect())
}

/// Observed orders `log₂(e_i / e_{i+1})`.
pub fn observed_rates(errors: &[(f64, f64)]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0].1 / w[1].1).log2()).collect()
}
