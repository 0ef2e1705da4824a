//! Time-dependent Lindblad master equations, fixed-step RK4 integration and
//! dynamical maps in operator-space (column-stacking) form.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::qcore::{self, CMatrix, HermitianOp, QState, C64, I};

/// Default RK4 step in model time units.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Eigenvalues below this along a trajectory abort the integration.
pub const POSITIVITY_ABORT: f64 = -1e-6;

pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type HamiltonianFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// One dissipation channel `gamma(t) (A_i rho A_j^dagger - 1/2 {A_j^dagger A_i, rho})`
/// coupled to a bath at inverse temperature `beta`.
#[derive(Clone)]
pub struct Channel {
    pub label: String,
    a_i: CMatrix,
    a_j: CMatrix,
    a_j_dag: CMatrix,
    a_j_dag_a_i: CMatrix,
    rate: RateFn,
    beta: f64,
}

impl fmt::Debug for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Channel")
            .field("label", &self.label)
            .field("a_i", &self.a_i)
            .field("a_j", &self.a_j)
            .field("beta", &self.beta)
            .finish_non_exhaustive()
    }
}

impl Channel {
    pub fn new(
        label: impl Into<String>,
        a_i: CMatrix,
        a_j: CMatrix,
        rate: RateFn,
        beta: f64,
    ) -> Result<Self> {
        if a_i.nrows() != a_i.ncols() {
            return Err(Error::NotSquare {
                rows: a_i.nrows(),
                cols: a_i.ncols(),
            });
        }
        if a_j.shape() != a_i.shape() {
            return Err(Error::DimMismatch {
                expected: a_i.nrows(),
                found: a_j.nrows(),
            });
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "channel beta must be finite and >= 0, got {beta}"
            )));
        }
        let a_j_dag = a_j.adjoint();
        let a_j_dag_a_i = &a_j_dag * &a_i;
        Ok(Self {
            label: label.into(),
            a_i,
            a_j,
            a_j_dag,
            a_j_dag_a_i,
            rate,
            beta,
        })
    }

    /// Diagonal channel `A_i = A_j = a`.
    pub fn diagonal(label: impl Into<String>, a: CMatrix, rate: RateFn, beta: f64) -> Result<Self> {
        Self::new(label, a.clone(), a, rate, beta)
    }

    pub fn constant(label: impl Into<String>, a: CMatrix, gamma: f64, beta: f64) -> Result<Self> {
        Self::diagonal(label, a, Arc::new(move |_| gamma), beta)
    }

    pub fn dim(&self) -> usize {
        self.a_i.nrows()
    }

    pub fn a_i(&self) -> &CMatrix {
        &self.a_i
    }

    pub fn a_j(&self) -> &CMatrix {
        &self.a_j
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        (self.rate)(t)
    }

    pub fn rate_fn(&self) -> RateFn {
        Arc::clone(&self.rate)
    }

    /// The bare superoperator (without the rate) applied to an arbitrary operator.
    pub fn apply_superoperator(&self, x: &CMatrix) -> CMatrix {
        let jump = &self.a_i * x * &self.a_j_dag;
        let anti = qcore::anticommutator(&self.a_j_dag_a_i, x);
        jump - anti * C64::new(0.5, 0.0)
    }
}

/// `A_i rho A_j^dagger - 1/2 {A_j^dagger A_i, rho}` for a state.
pub fn dissipator(ch: &Channel, rho: &QState) -> Result<CMatrix> {
    if ch.dim() != rho.dim() {
        return Err(Error::DimMismatch {
            expected: ch.dim(),
            found: rho.dim(),
        });
    }
    Ok(ch.apply_superoperator(rho.matrix()))
}

/// `d rho/dt = -i[H(t), rho] + sum_k gamma_k(t) D_k[rho]`.
#[derive(Clone)]
pub struct MasterEquation {
    dim: usize,
    hamiltonian: HamiltonianFn,
    channels: Vec<Channel>,
}

impl fmt::Debug for MasterEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterEquation")
            .field("dim", &self.dim)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl MasterEquation {
    pub fn new(dim: usize, hamiltonian: HamiltonianFn, channels: Vec<Channel>) -> Result<Self> {
        for ch in &channels {
            if ch.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: ch.dim(),
                });
            }
        }
        let h0 = hamiltonian(0.0);
        if h0.nrows() != dim || h0.ncols() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: h0.nrows(),
            });
        }
        let deviation = qcore::hermitian_deviation(&h0);
        if deviation > qcore::HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            dim,
            hamiltonian,
            channels,
        })
    }

    pub fn with_constant_hamiltonian(h: HermitianOp, channels: Vec<Channel>) -> Result<Self> {
        let dim = h.dim();
        let m = h.into_matrix();
        Self::new(dim, Arc::new(move |_| m.clone()), channels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn hamiltonian_matrix(&self, t: f64) -> CMatrix {
        (self.hamiltonian)(t)
    }

    pub fn hamiltonian_at(&self, t: f64) -> HermitianOp {
        HermitianOp::from_trusted(qcore::hermitize(&(self.hamiltonian)(t)))
    }

    /// Central-difference `dH/dt`.
    pub fn hamiltonian_derivative(&self, t: f64) -> CMatrix {
        let h = 1e-5 * (1.0 + t.abs());
        ((self.hamiltonian)(t + h) - (self.hamiltonian)(t - h)) * C64::new(0.5 / h, 0.0)
    }

    /// The single inverse temperature shared by all channels, if any channel exists.
    pub fn common_beta(&self) -> Result<Option<f64>> {
        let mut iter = self.channels.iter().map(Channel::beta);
        let Some(first) = iter.next() else {
            return Ok(None);
        };
        for b in iter {
            if (b - first).abs() > 1e-12 * (1.0 + first.abs()) {
                return Err(Error::MixedTemperatures { first, second: b });
            }
        }
        Ok(Some(first))
    }

    /// Generator applied to an arbitrary operator (linear in `x`).
    pub fn generator(&self, t: f64, x: &CMatrix) -> CMatrix {
        let h = (self.hamiltonian)(t);
        let mut out = qcore::commutator(&h, x) * (-I);
        for ch in &self.channels {
            let rate = ch.rate_at(t);
            if rate != 0.0 {
                out += ch.apply_superoperator(x) * C64::new(rate, 0.0);
            }
        }
        out
    }

    /// Superoperator matrix of the generator at time `t`, column-stacking convention.
    pub fn liouvillian(&self, t: f64) -> CMatrix {
        let d = self.dim;
        let mut l = CMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let image = self.generator(t, &qcore::ket_bra(d, i, j));
                l.set_column(i + d * j, &vectorize(&image));
            }
        }
        l
    }

    fn rk4_step(&self, t: f64, h: f64, x: &CMatrix) -> CMatrix {
        let half = C64::new(h / 2.0, 0.0);
        let k1 = self.generator(t, x);
        let k2 = self.generator(t + h / 2.0, &(x + &k1 * half));
        let k3 = self.generator(t + h / 2.0, &(x + &k2 * half));
        let k4 = self.generator(t + h, &(x + &k3 * C64::new(h, 0.0)));
        x + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
    }
}

/// `d rho/dt` at time `t`.
pub fn rhs(me: &MasterEquation, t: f64, rho: &QState) -> Result<CMatrix> {
    if rho.dim() != me.dim {
        return Err(Error::DimMismatch {
            expected: me.dim,
            found: rho.dim(),
        });
    }
    Ok(me.generator(t, rho.matrix()))
}

/// States sampled on an increasing time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &QState)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Uniform substep count so that each substep is at most `max_step`.
fn substeps(span: f64, max_step: f64) -> usize {
    ((span / max_step) - 1e-9).ceil().max(1.0) as usize
}

fn validate_step(t: f64, step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite time {t}")));
    }
    Ok(())
}

/// Re-validates an integrated density matrix: hermitizes, renormalizes the trace and
/// checks that positivity is not lost beyond roundoff.
fn revalidate(t: f64, m: CMatrix) -> Result<QState> {
    let m = qcore::hermitize(&m);
    let tr = qcore::trace(&m).re;
    let drift = (tr - 1.0).abs();
    if drift > 1e-12 {
        log::trace!("trace drift {drift:.3e} at t = {t}");
    }
    let m = m / C64::new(tr, 0.0);
    let min = qcore::eigvalsh(&m)[0];
    if min < POSITIVITY_ABORT {
        return Err(Error::PositivityLost {
            t,
            min_eigenvalue: min,
        });
    }
    if min < -qcore::POSITIVITY_TOL {
        log::warn!("eigenvalue {min:.3e} below tolerance at t = {t}");
    }
    Ok(QState::from_trusted(m))
}

/// Fixed-step RK4 from `t0` to `t1`; every step is stored.
///
/// The step is shrunk uniformly so that the grid lands exactly on `t1`.
pub fn evolve(
    me: &MasterEquation,
    rho0: &QState,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<Trajectory> {
    validate_step(t0, step)?;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "t1 = {t1} must exceed t0 = {t0}"
        )));
    }
    if rho0.dim() != me.dim {
        return Err(Error::DimMismatch {
            expected: me.dim,
            found: rho0.dim(),
        });
    }
    let n = substeps(t1 - t0, step);
    let h = (t1 - t0) / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(t0);
    states.push(rho0.clone());
    let mut current = rho0.matrix().clone();
    for k in 0..n {
        let t = t0 + k as f64 * h;
        current = me.rk4_step(t, h, &current);
        let t_next = t0 + (k + 1) as f64 * h;
        let state = revalidate(t_next, current)?;
        current = state.matrix().clone();
        times.push(t_next);
        states.push(state);
    }
    Ok(Trajectory { times, states })
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Integrates from `grid[0]` and records the state at every grid time,
/// taking RK4 substeps no longer than `max_step` in between.
pub fn evolve_on_grid(
    me: &MasterEquation,
    rho0: &QState,
    grid: &[f64],
    max_step: f64,
) -> Result<Trajectory> {
    validate_grid(grid)?;
    validate_step(grid[0], max_step)?;
    if rho0.dim() != me.dim {
        return Err(Error::DimMismatch {
            expected: me.dim,
            found: rho0.dim(),
        });
    }
    let mut states = Vec::with_capacity(grid.len());
    states.push(rho0.clone());
    let mut current = rho0.matrix().clone();
    for w in grid.windows(2) {
        let n = substeps(w[1] - w[0], max_step);
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            current = me.rk4_step(w[0] + k as f64 * h, h, &current);
        }
        let state = revalidate(w[1], current)?;
        current = state.matrix().clone();
        states.push(state);
    }
    Ok(Trajectory {
        times: grid.to_vec(),
        states,
    })
}

/// Column-stacking vectorization: `vec(X)[i + d j] = X[i, j]`.
pub fn vectorize(x: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// A linear map on `dim x dim` operators, stored as a `dim^2 x dim^2` matrix acting on
/// column-stacked operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMap {
    dim: usize,
    matrix: CMatrix,
}

impl ProcessMap {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                found: matrix.nrows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: qcore::identity(dim * dim),
        }
    }

    /// Builds the map from its action on operators.
    pub fn from_fn(dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut matrix = CMatrix::zeros(dim * dim, dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                matrix.set_column(i + dim * j, &vectorize(&f(&qcore::ket_bra(dim, i, j))));
            }
        }
        Self { dim, matrix }
    }

    /// The transpose map `X -> X^T` (positive but not completely positive).
    pub fn transpose(dim: usize) -> Self {
        Self::from_fn(dim, |x| x.transpose())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        unvectorize(&(&self.matrix * vectorize(x)), self.dim)
    }

    pub fn apply_state(&self, rho: &QState) -> Result<CMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        Ok(self.apply(rho.matrix()))
    }

    /// `self` after `first`, i.e. `X -> self(first(X))`.
    pub fn after(&self, first: &ProcessMap) -> ProcessMap {
        ProcessMap {
            dim: self.dim,
            matrix: &self.matrix * &first.matrix,
        }
    }

    /// Worst deviation of `Tr E(|i><j|)` from `delta_ij`.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for col in 0..d * d {
            let tr: C64 = (0..d).map(|k| self.matrix[(k + d * k, col)]).sum();
            let target = if col % (d + 1) == 0 { 1.0 } else { 0.0 };
            worst = worst.max((tr - C64::new(target, 0.0)).norm());
        }
        worst
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_error() <= tol
    }
}

/// Dynamical maps `E_{t, t_0}` at every time of `times` (relative to `times[0]`),
/// obtained by integrating all `dim^2` operator-basis elements at once.
pub fn propagator(me: &MasterEquation, times: &[f64]) -> Result<Vec<ProcessMap>> {
    propagator_with_step(me, times, DEFAULT_STEP)
}

pub fn propagator_with_step(
    me: &MasterEquation,
    times: &[f64],
    max_step: f64,
) -> Result<Vec<ProcessMap>> {
    validate_grid(times)?;
    validate_step(times[0], max_step)?;
    let d = me.dim;
    let mut maps = Vec::with_capacity(times.len());
    let mut current = qcore::identity(d * d);
    maps.push(ProcessMap::identity(d));
    for w in times.windows(2) {
        let n = substeps(w[1] - w[0], max_step);
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            current = rk4_superoperator(me, w[0] + k as f64 * h, h, &current);
        }
        maps.push(ProcessMap {
            dim: d,
            matrix: current.clone(),
        });
    }
    Ok(maps)
}

fn rk4_superoperator(me: &MasterEquation, t: f64, h: f64, e: &CMatrix) -> CMatrix {
    let half = C64::new(h / 2.0, 0.0);
    let l_start = me.liouvillian(t);
    let l_mid = me.liouvillian(t + h / 2.0);
    let l_end = me.liouvillian(t + h);
    let k1 = &l_start * e;
    let k2 = &l_mid * (e + &k1 * half);
    let k3 = &l_mid * (e + &k2 * half);
    let k4 = &l_end * (e + &k3 * C64::new(h, 0.0));
    e + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
}
