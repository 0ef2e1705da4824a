//! Dense quantum linear algebra on small Hilbert spaces.
//!
//! Everything here works on `DMatrix<Complex64>` in natural units (hbar = k_B = 1),
//! with entropies in nats. Qubit conventions: basis index 0 is |1>, index 1 is |0>,
//! so that sigma_z = diag(1, -1) points +z at |1><1|.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Default floor applied to eigenvalues before taking logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `|i><j|` in a `dim`-dimensional space.
pub fn ket_bra(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Largest entrywise modulus of `m - m^dagger`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Real part of `Tr(a b)`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `V diag(f(lambda)) V^dagger` for Hermitian `m`.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (values, vectors) = eigh(m);
    reassemble(&values.iter().map(|&v| f(v)).collect::<Vec<_>>(), &vectors)
}

fn reassemble(diag: &[C64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (col, d) in diag.iter().enumerate() {
        for row in 0..n {
            scaled[(row, col)] *= *d;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(h, |e| C64::from_polar(1.0, -e * t))
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn require_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimMismatch { expected, found });
    }
    Ok(())
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    matrix: CMatrix,
}

impl QState {
    /// Validates `matrix` as a density matrix.
    ///
    /// Eigenvalues in `[-1e-10, 0)` are treated as roundoff: they are clamped to zero
    /// and the trace renormalized. Anything more negative is rejected.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        require_square(&matrix)?;
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace { trace: tr });
        }
        let matrix = hermitize(&matrix);
        let (values, vectors) = eigh(&matrix);
        let min = values[0];
        if min < -POSITIVITY_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        if min < 0.0 {
            let clamped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            let diag: Vec<C64> = clamped.iter().map(|v| C64::new(v / total, 0.0)).collect();
            return Ok(Self {
                matrix: hermitize(&reassemble(&diag, &vectors)),
            });
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix the caller has already hermitized and normalized.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        let mut m = CMatrix::zeros(n, n);
        for (k, p) in populations.iter().enumerate() {
            m[(k, k)] = C64::new(*p, 0.0);
        }
        Self::new(m)
    }

    /// `|k><k|` in a `dim`-dimensional space.
    pub fn basis(dim: usize, k: usize) -> Self {
        Self {
            matrix: ket_bra(dim, k, k),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    /// Projector onto a (not necessarily normalized) pure state vector.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let n = amplitudes.len();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = amplitudes[i] * amplitudes[j].conj() / (norm * norm);
            }
        }
        Ok(Self {
            matrix: hermitize(&m),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }

    pub fn expectation(&self, op: &HermitianOp) -> Result<f64> {
        require_dim(self.dim(), op.dim())?;
        Ok(trace_product(&self.matrix, op.matrix()))
    }

    pub fn tensor(&self, other: &QState) -> QState {
        QState {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, unitary: &CMatrix) -> Result<QState> {
        require_dim(self.dim(), unitary.nrows())?;
        Ok(QState {
            matrix: hermitize(&(unitary * &self.matrix * unitary.adjoint())),
        })
    }
}

/// A Hermitian operator, typically a Hamiltonian in units of the model's energy scale.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp {
    matrix: CMatrix,
}

impl HermitianOp {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        require_square(&matrix)?;
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix: hermitize(&matrix),
        })
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(energies: &[f64]) -> Self {
        let n = energies.len();
        let mut m = CMatrix::zeros(n, n);
        for (k, e) in energies.iter().enumerate() {
            m[(k, k)] = C64::new(*e, 0.0);
        }
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn scaled(&self, factor: f64) -> HermitianOp {
        HermitianOp {
            matrix: &self.matrix * C64::new(factor, 0.0),
        }
    }
}

/// Polar Bloch coordinates of a qubit state. `theta` is measured from +z (the |1> pole).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl BlochVector {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        Self { r, theta, phi }
    }

    pub fn from_cartesian([x, y, z]: [f64; 3]) -> Self {
        let r = (x * x + y * y + z * z).sqrt();
        if r == 0.0 {
            return Self {
                r,
                theta: 0.0,
                phi: 0.0,
            };
        }
        let theta = (z / r).clamp(-1.0, 1.0).acos();
        let phi = if x == 0.0 && y == 0.0 {
            0.0
        } else {
            y.atan2(x)
        };
        Self { r, theta, phi }
    }

    pub fn cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub state: QState,
    /// `ln Tr exp(-beta H)`.
    pub log_partition: f64,
}

/// Which factor of a bipartite state survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

fn xlogx(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.ln()
    }
}

/// `S(rho) = -Tr rho ln rho`, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &QState) -> f64 {
    let s: f64 = -rho.eigenvalues().into_iter().map(xlogx).sum::<f64>();
    s.max(0.0)
}

/// `S(rho || sigma)`; `+inf` when the support of `rho` leaves the support of `sigma`.
pub fn relative_entropy(rho: &QState, sigma: &QState) -> Result<f64> {
    require_dim(rho.dim(), sigma.dim())?;
    let (sigma_values, sigma_vectors) = eigh(sigma.matrix());
    let mut cross = 0.0;
    for (k, &s) in sigma_values.iter().enumerate() {
        let v = sigma_vectors.column(k);
        let weight = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if s < SUPPORT_THRESHOLD {
            if weight > SUPPORT_THRESHOLD {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * s.ln();
    }
    let neg_entropy: f64 = rho.eigenvalues().into_iter().map(xlogx).sum();
    Ok((neg_entropy - cross).max(0.0))
}

/// `D = 1/2 sum |eig(rho - sigma)|`.
pub fn trace_distance(rho: &QState, sigma: &QState) -> Result<f64> {
    require_dim(rho.dim(), sigma.dim())?;
    Ok(trace_norm_hermitian(&(rho.matrix() - sigma.matrix())) / 2.0)
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).into_iter().map(f64::abs).sum()
}

fn partial_trace_matrix(m: &CMatrix, (da, db): (usize, usize), keep: Keep) -> CMatrix {
    match keep {
        Keep::A => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::B => CMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    }
}

/// Reduced state of a bipartite `rho_ab` ordered as `A (x) B`.
pub fn partial_trace(rho_ab: &QState, dims: (usize, usize), keep: Keep) -> Result<QState> {
    require_dim(dims.0 * dims.1, rho_ab.dim())?;
    Ok(QState::from_trusted(hermitize(&partial_trace_matrix(
        rho_ab.matrix(),
        dims,
        keep,
    ))))
}

/// `I(A:B) = S_A + S_B - S_AB`.
pub fn mutual_information(rho_ab: &QState, dims: (usize, usize)) -> Result<f64> {
    let a = partial_trace(rho_ab, dims, Keep::A)?;
    let b = partial_trace(rho_ab, dims, Keep::B)?;
    let value = von_neumann_entropy(&a) + von_neumann_entropy(&b) - von_neumann_entropy(rho_ab);
    Ok(value.max(0.0))
}

/// `exp(-beta H) / Z`; `beta = 0` is the infinite-temperature (maximally mixed) state.
pub fn gibbs_state(h: &HermitianOp, beta: f64) -> Result<GibbsState> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    let (energies, vectors) = eigh(h.matrix());
    let ground = energies[0];
    let weights: Vec<f64> = energies
        .iter()
        .map(|e| (-beta * (e - ground)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let diag: Vec<C64> = weights.iter().map(|w| C64::new(w / total, 0.0)).collect();
    Ok(GibbsState {
        state: QState::from_trusted(hermitize(&reassemble(&diag, &vectors))),
        log_partition: -beta * ground + total.ln(),
    })
}

pub fn bloch_cartesian(rho: &QState) -> Result<[f64; 3]> {
    require_dim(2, rho.dim())?;
    let m = rho.matrix();
    let off = m[(0, 1)];
    Ok([2.0 * off.re, -2.0 * off.im, m[(0, 0)].re - m[(1, 1)].re])
}

pub fn bloch_from_state(rho: &QState) -> Result<BlochVector> {
    Ok(BlochVector::from_cartesian(bloch_cartesian(rho)?))
}

/// `(I + r . sigma) / 2`.
pub fn state_from_bloch(b: &BlochVector) -> Result<QState> {
    if !(b.r >= 0.0 && b.r <= 1.0 + POSITIVITY_TOL) {
        return Err(Error::InvalidArgument(format!(
            "Bloch radius {} outside [0, 1]",
            b.r
        )));
    }
    Ok(QState::from_trusted(qubit_operator(
        0.5,
        b.cartesian().map(|c| 0.5 * c),
    )))
}

/// `c0 I + c . sigma` as a 2x2 matrix.
pub fn qubit_operator(c0: f64, [x, y, z]: [f64; 3]) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c0 + z, 0.0),
            C64::new(x, -y),
            C64::new(x, y),
            C64::new(c0 - z, 0.0),
        ],
    )
}

/// `ln rho` with eigenvalues floored at `eps` (default [`LOG_CLAMP`]) in rho's own eigenbasis.
pub fn matrix_log_clamped(rho: &QState, eps: f64) -> HermitianOp {
    HermitianOp::from_trusted(hermitize(&hermitian_function(rho.matrix(), |v| {
        C64::new(v.max(eps).ln(), 0.0)
    })))
}
