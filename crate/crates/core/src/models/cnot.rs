//! Target qubit of a CNOT-coupled pair with isotropic depolarizing noise on the target.
//!
//! The control qubit is frozen in `diag(a, 1 - a)`; tracing it out leaves a time-local
//! master equation for the target with a `sigma_x` rate that turns negative periodically.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lindblad::{self, Channel, MasterEquation, ProcessMap};
use crate::qcore::{self, BlochVector, CMatrix, HermitianOp, Keep, QState, C64, I, ONE, ZERO};
use crate::thermoflux::{ChannelFlux, FluxSample};

/// Below this `r^2(t)` the `sigma_x` rate is treated as singular.
pub const RADIUS_SQUARED_FLOOR: f64 = 1e-14;
/// Bloch radii at or above `1 - PURE_STATE_MARGIN` make `artanh` diverge.
pub const PURE_STATE_MARGIN: f64 = 1e-12;

pub const CHANNEL_LABELS: [&str; 4] = ["C,x", "dep,x", "dep,y", "dep,z"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnotParams {
    pub a: f64,
    pub gamma: f64,
    pub j_coupling: f64,
    pub theta0: f64,
    pub phi0: f64,
    pub r0: f64,
}

impl Default for CnotParams {
    /// `a = 0.3`, `gamma = 0.1`, `J = 1`, target starting in `|1><1|`.
    fn default() -> Self {
        Self {
            a: 0.3,
            gamma: 0.1,
            j_coupling: 1.0,
            theta0: 0.0,
            phi0: 0.0,
            r0: 1.0,
        }
    }
}

impl CnotParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.a,
            self.gamma,
            self.j_coupling,
            self.theta0,
            self.phi0,
            self.r0,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "CNOT parameters must be finite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::InvalidArgument(format!(
                "a = {} outside [0, 1]",
                self.a
            )));
        }
        if !(0.0..=1.0).contains(&self.r0) {
            return Err(Error::InvalidArgument(format!(
                "r0 = {} outside [0, 1]",
                self.r0
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gamma = {} is negative",
                self.gamma
            )));
        }
        if self.j_coupling <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "J = {} must be positive",
                self.j_coupling
            )));
        }
        Ok(())
    }

    pub fn initial_bloch(&self) -> [f64; 3] {
        BlochVector::new(self.r0, self.theta0, self.phi0).cartesian()
    }

    pub fn initial_state(&self) -> Result<QState> {
        qcore::state_from_bloch(&BlochVector::new(self.r0, self.theta0, self.phi0))
    }

    pub fn control_state(&self) -> Result<QState> {
        QState::diagonal(&[self.a, 1.0 - self.a])
    }
}

/// `r^2(t) = (1 - a)^2 + 2a(1 - a) cos(Jt) + a^2`.
pub fn radius_squared(t: f64, a: f64, j: f64) -> f64 {
    let c = a * (1.0 - a);
    1.0 - 2.0 * c + 2.0 * c * (j * t).cos()
}

fn rate_cx_unchecked(t: f64, a: f64, j: f64) -> f64 {
    a * (1.0 - a) * j * (j * t).sin() / radius_squared(t, a, j)
}

/// The control-induced `sigma_x` rate `a(1 - a) J sin(Jt) / r^2(t)`.
pub fn cnot_rate_cx(t: f64, a: f64, j: f64) -> Result<f64> {
    let r2 = radius_squared(t, a, j);
    if r2 < RADIUS_SQUARED_FLOOR {
        return Err(Error::SingularRadius { t, r_squared: r2 });
    }
    Ok(rate_cx_unchecked(t, a, j))
}

/// `max_t |gamma_Cx(t)| = J c / sqrt(1 - 4c)` with `c = a(1 - a)`; infinite at `a = 0.5`.
pub fn cnot_amplitude_cx(a: f64, j: f64) -> f64 {
    let c = a * (1.0 - a);
    let gap = (1.0 - 2.0 * a).abs();
    if gap == 0.0 {
        return f64::INFINITY;
    }
    j * c / gap
}

/// Effective field `J_x(t) = (J / 2r^2)(a^2 + a(1 - a) cos(Jt))`.
pub fn cnot_field_x(t: f64, a: f64, j: f64) -> f64 {
    0.5 * j / radius_squared(t, a, j) * (a * a + a * (1.0 - a) * (j * t).cos())
}

/// Master equation of the target qubit. The `sigma_x` channel is split into the
/// control-induced part `C,x` and the depolarizing part `dep,x`.
pub fn cnot_master_equation(p: &CnotParams) -> Result<MasterEquation> {
    p.validate()?;
    let (a, j, gamma) = (p.a, p.j_coupling, p.gamma);
    let half = 0.5 * gamma;
    let channels = vec![
        Channel::diagonal(
            CHANNEL_LABELS[0],
            qcore::pauli_x(),
            Arc::new(move |t| 0.5 * rate_cx_unchecked(t, a, j)),
            0.0,
        )?,
        Channel::constant(CHANNEL_LABELS[1], qcore::pauli_x(), half, 0.0)?,
        Channel::constant(CHANNEL_LABELS[2], qcore::pauli_y(), half, 0.0)?,
        Channel::constant(CHANNEL_LABELS[3], qcore::pauli_z(), half, 0.0)?,
    ];
    let sx = qcore::pauli_x();
    MasterEquation::new(
        2,
        Arc::new(move |t| &sx * C64::new(cnot_field_x(t, a, j), 0.0)),
        channels,
    )
}

/// The four basis solutions `(rho_11, rho_00, rho_01, rho_10)` at time `t`.
pub fn cnot_basis_solutions(p: &CnotParams, t: f64) -> [CMatrix; 4] {
    let (a, j) = (p.a, p.j_coupling);
    let e = (-2.0 * p.gamma * t).exp();
    let s = (j * t).sin();
    let big_a = 1.0 - a + a * (j * t).cos();
    let h = 0.5 * a * e * s;
    let sin_half_sq = (0.5 * j * t).sin().powi(2);
    let pop_hi = C64::new(0.5 * (1.0 + e * big_a), 0.0);
    let pop_lo = C64::new(0.5 * (1.0 - e * big_a), 0.0);
    let coh = I * h;
    let far = C64::new(a * e * sin_half_sq, 0.0);
    let near = C64::new(0.5 * e * (1.0 + big_a), 0.0);
    let m = |v: [C64; 4]| CMatrix::from_row_slice(2, 2, &v);
    [
        m([pop_hi, coh, -coh, pop_lo]),
        m([pop_lo, -coh, coh, pop_hi]),
        m([-coh, far, near, coh]),
        m([coh, near, far, -coh]),
    ]
}

/// The dynamical map `E_{t,0}` assembled from the basis solutions.
pub fn cnot_analytic_map(p: &CnotParams, t: f64) -> ProcessMap {
    let [r11, r00, r01, r10] = cnot_basis_solutions(p, t);
    let images = [[r11, r10], [r01, r00]];
    ProcessMap::from_fn(2, |x| {
        let mut out = CMatrix::zeros(2, 2);
        for (i, row) in images.iter().enumerate() {
            for (j, img) in row.iter().enumerate() {
                out += img * x[(i, j)];
            }
        }
        out
    })
}

/// Closed-form target state `alpha0 rho_11 + beta0 rho_00 + delta0 rho_01 + delta0* rho_10`,
/// with `rho_T(0) = [[alpha0, delta0*], [delta0, beta0]]`.
pub fn cnot_analytic_state(p: &CnotParams, t: f64) -> Result<QState> {
    p.validate()?;
    let rho0 = p.initial_state()?;
    let m0 = rho0.matrix();
    let (alpha0, beta0, delta0) = (m0[(0, 0)], m0[(1, 1)], m0[(1, 0)]);
    let [r11, r00, r01, r10] = cnot_basis_solutions(p, t);
    let m = r11 * alpha0 + r00 * beta0 + r01 * delta0 + r10 * delta0.conj();
    QState::new(qcore::hermitize(&m))
}

/// Bloch radius `r0 e^{-2 gamma t} r~(t)` and its time derivative.
pub fn cnot_bloch_radius(p: &CnotParams, t: f64) -> (f64, f64) {
    let (st, ct) = p.theta0.sin_cos();
    let (sp, cp) = p.phi0.sin_cos();
    let perp = ct * ct + st * st * sp * sp;
    let along = st * st * cp * cp;
    let j = p.j_coupling;
    let c = p.a * (1.0 - p.a);
    let r2 = radius_squared(t, p.a, j);
    let r_tilde = (perp * r2 + along).sqrt();
    let decay = p.r0 * (-2.0 * p.gamma * t).exp();
    let radius = decay * r_tilde;
    let d_r_tilde = if r_tilde > 0.0 {
        -perp * c * j * (j * t).sin() / r_tilde
    } else {
        0.0
    };
    (radius, decay * (d_r_tilde - 2.0 * p.gamma * r_tilde))
}

/// Per-channel heat, entropy and flux rates from the closed forms.
///
/// For a `sigma_k` channel of rate `kappa` the entropy rate is `kappa B (1 - n_k^2)` with
/// `B = 2R artanh R` and `n` the unit Bloch direction; heat flows only through `y` and `z`.
/// The total flux is `R' artanh R`.
pub fn cnot_analytic_fluxes(p: &CnotParams, t: f64) -> Result<FluxSample> {
    let rho = cnot_analytic_state(p, t)?;
    let gamma_cx = cnot_rate_cx(t, p.a, p.j_coupling)?;
    let (radius, d_radius) = cnot_bloch_radius(p, t);
    if radius >= 1.0 - PURE_STATE_MARGIN {
        return Err(Error::SingularAtPureState { t, radius });
    }
    let bloch = qcore::bloch_cartesian(&rho)?;
    let norm = bloch.iter().map(|c| c * c).sum::<f64>().sqrt();
    let n = if norm > 0.0 {
        bloch.map(|c| c / norm)
    } else {
        [0.0; 3]
    };
    let b = 2.0 * radius * radius.atanh();
    let rates = [0.5 * gamma_cx, 0.5 * p.gamma, 0.5 * p.gamma, 0.5 * p.gamma];
    let axes = [0, 0, 1, 2];
    let heat_yz = -p.gamma * cnot_field_x(t, p.a, p.j_coupling) * bloch[0];
    let per_channel = CHANNEL_LABELS
        .iter()
        .zip(rates.iter().zip(axes))
        .map(|(label, (&kappa, axis))| {
            let entropy_rate = kappa * b * (1.0 - n[axis] * n[axis]);
            ChannelFlux {
                label: (*label).to_string(),
                heat_rate: if axis == 0 { 0.0 } else { heat_yz },
                entropy_rate,
                flux: -entropy_rate,
            }
        })
        .collect();
    let (lam_hi, lam_lo) = (0.5 * (1.0 + radius), 0.5 * (1.0 - radius));
    let entropy = [lam_hi, lam_lo]
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum();
    Ok(FluxSample {
        t,
        per_channel,
        total_flux: d_radius * radius.atanh(),
        cumulative_heat: 0.0,
        cumulative_entropy_production: 0.0,
        cumulative_reversible_entropy: 0.0,
        system_entropy: entropy,
    })
}

/// Two-qubit master equation (control (x) target) with depolarizing noise on the target.
pub fn cnot_pair_master_equation(p: &CnotParams) -> Result<MasterEquation> {
    p.validate()?;
    let half_j = C64::new(0.5 * p.j_coupling, 0.0);
    let one_c = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
    let zero_c = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    let h = (qcore::kron(&one_c, &qcore::pauli_x()) + qcore::kron(&zero_c, &qcore::identity(2)))
        * half_j;
    let id = qcore::identity(2);
    let channels = [
        ("dep,x", qcore::pauli_x()),
        ("dep,y", qcore::pauli_y()),
        ("dep,z", qcore::pauli_z()),
    ]
    .into_iter()
    .map(|(label, s)| Channel::constant(label, qcore::kron(&id, &s), 0.5 * p.gamma, 0.0))
    .collect::<Result<Vec<_>>>()?;
    MasterEquation::with_constant_hamiltonian(HermitianOp::new(h)?, channels)
}

/// Target states on `grid` from integrating the two-qubit equation and tracing out the control.
pub fn cnot_full_pair_trajectory(
    p: &CnotParams,
    rho_c: &QState,
    rho_t: &QState,
    grid: &[f64],
    max_step: f64,
) -> Result<Vec<QState>> {
    for rho in [rho_c, rho_t] {
        if rho.dim() != 2 {
            return Err(Error::DimMismatch {
                expected: 2,
                found: rho.dim(),
            });
        }
    }
    let me = cnot_pair_master_equation(p)?;
    let traj = lindblad::evolve_on_grid(&me, &rho_c.tensor(rho_t), grid, max_step)?;
    traj.states
        .iter()
        .map(|s| qcore::partial_trace(s, (2, 2), Keep::B))
        .collect()
}

/// Target state at `t` from the two-qubit oracle, starting at time 0.
pub fn cnot_full_pair_oracle(
    p: &CnotParams,
    rho_c: &QState,
    rho_t: &QState,
    t: f64,
) -> Result<QState> {
    let grid = if t > 0.0 { vec![0.0, t] } else { vec![0.0] };
    let states = cnot_full_pair_trajectory(p, rho_c, rho_t, &grid, lindblad::DEFAULT_STEP)?;
    Ok(states.into_iter().last().expect("non-empty grid"))
}
