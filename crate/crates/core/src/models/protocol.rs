//! Two-level system in thermal contact with a resonant virtual qubit of a thermal environment.
//!
//! The environment is a qutrit: virtual levels `|1>` (index 0, energy `e_a - e_b`) and `|0>`
//! (index 1, energy 0) plus one redundant level (index 2) whose energy is chosen so that the
//! whole environment is a Gibbs state at `beta`. The system basis is `|a>` (index 0),
//! `|b>` (index 1); joint states are ordered system (x) environment.
//!
//! A single contact step of duration `dt` uses the swap coupling
//! `g (|b><a| (x) |1><0| + h.c.)` with `g = sqrt(gamma / dt)`, so that the transferred
//! population `(p_a q0 - p_b q1) sin^2(sqrt(gamma dt))` is first order in `gamma dt`.

use crate::error::{Error, Result};
use crate::qcore::{self, CMatrix, HermitianOp, Keep, QState, C64};
use crate::thermoflux::{self, BipartiteEntropyProduction};

/// Redundant populations below this are dropped and the environment becomes a qubit.
const REDUNDANT_CUTOFF: f64 = 1e-15;
const RATIO_TOL: f64 = 1e-10;
/// `|dI_mut - dS_irr|` values below this count as numerical noise in the scaling study.
pub const SCALING_NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub e_a: f64,
    pub e_b: f64,
    pub p_a: f64,
    pub beta: f64,
    pub q1_frac: f64,
    pub q0_frac: f64,
    pub gamma: f64,
    pub dt: f64,
}

impl Default for ProtocolParams {
    /// `p_a = 0.8`, `q0 = 0.3`, `beta (e_a - e_b) = 1`, `gamma = 1`, `dt = 0.01`.
    fn default() -> Self {
        Self::with_boltzmann_q1(1.0, 0.0, 0.8, 1.0, 0.3, 1.0, 0.01)
    }
}

impl ProtocolParams {
    /// Parameters with `q1_frac = q0_frac exp(-beta (e_a - e_b))`.
    pub fn with_boltzmann_q1(
        e_a: f64,
        e_b: f64,
        p_a: f64,
        beta: f64,
        q0_frac: f64,
        gamma: f64,
        dt: f64,
    ) -> Self {
        Self {
            e_a,
            e_b,
            p_a,
            beta,
            q1_frac: q0_frac * (-beta * (e_a - e_b)).exp(),
            q0_frac,
            gamma,
            dt,
        }
    }

    pub fn p_b(&self) -> f64 {
        1.0 - self.p_a
    }

    pub fn splitting(&self) -> f64 {
        self.e_a - self.e_b
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.e_a,
            self.e_b,
            self.p_a,
            self.beta,
            self.q1_frac,
            self.q0_frac,
            self.gamma,
            self.dt,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "protocol parameters must be finite".into(),
            ));
        }
        if self.e_a <= self.e_b {
            return Err(Error::InvalidArgument(format!(
                "need e_a > e_b, got {} <= {}",
                self.e_a, self.e_b
            )));
        }
        if self.beta <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if self.gamma < 0.0 || self.dt <= 0.0 {
            return Err(Error::InvalidArgument("need gamma >= 0 and dt > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.p_a) {
            return Err(Error::InvalidPopulations(format!(
                "p_a = {} outside [0, 1]",
                self.p_a
            )));
        }
        if !(self.q0_frac > 0.0 && self.q0_frac <= 1.0 && (0.0..=1.0).contains(&self.q1_frac)) {
            return Err(Error::InvalidPopulations(format!(
                "virtual-qubit populations ({}, {}) need q0 in (0, 1] and q1 in [0, 1]",
                self.q1_frac, self.q0_frac
            )));
        }
        if self.q1_frac + self.q0_frac > 1.0 + 1e-12 {
            return Err(Error::InvalidPopulations(format!(
                "q1 + q0 = {} exceeds 1",
                self.q1_frac + self.q0_frac
            )));
        }
        let expected = self.q0_frac * (-self.beta * self.splitting()).exp();
        if (self.q1_frac - expected).abs() > RATIO_TOL {
            return Err(Error::InvalidPopulations(format!(
                "q1 = {} violates the Boltzmann ratio (expected {expected:.12})",
                self.q1_frac
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolReport {
    /// Heat absorbed by the system.
    pub d_q: f64,
    pub d_s_sys: f64,
    pub d_s_env: f64,
    pub d_i_mut: f64,
    pub d_s_irr: f64,
    /// Population transfer rate out of `|a>`.
    pub p_z: f64,
}

/// Joint system-environment states before and after a unitary contact.
#[derive(Debug, Clone)]
pub struct ProtocolEvolution {
    pub rho_tot_0: QState,
    pub rho_tot_t: QState,
    pub h_env: HermitianOp,
    /// `(2, environment dimension)`.
    pub dims: (usize, usize),
}

impl ProtocolEvolution {
    pub fn bipartite(&self, beta: f64) -> Result<BipartiteEntropyProduction> {
        thermoflux::bipartite_entropy_production(
            &self.rho_tot_t,
            &self.rho_tot_0,
            self.dims,
            &self.h_env,
            beta,
        )
    }
}

struct Setup {
    rho_tot_0: QState,
    h_total: CMatrix,
    h_int: CMatrix,
    h_env: HermitianOp,
    dims: (usize, usize),
}

fn setup(p: &ProtocolParams) -> Result<Setup> {
    p.validate()?;
    let redundant = 1.0 - p.q1_frac - p.q0_frac;
    let (env_pops, env_energies) = if redundant > REDUNDANT_CUTOFF {
        let e_red = -(redundant / p.q0_frac).ln() / p.beta;
        (
            vec![p.q1_frac, p.q0_frac, redundant],
            vec![p.splitting(), 0.0, e_red],
        )
    } else {
        let z = p.q1_frac + p.q0_frac;
        (vec![p.q1_frac / z, p.q0_frac / z], vec![p.splitting(), 0.0])
    };
    let d_env = env_pops.len();
    let rho_sys = QState::diagonal(&[p.p_a, p.p_b()])?;
    let rho_env = QState::diagonal(&env_pops)?;
    let h_sys = HermitianOp::diagonal(&[p.e_a, p.e_b]);
    let h_env = HermitianOp::diagonal(&env_energies);
    let h_total = qcore::kron(h_sys.matrix(), &qcore::identity(d_env))
        + qcore::kron(&qcore::identity(2), h_env.matrix());
    let hop = qcore::kron(&qcore::ket_bra(2, 1, 0), &qcore::ket_bra(d_env, 0, 1));
    let h_int = &hop + hop.adjoint();
    Ok(Setup {
        rho_tot_0: rho_sys.tensor(&rho_env),
        h_total,
        h_int,
        h_env,
        dims: (2, d_env),
    })
}

fn evolve_joint(s: &Setup, coupling: f64, t: f64) -> Result<QState> {
    let h = &s.h_total + &s.h_int * C64::new(coupling, 0.0);
    s.rho_tot_0.conjugate_by(&qcore::unitary_propagator(&h, t))
}

/// Joint evolution for time `t` under the bare coupling strength `gamma`.
pub fn protocol_evolution(p: &ProtocolParams, t: f64) -> Result<ProtocolEvolution> {
    let s = setup(p)?;
    let rho_tot_t = evolve_joint(&s, p.gamma, t)?;
    Ok(ProtocolEvolution {
        rho_tot_0: s.rho_tot_0,
        rho_tot_t,
        h_env: s.h_env,
        dims: s.dims,
    })
}

/// One contact step of duration `dt`, all entries from exact reduced states.
pub fn protocol_exact_step(p: &ProtocolParams) -> Result<ProtocolReport> {
    let s = setup(p)?;
    let coupling = (p.gamma / p.dt).sqrt();
    let rho_t = evolve_joint(&s, coupling, p.dt)?;
    let sys_0 = qcore::partial_trace(&s.rho_tot_0, s.dims, Keep::A)?;
    let sys_t = qcore::partial_trace(&rho_t, s.dims, Keep::A)?;
    let env_0 = qcore::partial_trace(&s.rho_tot_0, s.dims, Keep::B)?;
    let env_t = qcore::partial_trace(&rho_t, s.dims, Keep::B)?;
    let d_q = -(env_t.expectation(&s.h_env)? - env_0.expectation(&s.h_env)?);
    let d_s_sys = qcore::von_neumann_entropy(&sys_t) - qcore::von_neumann_entropy(&sys_0);
    let d_s_env = qcore::von_neumann_entropy(&env_t) - qcore::von_neumann_entropy(&env_0);
    let transferred = sys_0.matrix()[(0, 0)].re - sys_t.matrix()[(0, 0)].re;
    Ok(ProtocolReport {
        d_q,
        d_s_sys,
        d_s_env,
        d_i_mut: qcore::mutual_information(&rho_t, s.dims)?,
        d_s_irr: d_s_sys - p.beta * d_q,
        p_z: transferred / p.dt,
    })
}

/// Closed-form first-order step. `d_i_mut` is reported equal to `d_s_irr`.
pub fn protocol_first_order(p: &ProtocolParams) -> Result<ProtocolReport> {
    p.validate()?;
    if p.p_a == 0.0 || p.p_a == 1.0 {
        return Err(Error::DegeneratePopulation { p_a: p.p_a });
    }
    let p_z = (p.p_a * p.q0_frac - p.p_b() * p.q1_frac) * p.gamma;
    let flow = p_z * p.dt;
    let d_q = -p.splitting() * flow;
    let d_s_sys = (p.p_a / p.p_b()).ln() * flow;
    let d_s_env = -(p.q1_frac / p.q0_frac).ln() * flow;
    let d_s_irr = d_s_sys - p.beta * d_q;
    Ok(ProtocolReport {
        d_q,
        d_s_sys,
        d_s_env,
        d_i_mut: d_s_irr,
        d_s_irr,
        p_z,
    })
}

/// Least-squares slope of `ln|dI_mut - dS_irr|` against `ln dt` over exact steps.
pub fn protocol_scaling_study(p: &ProtocolParams, dts: &[f64]) -> Result<f64> {
    if dts.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 steps, got {}",
            dts.len()
        )));
    }
    if dts.iter().any(|&dt| !(dt > 0.0 && dt.is_finite())) {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let (lo, hi) = dts.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    if hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "steps span {:.2} decades, need 2",
            (hi / lo).log10()
        )));
    }
    let mut xs = Vec::with_capacity(dts.len());
    let mut ys = Vec::with_capacity(dts.len());
    for &dt in dts {
        let r = protocol_exact_step(&ProtocolParams { dt, ..*p })?;
        let diff = (r.d_i_mut - r.d_s_irr).abs();
        if diff > SCALING_NOISE_FLOOR {
            xs.push(dt.ln());
            ys.push(diff.ln());
        }
    }
    if xs.len() < dts.len() {
        return Err(Error::NoSignal {
            floor: SCALING_NOISE_FLOOR,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
