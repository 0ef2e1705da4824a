//! Heat, entropy and information-flux functionals of Lindblad dynamics.
//!
//! Per channel `k` with rate `gamma_k`, superoperator `D_k` and inverse temperature `beta_k`:
//!
//! ```text
//! dQ_k/dt = gamma_k Tr(D_k[rho] H)
//! dS_k/dt = -gamma_k Tr(D_k[rho] ln rho)
//! F_k     = gamma_k Tr(D_k[rho] (ln rho + beta_k H)) = -(dS_k/dt - beta_k dQ_k/dt)
//! ```
//!
//! The total flux is the channel sum and equals minus the entropy production rate.

use crate::error::{Error, Result};
use crate::lindblad::{self, Channel, MasterEquation, DEFAULT_STEP};
use crate::qcore::{self, HermitianOp, Keep, QState, LOG_CLAMP};

/// Flux samples before this time are skipped: pure initial states make `ln rho` diverge.
pub const DEFAULT_T_MIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFlux {
    pub label: String,
    pub heat_rate: f64,
    pub entropy_rate: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxSample {
    pub t: f64,
    pub per_channel: Vec<ChannelFlux>,
    pub total_flux: f64,
    /// Trapezoid integral of the summed heat rates since the first sample.
    pub cumulative_heat: f64,
    /// Trapezoid integral of the entropy production rate since the first sample.
    pub cumulative_entropy_production: f64,
    /// Trapezoid integral of `sum_k beta_k dQ_k/dt` since the first sample.
    pub cumulative_reversible_entropy: f64,
    /// `S(rho(t))`.
    pub system_entropy: f64,
}

impl FluxSample {
    pub fn channel(&self, label: &str) -> Option<&ChannelFlux> {
        self.per_channel.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergeticsReport {
    pub delta_i_neq: f64,
    pub delta_s_irr: f64,
    pub irr_work_over_kt: f64,
    /// `delta_i_neq + delta_s_irr - irr_work_over_kt`.
    pub residual: f64,
    pub delta_s_sys: f64,
    pub heat: f64,
    pub work: f64,
}

/// Both sides of the bipartite entropy-production identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteEntropyProduction {
    /// `Delta S_sys - beta Q`.
    pub delta_s_irr: f64,
    pub mutual_info: f64,
    pub env_neq_t: f64,
    pub env_neq_0: f64,
}

impl BipartiteEntropyProduction {
    pub fn correlation_side(&self) -> f64 {
        self.mutual_info + self.env_neq_t - self.env_neq_0
    }

    pub fn residual(&self) -> f64 {
        self.delta_s_irr - self.correlation_side()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimMismatch { expected, found });
    }
    Ok(())
}

/// `I_neq = S(rho || exp(-beta H)/Z)`.
pub fn neq_information(rho: &QState, h: &HermitianOp, beta: f64) -> Result<f64> {
    check_dim(rho.dim(), h.dim())?;
    let eq = qcore::gibbs_state(h, beta)?;
    qcore::relative_entropy(rho, &eq.state)
}

/// Maximal extractable work `(1/beta) S(rho || rho_eq) = F(rho) - F(rho_eq)`.
pub fn extractable_work(rho: &QState, h: &HermitianOp, beta: f64) -> Result<f64> {
    if beta == 0.0 {
        return Err(Error::InfiniteTemperature);
    }
    check_dim(rho.dim(), h.dim())?;
    let eq = qcore::gibbs_state(h, beta)?;
    let work = qcore::relative_entropy(rho, &eq.state)? / beta;
    let free_energy_gap =
        rho.expectation(h)? - qcore::von_neumann_entropy(rho) / beta + eq.log_partition / beta;
    let gap = (work - free_energy_gap).abs();
    if gap > 1e-10 * (1.0 + work.abs()) {
        log::warn!("free-energy and relative-entropy routes differ by {gap:.3e}");
    }
    Ok(work)
}

fn channel_rates(ch: &Channel, t: f64, rho: &QState) -> Result<(f64, qcore::CMatrix)> {
    let d = lindblad::dissipator(ch, rho)?;
    Ok((ch.rate_at(t), d))
}

/// `gamma(t) Tr(D[rho] H)`.
pub fn heat_rate_channel(ch: &Channel, t: f64, rho: &QState, h: &HermitianOp) -> Result<f64> {
    check_dim(rho.dim(), h.dim())?;
    let (rate, d) = channel_rates(ch, t, rho)?;
    Ok(rate * qcore::trace_product(&d, h.matrix()))
}

/// `-gamma(t) Tr(D[rho] ln rho)` with the clamped logarithm.
pub fn entropy_rate_channel(ch: &Channel, t: f64, rho: &QState) -> Result<f64> {
    let log_rho = qcore::matrix_log_clamped(rho, LOG_CLAMP);
    entropy_rate_with_log(ch, t, rho, &log_rho)
}

fn entropy_rate_with_log(ch: &Channel, t: f64, rho: &QState, log_rho: &HermitianOp) -> Result<f64> {
    let (rate, d) = channel_rates(ch, t, rho)?;
    Ok(-rate * qcore::trace_product(&d, log_rho.matrix()))
}

fn channel_flux_with_log(
    ch: &Channel,
    t: f64,
    rho: &QState,
    h: &HermitianOp,
    log_rho: &HermitianOp,
) -> Result<ChannelFlux> {
    check_dim(rho.dim(), h.dim())?;
    let entropy_rate = entropy_rate_with_log(ch, t, rho, log_rho)?;
    let heat_rate = heat_rate_channel(ch, t, rho, h)?;
    let beta = ch.beta();
    let flux = if beta == 0.0 {
        -entropy_rate
    } else {
        -(entropy_rate - beta * heat_rate)
    };
    Ok(ChannelFlux {
        label: ch.label.clone(),
        heat_rate,
        entropy_rate,
        flux,
    })
}

/// Information flux through one channel; with `beta = 0` this is exactly `-dS/dt`.
pub fn flux_channel(ch: &Channel, t: f64, rho: &QState, h: &HermitianOp) -> Result<f64> {
    let log_rho = qcore::matrix_log_clamped(rho, LOG_CLAMP);
    Ok(channel_flux_with_log(ch, t, rho, h, &log_rho)?.flux)
}

/// Per-channel heat, entropy and flux rates at time `t`, in channel order.
pub fn channel_fluxes(me: &MasterEquation, rho: &QState, t: f64) -> Result<Vec<ChannelFlux>> {
    check_dim(me.dim(), rho.dim())?;
    let h = me.hamiltonian_at(t);
    let log_rho = qcore::matrix_log_clamped(rho, LOG_CLAMP);
    me.channels()
        .iter()
        .map(|ch| channel_flux_with_log(ch, t, rho, &h, &log_rho))
        .collect()
}

/// Channel sum of the fluxes, accumulated in channel order.
pub fn total_flux(me: &MasterEquation, rho: &QState, t: f64) -> Result<f64> {
    Ok(channel_fluxes(me, rho, t)?.iter().map(|c| c.flux).sum())
}

/// `dS_irr/dt = dS_sys/dt - sum_k beta_k dQ_k/dt`, the negative total flux.
pub fn entropy_production_rate(me: &MasterEquation, rho: &QState, t: f64) -> Result<f64> {
    Ok(-total_flux(me, rho, t)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxOptions {
    /// Samples before this time are dropped from the output.
    pub t_min: f64,
    pub max_step: f64,
}

impl Default for FluxOptions {
    fn default() -> Self {
        Self {
            t_min: DEFAULT_T_MIN,
            max_step: DEFAULT_STEP,
        }
    }
}

/// Flux samples along the trajectory that starts from `rho0` at `t0`.
///
/// `sample_times` must be increasing and not earlier than `t0`. Cumulative integrals start
/// at zero on the first emitted sample.
pub fn flux_trajectory(
    me: &MasterEquation,
    rho0: &QState,
    t0: f64,
    sample_times: &[f64],
    options: FluxOptions,
) -> Result<Vec<FluxSample>> {
    if sample_times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidArgument(
            "sample times precede the initial time".into(),
        ));
    }
    let prepended = sample_times.first() != Some(&t0);
    let mut grid = Vec::with_capacity(sample_times.len() + 1);
    if prepended {
        grid.push(t0);
    }
    grid.extend_from_slice(sample_times);
    let traj = lindblad::evolve_on_grid(me, rho0, &grid, options.max_step)?;

    let skipped = traj.times.iter().filter(|&&t| t < options.t_min).count();
    if skipped > 0 {
        log::debug!(
            "flux evaluation skips {skipped} samples before t_min = {}",
            options.t_min
        );
    }

    let mut samples: Vec<FluxSample> = Vec::with_capacity(sample_times.len());
    let first = usize::from(prepended);
    for (&t, rho) in traj.times.iter().zip(&traj.states).skip(first) {
        if t < options.t_min {
            continue;
        }
        let per_channel = channel_fluxes(me, rho, t)?;
        let total_flux: f64 = per_channel.iter().map(|c| c.flux).sum();
        let heat_rate: f64 = per_channel.iter().map(|c| c.heat_rate).sum();
        let reversible_rate: f64 = me
            .channels()
            .iter()
            .zip(&per_channel)
            .map(|(ch, c)| ch.beta() * c.heat_rate)
            .sum();
        let system_entropy = qcore::von_neumann_entropy(rho);
        let (cumulative_heat, cumulative_entropy_production, cumulative_reversible_entropy) =
            match samples.last() {
                None => (0.0, 0.0, 0.0),
                Some(prev) => {
                    let dt = t - prev.t;
                    let prev_heat: f64 = prev.per_channel.iter().map(|c| c.heat_rate).sum();
                    let prev_rev: f64 = me
                        .channels()
                        .iter()
                        .zip(&prev.per_channel)
                        .map(|(ch, c)| ch.beta() * c.heat_rate)
                        .sum();
                    (
                        prev.cumulative_heat + 0.5 * dt * (prev_heat + heat_rate),
                        prev.cumulative_entropy_production
                            - 0.5 * dt * (prev.total_flux + total_flux),
                        prev.cumulative_reversible_entropy
                            + 0.5 * dt * (prev_rev + reversible_rate),
                    )
                }
            };
        samples.push(FluxSample {
            t,
            per_channel,
            total_flux,
            cumulative_heat,
            cumulative_entropy_production,
            cumulative_reversible_entropy,
            system_entropy,
        });
    }
    Ok(samples)
}

/// Worst `|Delta S_sys - (Delta S_rev + Delta S_irr)|` over a flux trajectory, where
/// `Delta S_sys` comes from the states and the right side from integrated rates.
pub fn decomposition_residual(samples: &[FluxSample]) -> f64 {
    let Some(first) = samples.first() else {
        return 0.0;
    };
    samples
        .iter()
        .map(|s| {
            let delta_s = s.system_entropy - first.system_entropy;
            (delta_s - s.cumulative_reversible_entropy - s.cumulative_entropy_production).abs()
        })
        .fold(0.0, f64::max)
}

/// Information balance over `[t0, t1]` using the single bath temperature of `me`.
pub fn energetics_report(
    me: &MasterEquation,
    rho0: &QState,
    t0: f64,
    t1: f64,
) -> Result<EnergeticsReport> {
    let beta = me.common_beta()?.ok_or_else(|| {
        Error::InvalidArgument(
            "no channels: use energetics_report_at_beta to name a temperature".into(),
        )
    })?;
    energetics_report_at_beta(me, rho0, t0, t1, beta, DEFAULT_STEP)
}

/// Information balance over `[t0, t1]` against instantaneous equilibria at `beta`.
///
/// Heat `int Tr(H d rho)` and work `int Tr(rho dH)` are integrated with the trapezoid
/// rule on the RK4 grid.
pub fn energetics_report_at_beta(
    me: &MasterEquation,
    rho0: &QState,
    t0: f64,
    t1: f64,
    beta: f64,
    step: f64,
) -> Result<EnergeticsReport> {
    if let Some(common) = me.common_beta()? {
        if (common - beta).abs() > 1e-12 * (1.0 + beta.abs()) {
            return Err(Error::MixedTemperatures {
                first: common,
                second: beta,
            });
        }
    }
    let traj = lindblad::evolve(me, rho0, t0, t1, step)?;
    let rates: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, rho)| {
            let h = me.hamiltonian_matrix(t);
            let heat_rate = qcore::trace_product(&h, &me.generator(t, rho.matrix()));
            let work_rate = qcore::trace_product(rho.matrix(), &me.hamiltonian_derivative(t));
            (heat_rate, work_rate)
        })
        .collect();
    let mut heat = 0.0;
    let mut work = 0.0;
    for (k, w) in traj.times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        heat += 0.5 * dt * (rates[k].0 + rates[k + 1].0);
        work += 0.5 * dt * (rates[k].1 + rates[k + 1].1);
    }
    let (_, rho_t) = traj.last().expect("trajectory has at least two points");
    let h0 = me.hamiltonian_at(t0);
    let h1 = me.hamiltonian_at(t1);
    let z0 = qcore::gibbs_state(&h0, beta)?.log_partition;
    let z1 = qcore::gibbs_state(&h1, beta)?.log_partition;
    let delta_i_neq = neq_information(rho_t, &h1, beta)? - neq_information(rho0, &h0, beta)?;
    let delta_s_sys = qcore::von_neumann_entropy(rho_t) - qcore::von_neumann_entropy(rho0);
    let delta_s_irr = delta_s_sys - beta * heat;
    let irr_work_over_kt = beta * work + z1 - z0;
    Ok(EnergeticsReport {
        delta_i_neq,
        delta_s_irr,
        irr_work_over_kt,
        residual: delta_i_neq + delta_s_irr - irr_work_over_kt,
        delta_s_sys,
        heat,
        work,
    })
}

/// Entropy production of a system `A` coupled to an environment `B` (ordered `A (x) B`),
/// evaluated directly from joint states.
///
/// Heat into the system is `Q = -Tr[H_env (rho_env(t) - rho_env(0))]`.
pub fn bipartite_entropy_production(
    rho_tot_t: &QState,
    rho_tot_0: &QState,
    dims: (usize, usize),
    h_env: &HermitianOp,
    beta: f64,
) -> Result<BipartiteEntropyProduction> {
    check_dim(rho_tot_0.dim(), rho_tot_t.dim())?;
    check_dim(dims.1, h_env.dim())?;
    let initial_mi = qcore::mutual_information(rho_tot_0, dims)?;
    if initial_mi > 1e-8 {
        return Err(Error::NotProductInitial {
            mutual_information: initial_mi,
        });
    }
    let sys_t = qcore::partial_trace(rho_tot_t, dims, Keep::A)?;
    let sys_0 = qcore::partial_trace(rho_tot_0, dims, Keep::A)?;
    let env_t = qcore::partial_trace(rho_tot_t, dims, Keep::B)?;
    let env_0 = qcore::partial_trace(rho_tot_0, dims, Keep::B)?;
    let heat = -(env_t.expectation(h_env)? - env_0.expectation(h_env)?);
    let delta_s_sys = qcore::von_neumann_entropy(&sys_t) - qcore::von_neumann_entropy(&sys_0);
    Ok(BipartiteEntropyProduction {
        delta_s_irr: delta_s_sys - beta * heat,
        mutual_info: qcore::mutual_information(rho_tot_t, dims)?,
        env_neq_t: neq_information(&env_t, h_env, beta)?,
        env_neq_0: neq_information(&env_0, h_env, beta)?,
    })
}
