//! Trace-distance dynamics, the BLP non-Markovianity measure and the sign relation
//! between the total information flux and the trace-distance rate.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad::{self, MasterEquation, ProcessMap};
use crate::models::cnot::{self, CnotParams};
use crate::qcore::{self, CMatrix, QState};
use crate::thermoflux::{self, FluxOptions};

/// Default horizon of BLP grids in units of `1 / gamma`.
pub const DEFAULT_HORIZON_GAMMA: f64 = 12.0;
pub const DEFAULT_PAIR_GRID: (usize, usize) = (12, 24);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSample {
    pub t: f64,
    pub d: f64,
    pub d_dot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlpResult {
    /// Sum of the positive increments of `D` on the grid.
    pub value: f64,
    pub pair: (QState, QState),
    /// `(t, dD/dt)`.
    pub sigma_series: Vec<(f64, f64)>,
}

fn is_uniform(grid: &[f64]) -> bool {
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    grid.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300))
}

/// Derivative of `values` sampled on `grid`.
///
/// Uniform grids use five-point central differences in the interior, three-point central
/// differences next to the ends and one-sided second-order differences at the ends.
/// Non-uniform grids use three-point second-order formulas throughout.
pub fn grid_derivative(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = grid.len();
    assert_eq!(n, values.len());
    match n {
        0 => return Vec::new(),
        1 => return vec![0.0],
        2 => {
            let s = (values[1] - values[0]) / (grid[1] - grid[0]);
            return vec![s, s];
        }
        _ => {}
    }
    let mut out = vec![0.0; n];
    if is_uniform(grid) {
        let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
        out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
        for k in 1..n - 1 {
            out[k] = if k >= 2 && k + 2 < n {
                (values[k - 2] - 8.0 * values[k - 1] + 8.0 * values[k + 1] - values[k + 2])
                    / (12.0 * h)
            } else {
                (values[k + 1] - values[k - 1]) / (2.0 * h)
            };
        }
        return out;
    }
    // Three-point Lagrange derivative through (k0, k0 + 1, k0 + 2) evaluated at index k.
    let lagrange = |k0: usize, k: usize| {
        let (x0, x1, x2) = (grid[k0], grid[k0 + 1], grid[k0 + 2]);
        let x = grid[k];
        values[k0] * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + values[k0 + 1] * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + values[k0 + 2] * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    out[0] = lagrange(0, 0);
    out[n - 1] = lagrange(n - 3, n - 1);
    for (k, slot) in out.iter_mut().enumerate().take(n - 1).skip(1) {
        *slot = lagrange(k - 1, k);
    }
    out
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "distance grids need at least two points".into(),
        ));
    }
    Ok(())
}

fn half_trace_norms(maps: &[ProcessMap], difference: &CMatrix) -> Vec<f64> {
    maps.iter()
        .map(|m| 0.5 * qcore::trace_norm_hermitian(&qcore::hermitize(&m.apply(difference))))
        .collect()
}

fn series_from(grid: &[f64], d: Vec<f64>) -> Vec<DistanceSample> {
    let d_dot = grid_derivative(grid, &d);
    grid.iter()
        .zip(d)
        .zip(d_dot)
        .map(|((&t, d), d_dot)| DistanceSample { t, d, d_dot })
        .collect()
}

/// `D(t) = ||rho1(t) - rho2(t)||_1 / 2` for a pair given at `grid[0]`, with `dD/dt`.
pub fn distance_trajectory(
    me: &MasterEquation,
    rho1: &QState,
    rho2: &QState,
    grid: &[f64],
) -> Result<Vec<DistanceSample>> {
    check_grid(grid)?;
    for rho in [rho1, rho2] {
        if rho.dim() != me.dim() {
            return Err(Error::DimMismatch {
                expected: me.dim(),
                found: rho.dim(),
            });
        }
    }
    let maps = lindblad::propagator(me, grid)?;
    let difference = rho1.matrix() - rho2.matrix();
    Ok(series_from(grid, half_trace_norms(&maps, &difference)))
}

fn positive_increments(d: &[f64]) -> f64 {
    d.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

fn warn_short_horizon(d: &[f64]) {
    let (first, last) = (d[0], d[d.len() - 1]);
    if last > 0.01 * first {
        log::warn!("BLP grid ends before D decays below 1% of D(0) ({last:.3e} vs {first:.3e})");
    }
}

/// BLP measure of one state pair.
pub fn blp_measure(
    me: &MasterEquation,
    rho1: &QState,
    rho2: &QState,
    grid: &[f64],
) -> Result<BlpResult> {
    let series = distance_trajectory(me, rho1, rho2, grid)?;
    let d: Vec<f64> = series.iter().map(|s| s.d).collect();
    warn_short_horizon(&d);
    Ok(BlpResult {
        value: positive_increments(&d),
        pair: (rho1.clone(), rho2.clone()),
        sigma_series: series.iter().map(|s| (s.t, s.d_dot)).collect(),
    })
}

/// Pure-state Bloch directions `(theta_i, phi_k)` with `theta` spanning `[0, pi/2]`, the
/// hemisphere that indexes antipodal pairs.
pub fn pair_directions(n_theta: usize, n_phi: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = if n_theta > 1 {
            0.5 * PI * i as f64 / (n_theta - 1) as f64
        } else {
            0.0
        };
        for k in 0..n_phi {
            let phi = 2.0 * PI * k as f64 / n_phi as f64;
            out.push(qcore::BlochVector::new(1.0, theta, phi).cartesian());
        }
    }
    out
}

/// Largest BLP value over antipodal pure-state pairs on a `(n_theta, n_phi)` grid.
pub fn blp_optimize(
    me: &MasterEquation,
    resolution: (usize, usize),
    grid: &[f64],
) -> Result<BlpResult> {
    check_grid(grid)?;
    if me.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: me.dim(),
        });
    }
    if resolution.0 == 0 || resolution.1 == 0 {
        return Err(Error::InvalidArgument(
            "pair grid resolution must be positive".into(),
        ));
    }
    let maps = lindblad::propagator(me, grid)?;
    let directions = pair_directions(resolution.0, resolution.1);
    let values: Vec<f64> = directions
        .par_iter()
        .map(|&n| positive_increments(&half_trace_norms(&maps, &qcore::qubit_operator(0.0, n))))
        .collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v > values[best] { k } else { best });
    let n = directions[best];
    let plus = QState::new(qcore::qubit_operator(0.5, n.map(|c| 0.5 * c)))?;
    let minus = QState::new(qcore::qubit_operator(0.5, n.map(|c| -0.5 * c)))?;
    let d = half_trace_norms(&maps, &qcore::qubit_operator(0.0, n));
    warn_short_horizon(&d);
    let series = series_from(grid, d);
    Ok(BlpResult {
        value: values[best],
        pair: (plus, minus),
        sigma_series: series.iter().map(|s| (s.t, s.d_dot)).collect(),
    })
}

/// `n + 1` evenly spaced times on `[0, DEFAULT_HORIZON_GAMMA / gamma]`.
pub fn default_blp_grid(gamma: f64, n: usize) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument(
            "BLP horizon needs gamma > 0 and n > 0".into(),
        ));
    }
    let horizon = DEFAULT_HORIZON_GAMMA / gamma;
    Ok((0..=n).map(|k| horizon * k as f64 / n as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignSample {
    pub t: f64,
    pub flux: f64,
    pub d: f64,
    pub d_dot: f64,
    pub eligible: bool,
}

impl SignSample {
    pub fn agrees(&self) -> bool {
        self.flux.signum() == self.d_dot.signum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignCheckReport {
    pub samples: Vec<SignSample>,
}

impl SignCheckReport {
    pub fn eligible(&self) -> usize {
        self.samples.iter().filter(|s| s.eligible).count()
    }

    pub fn violations(&self) -> Vec<&SignSample> {
        self.samples
            .iter()
            .filter(|s| s.eligible && !s.agrees())
            .collect()
    }

    /// Share of eligible samples whose signs agree (1 when nothing is eligible).
    pub fn agreement(&self) -> f64 {
        let eligible = self.eligible();
        if eligible == 0 {
            return 1.0;
        }
        1.0 - self.violations().len() as f64 / eligible as f64
    }
}

pub const SIGN_FLUX_FLOOR: f64 = 1e-8;
pub const SIGN_DISTANCE_MARGIN: f64 = 1e-6;

/// Compares `sign(F_total)` for the target starting in the state of `p` with `sign(dD/dt)`
/// for the `+z, -z` pair, both integrated from time 0 and sampled on `grid`.
///
/// Samples are eligible when `|F| > 1e-8`, `D` lies in `(1e-6, 1 - 1e-6)` and the point is
/// not one of the two outermost samples at either end of the grid.
pub fn flux_distance_sign_check(p: &CnotParams, grid: &[f64]) -> Result<SignCheckReport> {
    check_grid(grid)?;
    if grid[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "sign-check grid must start at t >= 0".into(),
        ));
    }
    let me = cnot::cnot_master_equation(p)?;
    let rho0 = p.initial_state()?;
    let fluxes = thermoflux::flux_trajectory(
        &me,
        &rho0,
        0.0,
        grid,
        FluxOptions {
            t_min: 0.0,
            ..Default::default()
        },
    )?;

    let up = QState::basis(2, 0);
    let down = QState::basis(2, 1);
    let difference = if grid[0] > 0.0 {
        let lead = lindblad::propagator(&me, &[0.0, grid[0]])?;
        lead[1].apply(&(up.matrix() - down.matrix()))
    } else {
        up.matrix() - down.matrix()
    };
    let maps = lindblad::propagator(&me, grid)?;
    let distances = series_from(grid, half_trace_norms(&maps, &difference));

    let n = grid.len();
    let samples = fluxes
        .iter()
        .zip(&distances)
        .enumerate()
        .map(|(k, (f, d))| SignSample {
            t: f.t,
            flux: f.total_flux,
            d: d.d,
            d_dot: d.d_dot,
            eligible: k >= 2
                && k + 2 < n
                && f.total_flux.abs() > SIGN_FLUX_FLOOR
                && d.d > SIGN_DISTANCE_MARGIN
                && d.d < 1.0 - SIGN_DISTANCE_MARGIN,
        })
        .collect();
    Ok(SignCheckReport { samples })
}
