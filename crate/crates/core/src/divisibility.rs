//! Choi matrices, intermediate maps, positivity tests for qubit maps and the PD_k
//! (proper k-divisibility) classification of qubit processes.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad::{self, MasterEquation, ProcessMap, RateFn};
use crate::models::cnot::{self, CnotParams};
use crate::qcore::{self, CMatrix, C64};

pub const DEFAULT_EIGEN_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_CONDITION: f64 = 1e8;
pub const DEFAULT_P_SAMPLES: usize = 2048;
/// `|E(I) - I|` below this selects the exact unital positivity test.
const UNITAL_TOL: f64 = 1e-9;

/// `sum_ij |i><j| (x) E(|i><j|)`, ancilla factor first (unnormalized).
pub fn choi(map: &ProcessMap) -> CMatrix {
    let d = map.dim();
    let mut out = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let image = map.apply(&qcore::ket_bra(d, i, j));
            out.view_mut((i * d, j * d), (d, d)).copy_from(&image);
        }
    }
    out
}

/// Ratio of extreme singular values.
pub fn condition_number(map: &ProcessMap) -> f64 {
    let sv = map.matrix().clone().singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `late o early^{-1}` with the default condition cutoff.
pub fn intermediate_map(late: &ProcessMap, early: &ProcessMap) -> Result<ProcessMap> {
    intermediate_map_with_cutoff(late, early, DEFAULT_MAX_CONDITION)
}

pub fn intermediate_map_with_cutoff(
    late: &ProcessMap,
    early: &ProcessMap,
    max_condition: f64,
) -> Result<ProcessMap> {
    if late.dim() != early.dim() {
        return Err(Error::DimMismatch {
            expected: late.dim(),
            found: early.dim(),
        });
    }
    let condition = condition_number(early);
    if !(condition <= max_condition) {
        return Err(Error::SingularMap { condition });
    }
    let inverse = early
        .matrix()
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMap { condition })?;
    let lambda = ProcessMap::from_matrix(late.dim(), late.matrix() * inverse)?;
    let tp = lambda.trace_preservation_error();
    if tp > 1e-7 {
        log::warn!("intermediate map misses trace preservation by {tp:.3e}");
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityCheck {
    pub passed: bool,
    /// Most negative Choi eigenvalue (CP test) or output eigenvalue (P test).
    pub worst_eigenvalue: f64,
}

/// Complete positivity: the Choi matrix has no eigenvalue below `-tol`.
pub fn cp_test(map: &ProcessMap, tol: f64) -> PositivityCheck {
    let c = choi(map);
    let worst = qcore::eigvalsh(&qcore::hermitize(&c))[0];
    PositivityCheck {
        passed: worst >= -tol,
        worst_eigenvalue: worst,
    }
}

/// Real `4 x 4` Pauli transfer matrix `R_mn = Tr(s_m E(s_n)) / 2` with `s = (I, X, Y, Z)`.
pub fn pauli_transfer_matrix(map: &ProcessMap) -> Result<[[f64; 4]; 4]> {
    if map.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: map.dim(),
        });
    }
    let paulis = [
        qcore::identity(2),
        qcore::pauli_x(),
        qcore::pauli_y(),
        qcore::pauli_z(),
    ];
    let images: Vec<CMatrix> = paulis.iter().map(|s| map.apply(s)).collect();
    let mut r = [[0.0; 4]; 4];
    for (m, sm) in paulis.iter().enumerate() {
        for (n, img) in images.iter().enumerate() {
            r[m][n] = 0.5 * qcore::trace_product(sm, img);
        }
    }
    Ok(r)
}

/// Deterministic Fibonacci-lattice directions on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            [rho * c, rho * s, z]
        })
        .collect()
}

/// Positivity of a qubit map.
///
/// Unital maps send the Bloch ball to an origin-centred ellipsoid whose semi-axes are the
/// singular values of the traceless block, so positivity is decided exactly. Otherwise the
/// images of `n_samples` low-discrepancy pure states plus the six axis states are checked.
pub fn p_test_qubit(map: &ProcessMap, tol: f64, n_samples: usize) -> Result<PositivityCheck> {
    let r = pauli_transfer_matrix(map)?;
    let shift = (1..4).map(|m| r[m][0].abs()).fold(0.0, f64::max);
    if shift <= UNITAL_TOL {
        let block = nalgebra::Matrix3::from_fn(|m, n| r[m + 1][n + 1]);
        let top = block.singular_values().max();
        let worst = 0.5 * (r[0][0] - top);
        return Ok(PositivityCheck {
            passed: worst >= -tol,
            worst_eigenvalue: worst,
        });
    }
    let axes = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let mut worst = f64::INFINITY;
    for n in axes.into_iter().chain(fibonacci_sphere(n_samples)) {
        let rho = qcore::qubit_operator(0.5, n.map(|c| 0.5 * c));
        let out = qcore::hermitize(&map.apply(&rho));
        worst = worst.min(qcore::eigvalsh(&out)[0]);
    }
    Ok(PositivityCheck {
        passed: worst >= -tol,
        worst_eigenvalue: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DivisibilityLabel {
    Pd0,
    Pd1,
    Pd2,
}

impl DivisibilityLabel {
    /// `k` in PD_k.
    pub fn index(self) -> u8 {
        match self {
            Self::Pd0 => 0,
            Self::Pd1 => 1,
            Self::Pd2 => 2,
        }
    }
}

impl fmt::Display for DivisibilityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PD{}", self.index())
    }
}

/// Where the deciding value was found. `tau = 0` for rate-level evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evidence {
    pub witness: f64,
    pub t: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisibilityClass {
    pub label: DivisibilityLabel,
    pub evidence: Evidence,
}

/// Rates of `sigma_x, sigma_y, sigma_z` in a Pauli-diagonal master equation.
pub fn pauli_rates(me: &MasterEquation) -> Result<[RateFn; 3]> {
    if me.dim() != 2 {
        return Err(Error::NotPauliDiagonal(format!(
            "dimension {} is not a qubit",
            me.dim()
        )));
    }
    let paulis = [qcore::pauli_x(), qcore::pauli_y(), qcore::pauli_z()];
    let mut parts: [Vec<(f64, RateFn)>; 3] = Default::default();
    for ch in me.channels() {
        if (ch.a_i() - ch.a_j()).norm() > 1e-12 {
            return Err(Error::NotPauliDiagonal(format!(
                "channel {} is off-diagonal",
                ch.label
            )));
        }
        let a = ch.a_i();
        let axis = paulis.iter().position(|s| {
            let coeff = (s * a).trace() / C64::new(2.0, 0.0);
            (a - s * coeff).norm() < 1e-12 && coeff.norm() > 0.0
        });
        let Some(axis) = axis else {
            return Err(Error::NotPauliDiagonal(format!(
                "jump operator of {} is not a Pauli matrix",
                ch.label
            )));
        };
        let weight = ((&paulis[axis] * a).trace() / C64::new(2.0, 0.0)).norm_sqr();
        parts[axis].push((weight, ch.rate_fn()));
    }
    Ok(parts.map(|terms| -> RateFn {
        std::sync::Arc::new(move |t| terms.iter().map(|(w, f)| w * f(t)).sum())
    }))
}

/// Rate-level classification: PD2 if every rate is `>= -tol` on `grid`, PD0 if some
/// pairwise sum drops below `-tol`, PD1 otherwise.
pub fn rate_classify_pauli(rates: &[RateFn; 3], grid: &[f64], tol: f64) -> DivisibilityClass {
    let mut worst_rate = Evidence {
        witness: f64::INFINITY,
        t: f64::NAN,
        tau: 0.0,
    };
    let mut worst_pair = Evidence {
        witness: f64::INFINITY,
        t: f64::NAN,
        tau: 0.0,
    };
    for &t in grid {
        let k = [rates[0](t), rates[1](t), rates[2](t)];
        let min_rate = k[0].min(k[1]).min(k[2]);
        let min_pair = (k[0] + k[1]).min(k[0] + k[2]).min(k[1] + k[2]);
        if min_rate < worst_rate.witness {
            worst_rate = Evidence {
                witness: min_rate,
                t,
                tau: 0.0,
            };
        }
        if min_pair < worst_pair.witness {
            worst_pair = Evidence {
                witness: min_pair,
                t,
                tau: 0.0,
            };
        }
    }
    if worst_pair.witness < -tol {
        DivisibilityClass {
            label: DivisibilityLabel::Pd0,
            evidence: worst_pair,
        }
    } else if worst_rate.witness < -tol {
        DivisibilityClass {
            label: DivisibilityLabel::Pd1,
            evidence: worst_rate,
        }
    } else {
        DivisibilityClass {
            label: DivisibilityLabel::Pd2,
            evidence: worst_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub eigen_tol: f64,
    pub max_condition: f64,
    pub p_samples: usize,
    pub max_step: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            eigen_tol: DEFAULT_EIGEN_TOL,
            max_condition: DEFAULT_MAX_CONDITION,
            p_samples: DEFAULT_P_SAMPLES,
            max_step: lindblad::DEFAULT_STEP,
        }
    }
}

/// `t in [0, 2 pi / J]` in steps of `pi / (100 J)`.
pub fn default_t_grid(j: f64) -> Vec<f64> {
    (0..=200).map(|k| k as f64 * PI / (100.0 * j)).collect()
}

/// `tau in {pi/200, pi/20, pi/4} / J`.
pub fn default_tau_grid(j: f64) -> Vec<f64> {
    vec![PI / (200.0 * j), PI / (20.0 * j), PI / (4.0 * j)]
}

/// Map-level classification from every intermediate map `Lambda_{t + tau, t}` of a qubit
/// process started at time 0. Non-invertible snapshots are skipped and logged.
pub fn classify_process(
    me: &MasterEquation,
    t_grid: &[f64],
    tau_grid: &[f64],
    options: ClassifyOptions,
) -> Result<DivisibilityClass> {
    if me.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: me.dim(),
        });
    }
    if t_grid
        .iter()
        .chain(tau_grid)
        .any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::InvalidArgument(
            "t and tau grids must be finite and >= 0".into(),
        ));
    }
    let mut times: Vec<f64> = std::iter::once(0.0)
        .chain(t_grid.iter().copied())
        .chain(
            t_grid
                .iter()
                .flat_map(|&t| tau_grid.iter().map(move |&tau| t + tau)),
        )
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let maps = lindblad::propagator_with_step(me, &times, options.max_step)?;
    let lookup = |t: f64| {
        let i = times.partition_point(|&x| x < t - 1e-12 * (1.0 + t.abs()));
        &maps[i]
    };

    let mut worst_cp = Evidence {
        witness: f64::INFINITY,
        t: f64::NAN,
        tau: f64::NAN,
    };
    let mut worst_p = worst_cp;
    let mut gaps = 0usize;
    for &t in t_grid {
        let early = lookup(t);
        for &tau in tau_grid {
            let lambda =
                match intermediate_map_with_cutoff(lookup(t + tau), early, options.max_condition) {
                    Ok(m) => m,
                    Err(Error::SingularMap { condition }) => {
                        gaps += 1;
                        log::debug!("skipping (t, tau) = ({t}, {tau}): condition {condition:.3e}");
                        continue;
                    }
                    Err(e) => return Err(e),
                };
            let cp = cp_test(&lambda, options.eigen_tol);
            if cp.worst_eigenvalue < worst_cp.witness {
                worst_cp = Evidence {
                    witness: cp.worst_eigenvalue,
                    t,
                    tau,
                };
            }
            let p = p_test_qubit(&lambda, options.eigen_tol, options.p_samples)?;
            if p.worst_eigenvalue < worst_p.witness {
                worst_p = Evidence {
                    witness: p.worst_eigenvalue,
                    t,
                    tau,
                };
            }
        }
    }
    if gaps > 0 {
        log::info!("classification skipped {gaps} singular (t, tau) pairs");
    }
    Ok(if worst_p.witness < -options.eigen_tol {
        DivisibilityClass {
            label: DivisibilityLabel::Pd0,
            evidence: worst_p,
        }
    } else if worst_cp.witness < -options.eigen_tol {
        DivisibilityClass {
            label: DivisibilityLabel::Pd1,
            evidence: worst_cp,
        }
    } else {
        DivisibilityClass {
            label: DivisibilityLabel::Pd2,
            evidence: worst_cp,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDiagramOptions {
    pub j_coupling: f64,
    /// Rate samples per drive period.
    pub resolution: usize,
    pub rate_tol: f64,
    /// Every `n`-th cell (row-major) is re-classified at map level; `None` disables.
    pub spot_check_stride: Option<usize>,
    pub classify: ClassifyOptions,
}

impl Default for PhaseDiagramOptions {
    fn default() -> Self {
        Self {
            j_coupling: 1.0,
            resolution: 4000,
            rate_tol: 1e-12,
            spot_check_stride: None,
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpotCheck {
    pub a_index: usize,
    pub gamma_index: usize,
    pub map_class: DivisibilityClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub a_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Row-major in `a`: cell `(i, k)` sits at `i * gamma_grid.len() + k`.
    pub cells: Vec<DivisibilityClass>,
    pub spot_checks: Vec<SpotCheck>,
}

impl PhaseDiagram {
    pub fn cell(&self, a_index: usize, gamma_index: usize) -> &DivisibilityClass {
        &self.cells[a_index * self.gamma_grid.len() + gamma_index]
    }

    /// Spot checks whose map-level label differs from the rate-level label.
    pub fn disagreements(&self) -> Vec<&SpotCheck> {
        self.spot_checks
            .iter()
            .filter(|s| s.map_class.label != self.cell(s.a_index, s.gamma_index).label)
            .collect()
    }
}

/// Midpoints of `resolution` equal slices of one drive period `2 pi / J`.
pub fn period_midpoints(j: f64, resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|k| (k as f64 + 0.5) * 2.0 * PI / (resolution as f64 * j))
        .collect()
}

/// Rate-level class of one CNOT parameter cell.
pub fn classify_cnot_rates(
    a: f64,
    gamma: f64,
    options: &PhaseDiagramOptions,
) -> Result<DivisibilityClass> {
    let p = CnotParams {
        a,
        gamma,
        j_coupling: options.j_coupling,
        ..CnotParams::default()
    };
    let rates = pauli_rates(&cnot::cnot_master_equation(&p)?)?;
    Ok(rate_classify_pauli(
        &rates,
        &period_midpoints(options.j_coupling, options.resolution),
        options.rate_tol,
    ))
}

/// PD_k classes of the CNOT target qubit over `(a, gamma / J)`, cells computed in parallel.
pub fn phase_diagram(
    a_grid: &[f64],
    gamma_grid: &[f64],
    options: PhaseDiagramOptions,
) -> Result<PhaseDiagram> {
    if a_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidArgument("a grid must lie in [0, 1]".into()));
    }
    if gamma_grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::InvalidArgument("gamma grid must be positive".into()));
    }
    if options.resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let n_gamma = gamma_grid.len();
    let cells = (0..a_grid.len() * n_gamma)
        .into_par_iter()
        .map(|idx| classify_cnot_rates(a_grid[idx / n_gamma], gamma_grid[idx % n_gamma], &options))
        .collect::<Result<Vec<_>>>()?;

    let spot_checks = match options.spot_check_stride {
        None | Some(0) => Vec::new(),
        Some(stride) => (0..cells.len())
            .step_by(stride)
            .filter(|&idx| {
                let singular = cnot::cnot_amplitude_cx(a_grid[idx / n_gamma], 1.0).is_infinite();
                if singular {
                    log::info!("no map-level spot check at a = 0.5: the process is not invertible");
                }
                !singular
            })
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|idx| {
                let (i, k) = (idx / n_gamma, idx % n_gamma);
                let p = CnotParams {
                    a: a_grid[i],
                    gamma: gamma_grid[k],
                    j_coupling: options.j_coupling,
                    ..CnotParams::default()
                };
                let me = cnot::cnot_master_equation(&p)?;
                let map_class = classify_process(
                    &me,
                    &default_t_grid(options.j_coupling),
                    &default_tau_grid(options.j_coupling),
                    options.classify,
                )?;
                Ok(SpotCheck {
                    a_index: i,
                    gamma_index: k,
                    map_class,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(PhaseDiagram {
        a_grid: a_grid.to_vec(),
        gamma_grid: gamma_grid.to_vec(),
        cells,
        spot_checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::Channel;
    use crate::qcore::{HermitianOp, ONE, ZERO};

    fn depolarizing(gamma: f64) -> MasterEquation {
        let channels = [
            ("x", qcore::pauli_x()),
            ("y", qcore::pauli_y()),
            ("z", qcore::pauli_z()),
        ]
        .into_iter()
        .map(|(l, a)| Channel::constant(l, a, gamma / 2.0, 0.0).unwrap())
        .collect();
        MasterEquation::with_constant_hamiltonian(HermitianOp::zeros(2), channels).unwrap()
    }

    fn sorted_eigs(m: &CMatrix) -> Vec<f64> {
        qcore::eigvalsh(&qcore::hermitize(m))
    }

    #[test]
    fn choi_examples() {
        let e = sorted_eigs(&choi(&ProcessMap::identity(2)));
        for (v, x) in e.iter().zip([0.0, 0.0, 0.0, 2.0]) {
            assert!((v - x).abs() < 1e-14);
        }
        let e = sorted_eigs(&choi(&ProcessMap::transpose(2)));
        for (v, x) in e.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert!((v - x).abs() < 1e-14);
        }
        let to_mixed = ProcessMap::from_fn(2, |x| {
            qcore::identity(2) * (qcore::trace(x) / C64::new(2.0, 0.0))
        });
        let c = choi(&to_mixed);
        assert!((c - qcore::identity(4) * C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn choi_of_identity_is_maximally_entangled_operator() {
        let mut omega = CMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            omega[(r, c)] = ONE;
        }
        assert_eq!(choi(&ProcessMap::identity(2)), omega);
    }

    #[test]
    fn cp_and_p_on_known_maps() {
        let id = ProcessMap::identity(2);
        assert!(cp_test(&id, 1e-7).passed);
        assert!(p_test_qubit(&id, 1e-7, 2048).unwrap().passed);
        let tr = ProcessMap::transpose(2);
        let cp = cp_test(&tr, 1e-7);
        assert!(!cp.passed && (cp.worst_eigenvalue + 1.0).abs() < 1e-12);
        assert!(p_test_qubit(&tr, 1e-7, 2048).unwrap().passed);
        assert!(matches!(
            p_test_qubit(&ProcessMap::identity(3), 1e-7, 16),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn sampled_and_exact_paths_agree_on_non_unital_map() {
        // Amplitude damping towards index 0, then a stretch along x that breaks positivity.
        let damp = ProcessMap::from_fn(2, |x| {
            let g: f64 = 0.3;
            let k0 =
                CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::new((1.0 - g).sqrt(), 0.0)]);
            let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, C64::new(g.sqrt(), 0.0), ZERO, ZERO]);
            &k0 * x * k0.adjoint() + &k1 * x * k1.adjoint()
        });
        assert!(p_test_qubit(&damp, 1e-7, 2048).unwrap().passed);
        let stretch = ProcessMap::from_fn(2, |x| {
            let sx = (qcore::pauli_x() * x).trace();
            x + qcore::pauli_x() * (sx * C64::new(0.3, 0.0))
        });
        let bad = stretch.after(&damp);
        let check = p_test_qubit(&bad, 1e-7, 2048).unwrap();
        assert!(!check.passed);
    }

    #[test]
    fn intermediate_map_examples() {
        let me = depolarizing(0.3);
        let times = [0.0, 0.5, 1.0, 1.2, 1.7];
        let maps = lindblad::propagator(&me, &times).unwrap();
        let same = intermediate_map(&maps[2], &maps[2]).unwrap();
        assert!((same.matrix() - qcore::identity(4)).norm() < 1e-12);
        let l1 = intermediate_map(&maps[2], &maps[1]).unwrap();
        let l2 = intermediate_map(&maps[4], &maps[3]).unwrap();
        assert!((l1.matrix() - l2.matrix()).norm() < 1e-10);
        assert!(l1.is_trace_preserving(1e-7));
        let zero = ProcessMap::from_fn(2, |x| {
            qcore::identity(2) * (qcore::trace(x) / C64::new(2.0, 0.0))
        });
        assert!(matches!(
            intermediate_map(&maps[1], &zero),
            Err(Error::SingularMap { .. })
        ));
    }

    #[test]
    fn cnot_map_singular_at_pole() {
        let p = CnotParams {
            a: 0.5,
            gamma: 0.1,
            ..CnotParams::default()
        };
        let later = cnot::cnot_analytic_map(&p, 4.0);
        let at_pole = cnot::cnot_analytic_map(&p, PI);
        assert!(matches!(
            intermediate_map(&later, &at_pole),
            Err(Error::SingularMap { .. })
        ));
        let near = cnot::cnot_analytic_map(&p, 2.0);
        assert!(intermediate_map(&later, &near).is_ok());
    }

    #[test]
    fn pauli_rates_of_cnot() {
        let p = CnotParams {
            a: 0.3,
            gamma: 0.4,
            ..CnotParams::default()
        };
        let rates = pauli_rates(&cnot::cnot_master_equation(&p).unwrap()).unwrap();
        for t in [0.3, 2.0, 4.5] {
            let g = cnot::cnot_rate_cx(t, 0.3, 1.0).unwrap();
            assert!((rates[0](t) - (0.4 + g) / 2.0).abs() < 1e-15);
            assert!((rates[1](t) - 0.2).abs() < 1e-15 && (rates[2](t) - 0.2).abs() < 1e-15);
        }
        let ch = Channel::constant("down", qcore::ket_bra(2, 1, 0), 1.0, 0.0).unwrap();
        let me =
            MasterEquation::with_constant_hamiltonian(HermitianOp::zeros(2), vec![ch]).unwrap();
        assert!(matches!(pauli_rates(&me), Err(Error::NotPauliDiagonal(_))));
    }

    #[test]
    fn rate_classification_examples() {
        let opts = PhaseDiagramOptions::default();
        for (gamma, label) in [
            (0.6, DivisibilityLabel::Pd2),
            (0.4, DivisibilityLabel::Pd1),
            (0.1, DivisibilityLabel::Pd0),
        ] {
            assert_eq!(
                classify_cnot_rates(0.3, gamma, &opts).unwrap().label,
                label,
                "gamma = {gamma}"
            );
        }
    }

    #[test]
    fn map_classification_examples() {
        let opts = ClassifyOptions::default();
        let t = default_t_grid(1.0);
        let tau = default_tau_grid(1.0);
        assert_eq!(
            classify_process(&depolarizing(0.2), &t, &tau, opts)
                .unwrap()
                .label,
            DivisibilityLabel::Pd2
        );
        for (a, gamma, label) in [
            (0.3, 0.1, DivisibilityLabel::Pd0),
            (0.3, 0.4, DivisibilityLabel::Pd1),
            (0.3, 0.6, DivisibilityLabel::Pd2),
            (0.0, 0.1, DivisibilityLabel::Pd2),
        ] {
            let me = cnot::cnot_master_equation(&CnotParams {
                a,
                gamma,
                ..CnotParams::default()
            })
            .unwrap();
            let class = classify_process(&me, &t, &tau, opts).unwrap();
            assert_eq!(class.label, label, "a = {a}, gamma = {gamma}: {class:?}");
        }
    }

    #[test]
    fn phase_diagram_columns() {
        let gammas = [0.05, 0.2, 0.25, 0.28, 0.5, 0.55, 1.0];
        let d = phase_diagram(
            &[0.0, 0.3, 0.5, 1.0],
            &gammas,
            PhaseDiagramOptions::default(),
        )
        .unwrap();
        let labels = |i: usize| {
            (0..gammas.len())
                .map(|k| d.cell(i, k).label.index())
                .collect::<Vec<_>>()
        };
        assert_eq!(labels(0), vec![2; 7]);
        assert_eq!(labels(1), vec![0, 0, 0, 1, 1, 2, 2]);
        assert_eq!(labels(2), vec![0; 7]);
        assert_eq!(labels(3), vec![2; 7]);
    }

    #[test]
    fn labels_display() {
        assert_eq!(DivisibilityLabel::Pd1.to_string(), "PD1");
        assert!(DivisibilityLabel::Pd0 < DivisibilityLabel::Pd2);
    }
}
