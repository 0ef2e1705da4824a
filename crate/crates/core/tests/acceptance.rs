//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero when any
//! criterion fails. Pass criterion numbers as arguments to run a subset:
//!
//! ```text
//! cargo test -p fluxlab-core --test acceptance -- 3 5
//! ```

use std::f64::consts::{LN_2, PI};
use std::panic;
use std::time::Instant;

use fluxlab_core::divisibility::{self, ClassifyOptions, DivisibilityLabel, PhaseDiagramOptions};
use fluxlab_core::lindblad::{self, Channel, MasterEquation};
use fluxlab_core::measures;
use fluxlab_core::models::cnot::{self, CnotParams};
use fluxlab_core::models::protocol::{self, ProtocolParams};
use fluxlab_core::qcore::{self, HermitianOp, QState, C64};
use fluxlab_core::thermoflux::{self, FluxOptions};

const SLOPE_TARGET: f64 = 2.0;
const SLOPE_TOL: f64 = 0.1;
const APPENDIX_A_TOL: f64 = 1e-9;
const ORACLE_TRACE_DISTANCE: f64 = 1e-6;
const FLUX_CROSS_PATH_TOL: f64 = 1e-8;
const BOUNDARY_TOL: f64 = 0.005;
const RETRIEVAL_FLOOR: f64 = 1e-6;
const BLP_POSITIVE: f64 = 1e-4;
const BLP_ZERO: f64 = 1e-6;
const SZILARD_TOL: f64 = 1e-12;
const CLOSURE_TOL: f64 = 1e-5;
const RK4_ORDER: f64 = 4.0;
const RK4_ORDER_TOL: f64 = 0.3;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn cnot_window(n: usize, start: f64) -> Vec<f64> {
    (0..n)
        .map(|k| start + (4.0 * PI - start) * k as f64 / (n - 1) as f64)
        .collect()
}

fn protocol_second_order_law() -> Outcome {
    let p = ProtocolParams::default();
    let dts = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let fitted = protocol::protocol_scaling_study(&p, &dts).expect("scaling study");
    // Relative gap of dS_irr against dS_sys - beta dQ, in units of the larger term.
    let mut worst_identity = 0.0f64;
    for dt in dts {
        let r = protocol::protocol_exact_step(&ProtocolParams { dt, ..p }).expect("exact step");
        let rhs = r.d_s_sys - p.beta * r.d_q;
        let scale = r.d_s_sys.abs().max((p.beta * r.d_q).abs());
        worst_identity = worst_identity.max((r.d_s_irr - rhs).abs() / scale);
    }
    let passed = (fitted - SLOPE_TARGET).abs() <= SLOPE_TOL && worst_identity <= 4.0 * f64::EPSILON;
    outcome(passed, format!("exponent {fitted:.4} (target {SLOPE_TARGET} +/- {SLOPE_TOL}), relative identity gap {worst_identity:.1e}"))
}

fn bipartite_identity() -> Outcome {
    let p = ProtocolParams::default();
    let mut worst = 0.0f64;
    let mut env0 = 0.0f64;
    for t in [0.1, 0.5, 1.0].map(|x| x / p.gamma) {
        let b = protocol::protocol_evolution(&p, t)
            .expect("joint evolution")
            .bipartite(p.beta)
            .expect("bipartite");
        worst = worst.max(b.residual().abs());
        env0 = env0.max(b.env_neq_0.abs());
    }
    outcome(
        worst <= APPENDIX_A_TOL,
        format!("max residual {worst:.2e} (<= {APPENDIX_A_TOL:.0e}), I_env^neq(0) = {env0:.1e}"),
    )
}

fn cnot_analytic_vs_oracle() -> Outcome {
    let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
    let mut worst = (0.0f64, 0.0, 0.0, 0.0);
    for a in [0.0, 0.3, 0.5, 0.7] {
        for gamma in [0.0, 0.1, 0.4, 0.6] {
            for (theta0, phi0, r0) in [(0.0, 0.0, 1.0), (0.9, 0.6, 1.0), (2.2, -1.3, 0.7)] {
                let p = CnotParams {
                    a,
                    gamma,
                    theta0,
                    phi0,
                    r0,
                    j_coupling: 1.0,
                };
                let oracle = cnot::cnot_full_pair_trajectory(
                    &p,
                    &p.control_state().unwrap(),
                    &p.initial_state().unwrap(),
                    &grid,
                    1e-3,
                )
                .expect("pair oracle");
                for (&t, rho) in grid.iter().zip(&oracle) {
                    let d = qcore::trace_distance(rho, &cnot::cnot_analytic_state(&p, t).unwrap())
                        .unwrap();
                    if d > worst.0 {
                        worst = (d, a, gamma, t);
                    }
                }
            }
        }
    }
    outcome(
        worst.0 <= ORACLE_TRACE_DISTANCE,
        format!("max trace distance {:.2e} at a = {}, gamma = {}, t = {:.1} (<= {ORACLE_TRACE_DISTANCE:.0e})", worst.0, worst.1, worst.2, worst.3),
    )
}

fn flux_cross_path() -> Outcome {
    let grid = cnot_window(4000, 0.01);
    let mut worst = 0.0f64;
    let mut worst_heat_x = 0.0f64;
    for gamma in [0.1, 0.4, 0.6] {
        for (theta0, phi0, r0) in [(0.0, 0.0, 1.0), (1.1, 0.4, 0.9)] {
            let p = CnotParams {
                a: 0.3,
                gamma,
                theta0,
                phi0,
                r0,
                j_coupling: 1.0,
            };
            let me = cnot::cnot_master_equation(&p).unwrap();
            let numeric = thermoflux::flux_trajectory(
                &me,
                &p.initial_state().unwrap(),
                0.0,
                &grid,
                FluxOptions::default(),
            )
            .expect("flux trajectory");
            for s in &numeric {
                let exact = cnot::cnot_analytic_fluxes(&p, s.t).expect("closed-form fluxes");
                for (num, ana) in s.per_channel.iter().zip(&exact.per_channel) {
                    assert_eq!(num.label, ana.label);
                    worst = worst
                        .max((num.flux - ana.flux).abs())
                        .max((num.heat_rate - ana.heat_rate).abs());
                    if num.label.ends_with('x') {
                        worst_heat_x = worst_heat_x
                            .max(num.heat_rate.abs())
                            .max(ana.heat_rate.abs());
                    }
                }
                worst = worst.max((s.total_flux - exact.total_flux).abs());
            }
        }
    }
    outcome(
        worst <= FLUX_CROSS_PATH_TOL && worst_heat_x == 0.0,
        format!("max |numeric - closed form| {worst:.2e} (<= {FLUX_CROSS_PATH_TOL:.0e}), max |dQ_x/dt| = {worst_heat_x:e}"),
    )
}

/// Smallest gamma on `[lo, hi]` whose class index reaches `target`, by bisection.
fn transition(a: f64, target: u8, mut lo: f64, mut hi: f64, opts: &PhaseDiagramOptions) -> f64 {
    let index = |g: f64| {
        divisibility::classify_cnot_rates(a, g, opts)
            .unwrap()
            .label
            .index()
    };
    assert!(index(lo) < target && index(hi) >= target);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if index(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn phase_boundaries() -> Outcome {
    let opts = PhaseDiagramOptions::default();
    let c: f64 = 0.3 * 0.7;
    let amplitude = c / (1.0 - 4.0 * c).sqrt();
    let pd1_at = transition(0.3, 1, 0.01, 2.0, &opts);
    let pd2_at = transition(0.3, 2, 0.01, 2.0, &opts);
    let boundaries_ok = (pd1_at - amplitude / 2.0).abs() <= BOUNDARY_TOL
        && (pd2_at - amplitude).abs() <= BOUNDARY_TOL;

    let gammas = [0.01, 0.05, 0.1, 0.3, 0.6, 1.0, 2.0];
    let diagram = divisibility::phase_diagram(&[0.0, 1.0], &gammas, opts).unwrap();
    let edges_ok = diagram
        .cells
        .iter()
        .all(|c| c.label == DivisibilityLabel::Pd2);

    let cells = [
        (0.0, 0.1),
        (0.0, 0.5),
        (1.0, 0.1),
        (0.1, 0.03),
        (0.1, 0.08),
        (0.1, 0.2),
        (0.3, 0.1),
        (0.3, 0.2),
        (0.3, 0.35),
        (0.3, 0.45),
        (0.3, 0.6),
        (0.3, 0.8),
        (0.7, 0.1),
        (0.7, 0.4),
        (0.7, 0.6),
    ];
    let t_grid = divisibility::default_t_grid(1.0);
    let tau_grid = divisibility::default_tau_grid(1.0);
    let mut disagreements = Vec::new();
    for (a, gamma) in cells {
        let rate = divisibility::classify_cnot_rates(a, gamma, &opts)
            .unwrap()
            .label;
        let me = cnot::cnot_master_equation(&CnotParams {
            a,
            gamma,
            ..CnotParams::default()
        })
        .unwrap();
        let map =
            divisibility::classify_process(&me, &t_grid, &tau_grid, ClassifyOptions::default())
                .unwrap()
                .label;
        if rate != map {
            disagreements.push(format!("(a {a}, gamma {gamma}: rate {rate}, map {map})"));
        }
    }
    outcome(
        boundaries_ok && edges_ok && disagreements.is_empty(),
        format!(
            "PD0->PD1 at {pd1_at:.4} (expect {:.4}), PD1->PD2 at {pd2_at:.4} (expect {amplitude:.4}), a in {{0,1}} all PD2: {edges_ok}, rate/map disagreements: {}{}",
            amplitude / 2.0,
            disagreements.len(),
            if disagreements.is_empty() { String::new() } else { format!(" {}", disagreements.join(" ")) }
        ),
    )
}

fn fluxes_for(gamma: f64, grid: &[f64]) -> Vec<thermoflux::FluxSample> {
    let p = CnotParams {
        a: 0.3,
        gamma,
        ..CnotParams::default()
    };
    let me = cnot::cnot_master_equation(&p).unwrap();
    thermoflux::flux_trajectory(
        &me,
        &p.initial_state().unwrap(),
        0.0,
        grid,
        FluxOptions::default(),
    )
    .unwrap()
}

fn sigma_x_flux(s: &thermoflux::FluxSample) -> f64 {
    s.channel("C,x").unwrap().flux + s.channel("dep,x").unwrap().flux
}

fn sign_structure() -> Outcome {
    let grid = cnot_window(4000, 0.01);
    let weak = fluxes_for(0.1, &grid);
    let periods_with_backflow = (0..2)
        .filter(|&k| {
            let (lo, hi) = (2.0 * PI * k as f64, 2.0 * PI * (k + 1) as f64);
            weak.iter()
                .any(|s| s.t >= lo && s.t < hi && s.total_flux > RETRIEVAL_FLOOR)
        })
        .count();
    let window: Vec<f64> = grid.iter().copied().filter(|&t| t >= 0.05).collect();
    let mid = fluxes_for(0.4, &window);
    let mid_x_positive = mid.iter().any(|s| sigma_x_flux(s) > 0.0);
    let mid_total_negative = mid.iter().all(|s| s.total_flux < 0.0);
    let strong = fluxes_for(0.6, &window);
    let strong_x_nonpositive = strong.iter().all(|s| sigma_x_flux(s) <= 0.0);
    let strong_total_negative = strong.iter().all(|s| s.total_flux < 0.0);
    let passed = periods_with_backflow == 2
        && mid_x_positive
        && mid_total_negative
        && strong_x_nonpositive
        && strong_total_negative;
    outcome(
        passed,
        format!(
            "gamma 0.1: backflow in {periods_with_backflow}/2 periods; gamma 0.4: F_x > 0 somewhere {mid_x_positive}, F < 0 throughout {mid_total_negative}; gamma 0.6: F_x <= 0 {strong_x_nonpositive}, F < 0 {strong_total_negative}"
        ),
    )
}

fn blp_value(gamma: f64) -> f64 {
    let me = cnot::cnot_master_equation(&CnotParams {
        a: 0.3,
        gamma,
        ..CnotParams::default()
    })
    .unwrap();
    let horizon = measures::DEFAULT_HORIZON_GAMMA / gamma;
    let grid = measures::default_blp_grid(gamma, (horizon / 0.01).ceil() as usize).unwrap();
    measures::blp_measure(&me, &QState::basis(2, 0), &QState::basis(2, 1), &grid)
        .unwrap()
        .value
}

fn blp_pattern() -> Outcome {
    let weak = blp_value(0.1);
    let zeros = [blp_value(0.4), blp_value(0.6)];
    let sweep: Vec<f64> = [0.05, 0.1, 0.15, 0.2, 0.25]
        .iter()
        .map(|&g| blp_value(g))
        .collect();
    let decreasing = sweep.windows(2).all(|w| w[1] < w[0]);
    let passed = weak > BLP_POSITIVE && zeros.iter().all(|z| z.abs() <= BLP_ZERO) && decreasing;
    outcome(
        passed,
        format!(
            "BLP(0.1) = {weak:.4e} (> {BLP_POSITIVE:.0e}), BLP(0.4, 0.6) = ({:.1e}, {:.1e}), sweep {:?} strictly decreasing: {decreasing}",
            zeros[0],
            zeros[1],
            sweep.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>()
        ),
    )
}

fn sign_law() -> Outcome {
    let grid = cnot_window(4000, 0.01);
    let mut parts = Vec::new();
    let mut passed = true;
    for gamma in [0.1, 0.4, 0.6] {
        let r = measures::flux_distance_sign_check(
            &CnotParams {
                a: 0.3,
                gamma,
                ..CnotParams::default()
            },
            &grid,
        )
        .unwrap();
        passed &= r.violations().is_empty() && r.eligible() > 0;
        parts.push(format!(
            "gamma {gamma}: {}/{} agree",
            r.eligible() - r.violations().len(),
            r.eligible()
        ));
    }
    outcome(passed, parts.join(", "))
}

fn szilard_value() -> Outcome {
    let mut worst = 0.0f64;
    for beta in [0.25, 1.0, 3.7] {
        for k in 0..2 {
            let w =
                thermoflux::extractable_work(&QState::basis(2, k), &HermitianOp::zeros(2), beta)
                    .unwrap();
            worst = worst.max((w - LN_2 / beta).abs());
        }
    }
    outcome(
        worst <= SZILARD_TOL,
        format!("max |W - ln2/beta| = {worst:.1e} (<= {SZILARD_TOL:.0e})"),
    )
}

fn thermal_qubit(h: lindblad::HamiltonianFn, beta: f64, gamma: f64) -> MasterEquation {
    let n = 1.0 / (beta.exp() - 1.0);
    let down = Channel::constant("down", qcore::ket_bra(2, 1, 0), gamma * (n + 1.0), beta).unwrap();
    let up = Channel::constant("up", qcore::ket_bra(2, 0, 1), gamma * n, beta).unwrap();
    MasterEquation::new(2, h, vec![down, up]).unwrap()
}

fn information_balance_closure() -> Outcome {
    let rho0 = QState::new(qcore::qubit_operator(0.5, [0.25, -0.1, 0.4])).unwrap();
    let constant = thermal_qubit(
        std::sync::Arc::new(|_| HermitianOp::diagonal(&[1.0, 0.0]).into_matrix()),
        0.8,
        0.3,
    );
    let r = thermoflux::energetics_report(&constant, &rho0, 0.0, 5.0).unwrap();
    let constant_gap = (r.delta_i_neq + r.delta_s_irr).abs();

    let drive = |t: f64| {
        qcore::pauli_z() * C64::new(0.5 + 0.2 * (0.7 * t).sin(), 0.0)
            + qcore::pauli_x() * C64::new(0.1 * t.cos(), 0.0)
    };
    let driven = thermal_qubit(std::sync::Arc::new(drive), 0.8, 0.3);
    let mut worst_driven = thermoflux::energetics_report(&driven, &rho0, 0.0, 5.0)
        .unwrap()
        .residual
        .abs();
    for gamma in [0.1, 0.4, 0.6] {
        let p = CnotParams {
            a: 0.3,
            gamma,
            ..CnotParams::default()
        };
        let me = cnot::cnot_master_equation(&p).unwrap();
        let r =
            thermoflux::energetics_report(&me, &p.initial_state().unwrap(), 0.0, 4.0 * PI).unwrap();
        worst_driven = worst_driven.max(r.residual.abs());
    }
    outcome(
        constant_gap <= CLOSURE_TOL && worst_driven <= CLOSURE_TOL,
        format!("constant H |dI + dS_irr| = {constant_gap:.2e}, driven H max residual {worst_driven:.2e} (<= {CLOSURE_TOL:.0e})"),
    )
}

fn rk4_order() -> Outcome {
    let p = CnotParams {
        a: 0.3,
        gamma: 0.1,
        theta0: 0.9,
        phi0: 0.6,
        r0: 0.95,
        j_coupling: 1.0,
    };
    let me = cnot::cnot_master_equation(&p).unwrap();
    let t_end = 6.0;
    let exact = cnot::cnot_analytic_state(&p, t_end).unwrap();
    let steps = [0.1, 0.05, 0.025, 0.0125];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&h| {
            let traj = lindblad::evolve(&me, &p.initial_state().unwrap(), 0.0, t_end, h).unwrap();
            (traj.last().unwrap().1.matrix() - exact.matrix()).norm()
        })
        .collect();
    let order = slope(
        &steps.map(f64::ln),
        &errors.iter().map(|e| e.ln()).collect::<Vec<_>>(),
    );
    outcome(
        (order - RK4_ORDER).abs() <= RK4_ORDER_TOL,
        format!(
            "fitted order {order:.3} (target {RK4_ORDER} +/- {RK4_ORDER_TOL}), errors {:?}",
            errors
                .iter()
                .map(|e| format!("{e:.2e}"))
                .collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "protocol second-order law", protocol_second_order_law),
        (
            2,
            "bipartite entropy-production identity",
            bipartite_identity,
        ),
        (
            3,
            "CNOT closed form vs two-qubit oracle",
            cnot_analytic_vs_oracle,
        ),
        (4, "flux cross-path consistency", flux_cross_path),
        (5, "phase-diagram boundaries", phase_boundaries),
        (6, "flux sign structure", sign_structure),
        (7, "BLP pattern", blp_pattern),
        (8, "flux / trace-distance sign law", sign_law),
        (9, "Szilard value", szilard_value),
        (
            10,
            "information balance closure",
            information_balance_closure,
        ),
        (11, "RK4 integrator order", rk4_order),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = 0;
    let mut ran = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.passed {
            failures += 1;
        }
        println!(
            "{} [{id:>2}] {name}: {} ({:.1} s)",
            if result.passed { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
