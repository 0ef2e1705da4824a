use std::f64::consts::PI;
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;

use fluxlab_core::divisibility::{self, DivisibilityLabel, PhaseDiagramOptions};
use fluxlab_core::lindblad::{self, Channel, MasterEquation};
use fluxlab_core::measures;
use fluxlab_core::models::{cnot, protocol, CnotParams};
use fluxlab_core::qcore::{self, HermitianOp, QState, C64};
use fluxlab_core::thermoflux::{self, FluxOptions};
use fluxlab_core::Error;

use crate::config::{
    BlpConfig, CnotFluxConfig, Parameters, PhaseDiagramConfig, ProtocolConfig, RunConfig,
    SimulateConfig,
};
use crate::error::{CliError, Result};
use crate::output::{Artifact, Cell, Table};
use crate::svg::{self, Series};

/// Runs the study described by `config` and returns its artifacts in write order.
/// Tables come first; SVG files are rendered from those tables when requested.
pub fn run(config: &RunConfig) -> Result<Vec<Artifact>> {
    let tables = match &config.parameters {
        Parameters::Protocol(p) => protocol_tables(p)?,
        Parameters::CnotFlux(p) => cnot_flux_tables(p)?,
        Parameters::PhaseDiagram(p) => phase_diagram_tables(p)?,
        Parameters::Blp(p) => blp_tables(p)?,
        Parameters::Simulate(p) => simulate_tables(p)?,
    };
    let mut artifacts: Vec<Artifact> = tables.iter().map(Artifact::csv).collect();
    if config.emit_svg {
        artifacts.extend(tables.iter().filter_map(render_svg));
    }
    Ok(artifacts)
}

/// Rejects CNOT windows that contain a zero of the control-induced radius.
fn check_cnot_window(p: &CnotParams, t0: f64, t1: f64) -> Result<()> {
    let floor = cnot::RADIUS_SQUARED_FLOOR;
    let min_r2 = cnot::radius_squared(PI / p.j_coupling, p.a, p.j_coupling);
    if min_r2 > floor {
        return Ok(());
    }
    let period = 2.0 * PI / p.j_coupling;
    let k = ((t0 - PI / p.j_coupling) / period).ceil();
    let t = PI / p.j_coupling + k * period;
    if t <= t1 {
        return Err(Error::SingularRadius {
            t,
            r_squared: min_r2,
        }
        .into());
    }
    Ok(())
}

fn log_log_fit(xs: &[f64], ys: &[f64], slope: f64) -> f64 {
    let n = xs.len() as f64;
    let mean_x = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
    let mean_y = ys.iter().map(|y| y.ln()).sum::<f64>() / n;
    (mean_y - slope * mean_x).exp()
}

fn protocol_tables(cfg: &ProtocolConfig) -> Result<Vec<Table>> {
    let base = cfg.params(cfg.dts[0]);
    let slope = protocol::protocol_scaling_study(&base, &cfg.dts)?;
    let reports = cfg
        .dts
        .iter()
        .map(|&dt| protocol::protocol_exact_step(&cfg.params(dt)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let remainders: Vec<f64> = reports
        .iter()
        .map(|r| (r.d_i_mut - r.d_s_irr).abs())
        .collect();
    let prefactor = log_log_fit(&cfg.dts, &remainders, slope);

    let mut scaling = Table::new(
        "protocol_scaling",
        [
            "dt",
            "dQ",
            "dS_sys",
            "dS_env",
            "dI_mut",
            "dS_irr",
            "p_z",
            "remainder",
            "fit",
        ],
    );
    for ((&dt, r), &rem) in cfg.dts.iter().zip(&reports).zip(&remainders) {
        scaling.push(vec![
            dt.into(),
            r.d_q.into(),
            r.d_s_sys.into(),
            r.d_s_env.into(),
            r.d_i_mut.into(),
            r.d_s_irr.into(),
            r.p_z.into(),
            rem.into(),
            (prefactor * dt.powf(slope)).into(),
        ]);
    }
    let mut fit = Table::new("protocol_fit", ["slope", "prefactor"]);
    fit.push(vec![slope.into(), prefactor.into()]);

    let mut bipartite = Table::new(
        "protocol_bipartite",
        [
            "t",
            "dS_irr",
            "I_mut",
            "I_env_neq_t",
            "I_env_neq_0",
            "residual",
        ],
    );
    for t in cfg.evolution_times() {
        let b = protocol::protocol_evolution(&base, t)?.bipartite(base.beta)?;
        bipartite.push(vec![
            t.into(),
            b.delta_s_irr.into(),
            b.mutual_info.into(),
            b.env_neq_t.into(),
            b.env_neq_0.into(),
            b.residual().into(),
        ]);
    }
    info!("protocol: fitted remainder exponent {slope:.4}");
    Ok(vec![scaling, fit, bipartite])
}

pub const CNOT_FLUX_COLUMNS: [&str; 10] = [
    "t", "F_Cx", "F_dep_x", "F_dep_y", "F_dep_z", "F_x", "F_dep", "F_total", "D", "dD_dt",
];

fn cnot_flux_tables(cfg: &CnotFluxConfig) -> Result<Vec<Table>> {
    let p = cfg.params();
    check_cnot_window(&p, 0.0, cfg.t_max())?;
    let grid = cfg.grid();
    let me = cnot::cnot_master_equation(&p)?;
    let options = FluxOptions {
        t_min: cfg.t_min,
        max_step: cfg.step,
    };
    let fluxes = thermoflux::flux_trajectory(&me, &p.initial_state()?, 0.0, &grid, options)?;
    let distance = measures::flux_distance_sign_check(&p, &grid)?;
    if fluxes.len() != grid.len() || distance.samples.len() != grid.len() {
        return Err(Error::InvalidArgument("flux and distance grids disagree".into()).into());
    }
    let violations = distance.violations().len();
    if violations > 0 {
        warn!("cnot-flux: {violations} eligible samples where sign(F) differs from sign(dD/dt)");
    }

    let mut table = Table::new("cnot_flux", CNOT_FLUX_COLUMNS);
    for (s, d) in fluxes.iter().zip(&distance.samples) {
        let f = |label: &str| s.channel(label).map_or(0.0, |c| c.flux);
        let (cx, dx, dy, dz) = (f("C,x"), f("dep,x"), f("dep,y"), f("dep,z"));
        table.push(vec![
            s.t.into(),
            cx.into(),
            dx.into(),
            dy.into(),
            dz.into(),
            (cx + dx).into(),
            (dx + dy + dz).into(),
            s.total_flux.into(),
            d.d.into(),
            d.d_dot.into(),
        ]);
    }
    Ok(vec![table])
}

fn phase_diagram_tables(cfg: &PhaseDiagramConfig) -> Result<Vec<Table>> {
    let (a_grid, gamma_grid) = (cfg.a_grid(), cfg.gamma_grid());
    let options = PhaseDiagramOptions {
        j_coupling: cfg.j_coupling,
        resolution: cfg.resolution,
        rate_tol: cfg.rate_tol,
        spot_check_stride: cfg.spot_check_stride,
        ..PhaseDiagramOptions::default()
    };
    let diagram = divisibility::phase_diagram(&a_grid, &gamma_grid, options)?;

    let mut cells = Table::new(
        "phase_diagram",
        ["a", "gamma", "label", "class", "witness", "witness_t"],
    );
    let mut boundaries = Table::new(
        "phase_boundaries",
        ["a", "gamma_pd1", "gamma_pd2", "amplitude_cx"],
    );
    for (i, &a) in a_grid.iter().enumerate() {
        let mut first = [None::<f64>; 2];
        for (k, &gamma) in gamma_grid.iter().enumerate() {
            let c = diagram.cell(i, k);
            cells.push(vec![
                a.into(),
                gamma.into(),
                c.label.to_string().into(),
                usize::from(c.label.index()).into(),
                c.evidence.witness.into(),
                c.evidence.t.into(),
            ]);
            for (slot, target) in first.iter_mut().zip([1u8, 2]) {
                if slot.is_none() && c.label.index() >= target {
                    *slot = Some(gamma);
                }
            }
        }
        let amplitude = cnot::cnot_amplitude_cx(a, cfg.j_coupling);
        boundaries.push(vec![
            a.into(),
            first[0].into(),
            first[1].into(),
            amplitude.into(),
        ]);
    }
    let mut tables = vec![cells, boundaries];
    if cfg.spot_check_stride.is_some() {
        let mut spot = Table::new(
            "phase_spot_checks",
            ["a", "gamma", "rate_label", "map_label", "agree"],
        );
        for s in &diagram.spot_checks {
            let rate = diagram.cell(s.a_index, s.gamma_index).label;
            spot.push(vec![
                a_grid[s.a_index].into(),
                gamma_grid[s.gamma_index].into(),
                rate.to_string().into(),
                s.map_class.label.to_string().into(),
                (rate == s.map_class.label).into(),
            ]);
        }
        let disagreements = diagram.disagreements().len();
        if disagreements > 0 {
            warn!(
                "phase-diagram: {disagreements} spot checks disagree with the rate classification"
            );
        }
        tables.push(spot);
    }
    Ok(tables)
}

fn blp_tables(cfg: &BlpConfig) -> Result<Vec<Table>> {
    let rows = cfg
        .gamma_values
        .par_iter()
        .map(|&gamma| -> Result<Vec<Cell>> {
            let p = cfg.params(gamma);
            let grid = cfg.grid(gamma);
            check_cnot_window(&p, 0.0, grid[grid.len() - 1])?;
            let me = cnot::cnot_master_equation(&p)?;
            let fixed =
                measures::blp_measure(&me, &QState::basis(2, 0), &QState::basis(2, 1), &grid)?;
            let class = divisibility::classify_cnot_rates(
                p.a,
                gamma,
                &PhaseDiagramOptions {
                    j_coupling: p.j_coupling,
                    ..Default::default()
                },
            )?;
            let mut row: Vec<Cell> = vec![
                gamma.into(),
                class.label.to_string().into(),
                fixed.value.into(),
            ];
            if cfg.optimize {
                let best = measures::blp_optimize(&me, cfg.pair_grid, &grid)?;
                let [x, y, z] = qcore::bloch_cartesian(&best.pair.0)?;
                row.extend([best.value.into(), x.into(), y.into(), z.into()]);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut headers = vec!["gamma", "label", "blp_pm_z"];
    if cfg.optimize {
        headers.extend(["blp_opt", "opt_x", "opt_y", "opt_z"]);
    }
    let mut table = Table::new("blp", headers);
    for row in rows {
        table.push(row);
    }
    Ok(vec![table])
}

fn config_err(path: String) -> impl FnOnce(Error) -> CliError {
    move |e| CliError::config(path, e.to_string())
}

fn simulate_master_equation(cfg: &SimulateConfig) -> Result<MasterEquation> {
    let h0 = cfg.hamiltonian.static_part.to_matrix();
    HermitianOp::new(h0.clone()).map_err(config_err("parameters.hamiltonian.static".into()))?;
    let mut drives = Vec::new();
    for (k, d) in cfg.hamiltonian.drives.iter().enumerate() {
        let op = d.operator.to_matrix();
        HermitianOp::new(op.clone()).map_err(config_err(format!(
            "parameters.hamiltonian.drives[{k}].operator"
        )))?;
        drives.push((op, d.modulation()));
    }
    let hamiltonian: lindblad::HamiltonianFn = Arc::new(move |t| {
        drives
            .iter()
            .fold(h0.clone(), |h, (op, m)| h + op * C64::new(m.at(t), 0.0))
    });
    let mut channels = Vec::new();
    for (k, spec) in cfg.channels.iter().enumerate() {
        let (base, modulation) = (spec.rate, spec.modulation);
        let rate: lindblad::RateFn = Arc::new(move |t| base + modulation.map_or(0.0, |m| m.at(t)));
        let ch = Channel::diagonal(
            spec.label.clone(),
            spec.operator.to_matrix(),
            rate,
            spec.beta,
        )
        .map_err(config_err(format!("parameters.channels[{k}]")))?;
        channels.push(ch);
    }
    MasterEquation::new(cfg.dim(), hamiltonian, channels).map_err(config_err("parameters".into()))
}

fn simulate_tables(cfg: &SimulateConfig) -> Result<Vec<Table>> {
    let me = simulate_master_equation(cfg)?;
    let rho0 = QState::new(cfg.initial_state.to_matrix())
        .map_err(config_err("parameters.initial_state".into()))?;
    let grid = cfg.grid();
    let options = FluxOptions {
        t_min: cfg.t_start,
        max_step: cfg.step,
    };
    let samples = thermoflux::flux_trajectory(&me, &rho0, cfg.t_start, &grid, options)?;
    let states = lindblad::evolve_on_grid(&me, &rho0, &grid, cfg.step)?;

    let d = cfg.dim();
    let mut headers: Vec<String> = [
        "t",
        "energy",
        "entropy",
        "F_total",
        "Q_cumulative",
        "S_irr_cumulative",
    ]
    .map(String::from)
    .to_vec();
    for ch in me.channels() {
        headers.push(format!("F_{}", ch.label));
        headers.push(format!("dQdt_{}", ch.label));
    }
    headers.extend((0..d).map(|i| format!("p_{i}")));
    let mut table = Table::new("simulate_trajectory", headers);
    for (s, rho) in samples.iter().zip(&states.states) {
        let energy = rho.expectation(&me.hamiltonian_at(s.t))?;
        let mut row: Vec<Cell> = vec![
            s.t.into(),
            energy.into(),
            s.system_entropy.into(),
            s.total_flux.into(),
            s.cumulative_heat.into(),
            s.cumulative_entropy_production.into(),
        ];
        for c in &s.per_channel {
            row.extend([c.flux.into(), c.heat_rate.into()]);
        }
        row.extend((0..d).map(|i| rho.matrix()[(i, i)].re.into()));
        table.push(row);
    }
    let mut tables = vec![table];

    match me.common_beta() {
        Ok(Some(beta)) if beta > 0.0 => {
            let r = thermoflux::energetics_report(&me, &rho0, cfg.t_start, cfg.t_end)?;
            let mut e = Table::new(
                "simulate_energetics",
                [
                    "beta",
                    "dI_neq",
                    "dS_irr",
                    "irr_work_over_kT",
                    "residual",
                    "dS_sys",
                    "heat",
                    "work",
                ],
            );
            e.push(vec![
                beta.into(),
                r.delta_i_neq.into(),
                r.delta_s_irr.into(),
                r.irr_work_over_kt.into(),
                r.residual.into(),
                r.delta_s_sys.into(),
                r.heat.into(),
                r.work.into(),
            ]);
            tables.push(e);
        }
        Ok(_) => info!("simulate: no finite common temperature, energetics table skipped"),
        Err(e) => info!("simulate: {e}; energetics table skipped"),
    }
    Ok(tables)
}

fn render_svg(table: &Table) -> Option<Artifact> {
    let series = |names: &[(&'static str, bool)]| -> Vec<Series<'static>> {
        names
            .iter()
            .map(|&(n, dashed)| Series {
                name: n,
                values: table.column(n),
                dashed,
            })
            .collect()
    };
    let doc = match table.name.as_str() {
        "protocol_scaling" => svg::line_chart(
            "Remainder |dI_mut - dS_irr| vs step",
            "dt",
            "remainder",
            &table.column("dt"),
            &series(&[("remainder", false), ("fit", true)]),
            true,
        ),
        "cnot_flux" => svg::line_chart(
            "Information flux",
            "t",
            "flux",
            &table.column("t"),
            &series(&[
                ("F_Cx", false),
                ("F_dep_x", true),
                ("F_x", false),
                ("F_dep", true),
                ("F_total", false),
            ]),
            false,
        ),
        "blp" => {
            let mut names = vec![("blp_pm_z", false)];
            if table.column_index("blp_opt").is_some() {
                names.push(("blp_opt", true));
            }
            svg::line_chart(
                "BLP measure",
                "gamma",
                "BLP",
                &table.column("gamma"),
                &series(&names),
                false,
            )
        }
        "phase_diagram" => {
            let a = table.column("a");
            let gamma = table.column("gamma");
            let mut a_grid: Vec<f64> = a.clone();
            a_grid.dedup();
            let n_gamma = gamma.len() / a_grid.len().max(1);
            let classes: Vec<usize> = table.column("class").iter().map(|&c| c as usize).collect();
            let names = [
                DivisibilityLabel::Pd0,
                DivisibilityLabel::Pd1,
                DivisibilityLabel::Pd2,
            ]
            .map(|l| l.to_string());
            svg::cell_grid(
                "Divisibility phase diagram",
                "gamma",
                "a",
                &gamma[..n_gamma],
                &a_grid,
                &classes,
                &names.iter().map(String::as_str).collect::<Vec<_>>(),
            )
        }
        "simulate_trajectory" => {
            let names: Vec<&str> = table
                .headers
                .iter()
                .filter(|h| h.starts_with("F_"))
                .map(String::as_str)
                .collect();
            let series: Vec<Series> = names
                .iter()
                .map(|&n| Series {
                    name: n,
                    values: table.column(n),
                    dashed: n != "F_total",
                })
                .collect();
            svg::line_chart(
                "Information flux",
                "t",
                "flux",
                &table.column("t"),
                &series,
                false,
            )
        }
        _ => return None,
    };
    Some(Artifact::svg(&table.name, doc))
}
