//! Run configuration. All quantities are in natural units with hbar = k_B = 1; temperatures
//! enter only through inverse temperatures `beta`.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use fluxlab_core::models::protocol::ProtocolParams;
use fluxlab_core::models::CnotParams;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Protocol,
    CnotFlux,
    PhaseDiagram,
    Blp,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Protocol => "protocol",
            Self::CnotFlux => "cnot-flux",
            Self::PhaseDiagram => "phase-diagram",
            Self::Blp => "blp",
            Self::Simulate => "simulate",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        [
            Self::Protocol,
            Self::CnotFlux,
            Self::PhaseDiagram,
            Self::Blp,
            Self::Simulate,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub parameters: Parameters,
    pub output_dir: Option<PathBuf>,
    pub emit_svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parameters {
    Protocol(ProtocolConfig),
    CnotFlux(CnotFluxConfig),
    PhaseDiagram(PhaseDiagramConfig),
    Blp(BlpConfig),
    Simulate(SimulateConfig),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<P> {
    /// Checked by `parse_config` before the typed pass.
    #[serde(default, rename = "command")]
    _command: Option<String>,
    parameters: Option<P>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    emit_svg: bool,
}

trait CommandParams: DeserializeOwned + Sized {
    /// Parameters used when the document has no `parameters` object.
    fn fallback() -> Option<Self>;
    fn validate(&self) -> Result<()>;
}

/// Parses a JSON config. When `expected` is given, a `command` field in the document must
/// agree with it; otherwise the document must name its command.
pub fn parse_config(text: &str, expected: Option<Command>) -> Result<RunConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::config("", e.to_string()))?;
    let declared = match value.get("command") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(name)) => {
            Some(Command::parse(name).ok_or_else(|| {
                CliError::config("command", format!("unknown command \"{name}\""))
            })?)
        }
        Some(_) => return Err(CliError::config("command", "expected a string")),
    };
    let command = match (expected, declared) {
        (Some(e), Some(d)) if e != d => {
            return Err(CliError::config(
                "command",
                format!("config is for \"{d}\" but \"{e}\" was requested"),
            ))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(CliError::config("command", "missing")),
    };
    let (parameters, output_dir, emit_svg) = match command {
        Command::Protocol => {
            load::<ProtocolConfig>(text).map(|(p, o, s)| (Parameters::Protocol(p), o, s))?
        }
        Command::CnotFlux => {
            load::<CnotFluxConfig>(text).map(|(p, o, s)| (Parameters::CnotFlux(p), o, s))?
        }
        Command::PhaseDiagram => {
            load::<PhaseDiagramConfig>(text).map(|(p, o, s)| (Parameters::PhaseDiagram(p), o, s))?
        }
        Command::Blp => load::<BlpConfig>(text).map(|(p, o, s)| (Parameters::Blp(p), o, s))?,
        Command::Simulate => {
            load::<SimulateConfig>(text).map(|(p, o, s)| (Parameters::Simulate(p), o, s))?
        }
    };
    Ok(RunConfig {
        command,
        parameters,
        output_dir,
        emit_svg,
    })
}

fn load<P: CommandParams>(text: &str) -> Result<(P, Option<PathBuf>, bool)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document<P> = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(
            if path == "." { String::new() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    let parameters = match doc.parameters {
        Some(p) => p,
        None => P::fallback().ok_or_else(|| CliError::config("parameters", "missing"))?,
    };
    parameters.validate()?;
    Ok((parameters, doc.output_dir, doc.emit_svg))
}

fn field(name: &str) -> String {
    format!("parameters.{name}")
}

fn require(ok: bool, name: &str, message: impl fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(field(name), message.to_string()))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    require(v.is_finite(), name, format!("{name} must be finite"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    require(
        v.is_finite() && v > 0.0,
        name,
        format!("{name} must be > 0"),
    )
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    require(
        v.is_finite() && v >= 0.0,
        name,
        format!("{name} must be >= 0"),
    )
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    require(
        v.is_finite() && (0.0..=1.0).contains(&v),
        name,
        format!("{name} out of [0,1]"),
    )
}

fn compute_to_config(e: fluxlab_core::Error) -> CliError {
    CliError::config("parameters", e.to_string())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub e_a: f64,
    pub e_b: f64,
    pub p_a: f64,
    pub beta: f64,
    pub q0_frac: f64,
    /// Defaults to the Boltzmann value `q0_frac exp(-beta (e_a - e_b))`.
    pub q1_frac: Option<f64>,
    pub gamma: f64,
    pub dts: Vec<f64>,
    /// Finite contact times for the bipartite identity; defaults to `{0.1, 0.5, 1} / gamma`.
    pub evolution_times: Option<Vec<f64>>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let p = ProtocolParams::default();
        Self {
            e_a: p.e_a,
            e_b: p.e_b,
            p_a: p.p_a,
            beta: p.beta,
            q0_frac: p.q0_frac,
            q1_frac: None,
            gamma: p.gamma,
            dts: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            evolution_times: None,
        }
    }
}

impl ProtocolConfig {
    pub fn params(&self, dt: f64) -> ProtocolParams {
        let mut p = ProtocolParams::with_boltzmann_q1(
            self.e_a,
            self.e_b,
            self.p_a,
            self.beta,
            self.q0_frac,
            self.gamma,
            dt,
        );
        if let Some(q1) = self.q1_frac {
            p.q1_frac = q1;
        }
        p
    }

    pub fn evolution_times(&self) -> Vec<f64> {
        self.evolution_times
            .clone()
            .unwrap_or_else(|| [0.1, 0.5, 1.0].iter().map(|x| x / self.gamma).collect())
    }
}

impl CommandParams for ProtocolConfig {
    fn fallback() -> Option<Self> {
        Some(Self::default())
    }

    fn validate(&self) -> Result<()> {
        finite("e_a", self.e_a)?;
        finite("e_b", self.e_b)?;
        unit_interval("p_a", self.p_a)?;
        positive("beta", self.beta)?;
        unit_interval("q0_frac", self.q0_frac)?;
        if let Some(q1) = self.q1_frac {
            unit_interval("q1_frac", q1)?;
        }
        positive("gamma", self.gamma)?;
        require(
            self.dts.len() >= 4,
            "dts",
            "at least 4 time steps are needed for the scaling fit",
        )?;
        for (k, &dt) in self.dts.iter().enumerate() {
            positive(&format!("dts[{k}]"), dt)?;
        }
        let (lo, hi) = self
            .dts
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &dt| {
                (lo.min(dt), hi.max(dt))
            });
        require(
            hi >= 100.0 * lo,
            "dts",
            "time steps must span at least two decades",
        )?;
        for (k, &t) in self.evolution_times().iter().enumerate() {
            non_negative(&format!("evolution_times[{k}]"), t)?;
        }
        self.params(self.dts[0])
            .validate()
            .map_err(compute_to_config)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CnotFluxConfig {
    pub a: f64,
    pub gamma: f64,
    pub j_coupling: f64,
    pub theta0: f64,
    pub phi0: f64,
    pub r0: f64,
    pub t_min: f64,
    /// Defaults to `4 pi / j_coupling`.
    pub t_max: Option<f64>,
    pub samples: usize,
    pub step: f64,
}

impl Default for CnotFluxConfig {
    fn default() -> Self {
        let p = CnotParams::default();
        Self {
            a: p.a,
            gamma: p.gamma,
            j_coupling: p.j_coupling,
            theta0: p.theta0,
            phi0: p.phi0,
            r0: p.r0,
            t_min: fluxlab_core::thermoflux::DEFAULT_T_MIN,
            t_max: None,
            samples: 4000,
            step: fluxlab_core::lindblad::DEFAULT_STEP,
        }
    }
}

impl CnotFluxConfig {
    pub fn params(&self) -> CnotParams {
        CnotParams {
            a: self.a,
            gamma: self.gamma,
            j_coupling: self.j_coupling,
            theta0: self.theta0,
            phi0: self.phi0,
            r0: self.r0,
        }
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or(4.0 * PI / self.j_coupling)
    }

    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.t_min, self.t_max());
        (0..self.samples)
            .map(|k| lo + (hi - lo) * k as f64 / (self.samples - 1) as f64)
            .collect()
    }
}

impl CommandParams for CnotFluxConfig {
    fn fallback() -> Option<Self> {
        Some(Self::default())
    }

    fn validate(&self) -> Result<()> {
        unit_interval("a", self.a)?;
        non_negative("gamma", self.gamma)?;
        positive("j_coupling", self.j_coupling)?;
        finite("theta0", self.theta0)?;
        finite("phi0", self.phi0)?;
        unit_interval("r0", self.r0)?;
        positive("t_min", self.t_min)?;
        require(
            self.t_max().is_finite() && self.t_max() > self.t_min,
            "t_max",
            "t_max must exceed t_min",
        )?;
        require(self.samples >= 8, "samples", "samples must be >= 8")?;
        positive("step", self.step)?;
        self.params().validate().map_err(compute_to_config)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseDiagramConfig {
    /// Explicit `a` values; otherwise `a_points` evenly spaced values on `[0, 1]`.
    pub a_values: Option<Vec<f64>>,
    pub a_points: usize,
    /// Explicit `gamma` values; otherwise `gamma_max k / gamma_points` for `k = 1..=gamma_points`.
    pub gamma_values: Option<Vec<f64>>,
    pub gamma_max: f64,
    pub gamma_points: usize,
    pub j_coupling: f64,
    pub resolution: usize,
    pub rate_tol: f64,
    pub spot_check_stride: Option<usize>,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        Self {
            a_values: None,
            a_points: 101,
            gamma_values: None,
            gamma_max: 1.0,
            gamma_points: 200,
            j_coupling: 1.0,
            resolution: 4000,
            rate_tol: 1e-12,
            spot_check_stride: None,
        }
    }
}

impl PhaseDiagramConfig {
    pub fn a_grid(&self) -> Vec<f64> {
        self.a_values.clone().unwrap_or_else(|| {
            let n = self.a_points;
            (0..n)
                .map(|i| {
                    if n == 1 {
                        0.0
                    } else {
                        i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        })
    }

    pub fn gamma_grid(&self) -> Vec<f64> {
        self.gamma_values.clone().unwrap_or_else(|| {
            (1..=self.gamma_points)
                .map(|k| self.gamma_max * k as f64 / self.gamma_points as f64)
                .collect()
        })
    }
}

impl CommandParams for PhaseDiagramConfig {
    fn fallback() -> Option<Self> {
        Some(Self::default())
    }

    fn validate(&self) -> Result<()> {
        match &self.a_values {
            Some(values) => {
                require(!values.is_empty(), "a_values", "a_values must not be empty")?;
                for (k, &a) in values.iter().enumerate() {
                    unit_interval(&format!("a_values[{k}]"), a)?;
                }
            }
            None => require(self.a_points >= 1, "a_points", "a_points must be >= 1")?,
        }
        match &self.gamma_values {
            Some(values) => {
                require(
                    !values.is_empty(),
                    "gamma_values",
                    "gamma_values must not be empty",
                )?;
                for (k, &g) in values.iter().enumerate() {
                    non_negative(&format!("gamma_values[{k}]"), g)?;
                }
            }
            None => {
                positive("gamma_max", self.gamma_max)?;
                require(
                    self.gamma_points >= 1,
                    "gamma_points",
                    "gamma_points must be >= 1",
                )?;
            }
        }
        positive("j_coupling", self.j_coupling)?;
        require(
            self.resolution >= 2,
            "resolution",
            "resolution must be >= 2",
        )?;
        non_negative("rate_tol", self.rate_tol)?;
        if let Some(stride) = self.spot_check_stride {
            require(
                stride >= 1,
                "spot_check_stride",
                "spot_check_stride must be >= 1",
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlpConfig {
    pub a: f64,
    pub j_coupling: f64,
    pub gamma_values: Vec<f64>,
    /// Time step of the distance grid on `[0, horizon_gamma / gamma]`.
    pub grid_step: f64,
    pub horizon_gamma: f64,
    /// Also maximize over antipodal pure pairs on a `pair_grid` (theta x phi) grid.
    pub optimize: bool,
    pub pair_grid: (usize, usize),
}

impl Default for BlpConfig {
    fn default() -> Self {
        Self {
            a: 0.3,
            j_coupling: 1.0,
            gamma_values: (1..=24).map(|k| 0.025 * k as f64).collect(),
            grid_step: 0.01,
            horizon_gamma: fluxlab_core::measures::DEFAULT_HORIZON_GAMMA,
            optimize: false,
            pair_grid: fluxlab_core::measures::DEFAULT_PAIR_GRID,
        }
    }
}

impl BlpConfig {
    pub fn params(&self, gamma: f64) -> CnotParams {
        CnotParams {
            a: self.a,
            gamma,
            j_coupling: self.j_coupling,
            ..CnotParams::default()
        }
    }

    pub fn grid(&self, gamma: f64) -> Vec<f64> {
        let horizon = self.horizon_gamma / gamma;
        let n = (horizon / self.grid_step).ceil().max(8.0) as usize;
        (0..=n).map(|k| horizon * k as f64 / n as f64).collect()
    }
}

impl CommandParams for BlpConfig {
    fn fallback() -> Option<Self> {
        Some(Self::default())
    }

    fn validate(&self) -> Result<()> {
        unit_interval("a", self.a)?;
        positive("j_coupling", self.j_coupling)?;
        require(
            !self.gamma_values.is_empty(),
            "gamma_values",
            "gamma_values must not be empty",
        )?;
        for (k, &g) in self.gamma_values.iter().enumerate() {
            positive(&format!("gamma_values[{k}]"), g)?;
        }
        positive("grid_step", self.grid_step)?;
        positive("horizon_gamma", self.horizon_gamma)?;
        require(
            self.pair_grid.0 >= 1 && self.pair_grid.1 >= 1,
            "pair_grid",
            "pair_grid entries must be >= 1",
        )
    }
}

/// Complex matrix given as real and (optional) imaginary parts, row by row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn dim(&self) -> usize {
        self.re.len()
    }

    fn check(&self, name: &str, dim: usize) -> Result<()> {
        let square = |m: &Vec<Vec<f64>>| m.len() == dim && m.iter().all(|row| row.len() == dim);
        require(
            square(&self.re),
            name,
            format!("{name}.re must be {dim}x{dim}"),
        )?;
        if let Some(im) = &self.im {
            require(square(im), name, format!("{name}.im must be {dim}x{dim}"))?;
        }
        let all_finite = self
            .re
            .iter()
            .chain(self.im.iter().flatten())
            .flatten()
            .all(|v| v.is_finite());
        require(all_finite, name, format!("{name} entries must be finite"))
    }

    pub fn to_matrix(&self) -> fluxlab_core::qcore::CMatrix {
        let d = self.dim();
        fluxlab_core::qcore::CMatrix::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            fluxlab_core::qcore::C64::new(self.re[i][j], im)
        })
    }
}

/// `amplitude cos(frequency t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Modulation {
    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).cos()
    }

    fn check(&self, name: &str) -> Result<()> {
        let ok = self.amplitude.is_finite() && self.frequency.is_finite() && self.phase.is_finite();
        require(ok, name, format!("{name} fields must be finite"))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub operator: MatrixSpec,
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl DriveSpec {
    pub fn modulation(&self) -> Modulation {
        Modulation {
            amplitude: self.amplitude,
            frequency: self.frequency,
            phase: self.phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    #[serde(rename = "static")]
    pub static_part: MatrixSpec,
    #[serde(default)]
    pub drives: Vec<DriveSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub label: String,
    pub operator: MatrixSpec,
    /// Constant part of the rate.
    pub rate: f64,
    #[serde(default)]
    pub modulation: Option<Modulation>,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub hamiltonian: HamiltonianSpec,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
    pub initial_state: MatrixSpec,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default = "default_simulate_samples")]
    pub samples: usize,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_simulate_samples() -> usize {
    501
}

fn default_step() -> f64 {
    fluxlab_core::lindblad::DEFAULT_STEP
}

impl SimulateConfig {
    pub fn dim(&self) -> usize {
        self.hamiltonian.static_part.dim()
    }

    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.t_start, self.t_end);
        (0..self.samples)
            .map(|k| lo + (hi - lo) * k as f64 / (self.samples - 1) as f64)
            .collect()
    }
}

impl CommandParams for SimulateConfig {
    fn fallback() -> Option<Self> {
        None
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        require(
            d >= 1,
            "hamiltonian.static",
            "hamiltonian must be at least 1x1",
        )?;
        self.hamiltonian
            .static_part
            .check("hamiltonian.static", d)?;
        for (k, drive) in self.hamiltonian.drives.iter().enumerate() {
            let name = format!("hamiltonian.drives[{k}]");
            drive.operator.check(&format!("{name}.operator"), d)?;
            drive.modulation().check(&name)?;
        }
        self.initial_state.check("initial_state", d)?;
        let mut labels = std::collections::BTreeSet::new();
        for (k, ch) in self.channels.iter().enumerate() {
            let name = format!("channels[{k}]");
            require(
                !ch.label.is_empty(),
                &format!("{name}.label"),
                "label must not be empty",
            )?;
            require(
                labels.insert(ch.label.as_str()),
                &format!("{name}.label"),
                format!("duplicate label \"{}\"", ch.label),
            )?;
            ch.operator.check(&format!("{name}.operator"), d)?;
            finite(&format!("{name}.rate"), ch.rate)?;
            if let Some(m) = &ch.modulation {
                m.check(&format!("{name}.modulation"))?;
            }
            non_negative(&format!("{name}.beta"), ch.beta)?;
        }
        finite("t_start", self.t_start)?;
        require(
            self.t_end.is_finite() && self.t_end > self.t_start,
            "t_end",
            "t_end must exceed t_start",
        )?;
        require(self.samples >= 2, "samples", "samples must be >= 2")?;
        positive("step", self.step)
    }
}
