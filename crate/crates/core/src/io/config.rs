//! Declarative run configuration (TOML) and its validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionSpec, PotentialKind, PotentialMode};
use crate::experiments::born::{GamblerRule, TrialSetup, DEFAULT_THRESHOLD};
use crate::experiments::timescale::{check_log_spaced, Measure, SweepParameter, TimeScaleSetup};
use crate::experiments::{log_space, SweepParameter as Param};
use crate::grid::{Grid, PhysicalParams};
use crate::noise::{coupling_from, CouplingSpec, NoiseMeasure, X0Source};
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Evolve,
    Localization,
    Relocation,
    Sweep,
    Limits,
    Born,
    Oracle,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::Localization => "localization",
            Experiment::Relocation => "relocation",
            Experiment::Sweep => "sweep",
            Experiment::Limits => "limits",
            Experiment::Born => "born",
            Experiment::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default = "default_coupling")]
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub relocation: RelocationConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
    #[serde(default)]
    pub born: BornConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::Evolve,
            seed: None,
            out_dir: None,
            grid: GridConfig::default(),
            physics: PhysicsConfig::default(),
            coupling: default_coupling(),
            noise: NoiseConfig::default(),
            initial: InitialState::default(),
            evolution: EvolutionConfig::default(),
            relocation: RelocationConfig::default(),
            sweep: SweepConfig::default(),
            limits: LimitsConfig::default(),
            born: BornConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

fn default_coupling() -> CouplingSpec {
    CouplingSpec::omega(0.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub spacing: f64,
    /// Coordinate of site 0; the grid is centred on 0 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_points: 1024,
            spacing: 1.0,
            origin: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub n_particles: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            n_particles: 100.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub dwell_steps: u64,
    pub measure: NoiseMeasure,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            dwell_steps: 1,
            measure: NoiseMeasure::NormWeighted,
        }
    }
}

/// Initial state of `evolve` runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Uniform,
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        momentum: f64,
    },
    TwoPackets {
        alpha2: f64,
        x1: f64,
        x2: f64,
        width: f64,
    },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::TwoPackets {
            alpha2: 0.5,
            x1: -5.0,
            x2: 20.0,
            width: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub potential: PotentialKind,
    pub x0: f64,
    pub kinetic: bool,
    pub renormalize: bool,
    /// Step size; when absent, the largest step within the stability bound
    /// that divides the `evolve` duration evenly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Final time of `evolve`, or the time limit of the measurements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
    /// Region boundaries for `evolve`; the packet midpoint for two-packet starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Vec<f64>>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            potential: PotentialKind::NonHermitianFixed,
            x0: 0.0,
            kinetic: true,
            renormalize: true,
            dt: None,
            t_max: None,
            record_every: None,
            cuts: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelocationConfig {
    pub x_init: f64,
    pub width: f64,
}

impl Default for RelocationConfig {
    fn default() -> Self {
        RelocationConfig {
            x_init: 10.0,
            width: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub measure: Measure,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            parameter: Param::Omega,
            measure: Measure::Loc,
            values: log_space(0.1, 0.4, 5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub n_values: Vec<f64>,
    pub omega_values: Vec<f64>,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        LimitsConfig {
            n_values: vec![4.0, 8.0, 16.0],
            omega_values: vec![0.25, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornConfig {
    pub alpha2: f64,
    pub trials: usize,
    pub x1: f64,
    pub x2: f64,
    pub width: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_every: Option<u64>,
}

impl Default for BornConfig {
    fn default() -> Self {
        BornConfig {
            alpha2: 0.64,
            trials: 2000,
            x1: -20.0,
            x2: 20.0,
            width: 4.0,
            threshold: DEFAULT_THRESHOLD,
            check_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub alpha2: f64,
    pub trials: usize,
    pub gain: f64,
    pub rule: GamblerRule,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            alpha2: 0.64,
            trials: 10_000,
            gain: 0.01,
            rule: GamblerRule::NormProportional,
        }
    }
}

/// Final time of `evolve` when `evolution.t_max` is absent.
pub const DEFAULT_EVOLVE_T: f64 = 0.25;

/// Records per `evolve` run when `evolution.record_every` is absent.
pub const DEFAULT_EVOLVE_RECORDS: u64 = 1000;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self.grid;
        match g.origin {
            Some(origin) => Grid::new(g.n_points, g.spacing, origin),
            None => Grid::centered(g.n_points, g.spacing),
        }
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(
            self.physics.n_particles,
            self.physics.mass,
            self.physics.hbar,
        )
    }

    pub fn kappa(&self) -> Result<f64> {
        coupling_from(&self.coupling, &self.params()?)
    }

    pub fn is_stochastic(&self) -> bool {
        match self.experiment {
            Experiment::Born | Experiment::Oracle => true,
            Experiment::Evolve => self.evolution.potential.is_stochastic(),
            _ => false,
        }
    }

    pub fn timescale_setup(&self) -> Result<TimeScaleSetup> {
        Ok(TimeScaleSetup {
            grid: self.grid()?,
            params: self.params()?,
            coupling: self.coupling,
            kinetic_enabled: self.evolution.kinetic,
            x0: self.evolution.x0,
            x_init: self.relocation.x_init,
            packet_width: self.relocation.width,
            dt: self.evolution.dt,
            t_max: self.evolution.t_max,
        })
    }

    pub fn trial_setup(&self) -> Result<TrialSetup> {
        Ok(TrialSetup {
            grid: self.grid()?,
            params: self.params()?,
            coupling: self.coupling,
            kinetic_enabled: self.evolution.kinetic,
            x1: self.born.x1,
            x2: self.born.x2,
            width: self.born.width,
            threshold: self.born.threshold,
            dwell_steps: self.noise.dwell_steps,
            measure: self.noise.measure,
            dt: self.evolution.dt,
            t_max: self.evolution.t_max,
            check_every: self.born.check_every,
        })
    }

    /// Potential, step size and centre source of an `evolve` run.
    pub fn evolve_spec(&self) -> Result<(EvolutionSpec, X0Source)> {
        let grid = self.grid()?;
        let params = self.params()?;
        let kind = self.evolution.potential;
        let kappa = if kind == PotentialKind::None {
            0.0
        } else {
            self.kappa()?
        };
        let x0 = self.evolution.x0;
        let mode = match kind {
            PotentialKind::NonHermitianFixed => PotentialMode::non_hermitian(kappa, x0),
            PotentialKind::NonHermitianStochastic => PotentialMode::stochastic(kappa),
            PotentialKind::HermitianFixed => PotentialMode::hermitian(kappa, x0),
            PotentialKind::None => PotentialMode::free(),
        };
        let source = if kind.is_stochastic() {
            let seed = self
                .seed
                .ok_or_else(|| Error::config("a stochastic evolve run needs an explicit seed"))?;
            X0Source::white_noise(seed)
                .with_dwell(self.noise.dwell_steps)
                .with_measure(self.noise.measure)
        } else {
            X0Source::fixed(x0)
        };
        let dt = match self.evolution.dt {
            Some(dt) => dt,
            None if kappa > 0.0 => {
                let probe = EvolutionSpec::new(params, mode, 1.0);
                let bound = EvolutionSpec::stable_dt(kappa, params.hbar, probe.max_distance(&grid));
                let t = self.evolve_t_final();
                t / (t / bound).ceil()
            }
            None => {
                return Err(Error::config(
                    "evolution.dt is required when the potential is inactive",
                ))
            }
        };
        let spec = EvolutionSpec::new(params, mode, dt)
            .with_kinetic(self.evolution.kinetic)
            .with_renormalize(self.evolution.renormalize);
        spec.validate(&grid)?;
        source.validate(&grid)?;
        Ok((spec, source))
    }

    pub fn evolve_t_final(&self) -> f64 {
        self.evolution.t_max.unwrap_or(DEFAULT_EVOLVE_T)
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        let grid = self.grid()?;
        let hbar = self.physics.hbar;
        match self.initial {
            InitialState::Uniform => Ok(WaveFunction::uniform(grid)),
            InitialState::Gaussian {
                center,
                width,
                momentum,
            } => WaveFunction::gaussian(grid, center, width, momentum, hbar),
            InitialState::TwoPackets {
                alpha2,
                x1,
                x2,
                width,
            } => WaveFunction::two_packets(grid, alpha2, x1, x2, width, hbar),
        }
    }

    pub fn evolve_cuts(&self) -> Vec<f64> {
        match (&self.evolution.cuts, self.initial) {
            (Some(c), _) => c.clone(),
            (None, InitialState::TwoPackets { x1, x2, .. }) => vec![0.5 * (x1 + x2)],
            (None, _) => Vec::new(),
        }
    }

    /// Every violated invariant of the configuration, without running anything.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut note = |r: Result<()>| {
            if let Err(e) = r {
                out.push(message(&e));
            }
        };
        let grid = self.grid();
        note(grid.as_ref().map(|_| ()).map_err(clone_err));
        note(self.params().map(|_| ()));
        note(self.kappa().map(|_| ()));
        if self.noise.dwell_steps == 0 {
            note(Err(Error::config("noise.dwell_steps must be at least 1")));
        }
        if self.is_stochastic() && self.seed.is_none() {
            note(Err(Error::config(format!(
                "the {} experiment is stochastic and needs an explicit seed (--seed or `seed = ...`)",
                self.experiment.name()
            ))));
        }
        if let Some(dt) = self.evolution.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                note(Err(Error::config(format!(
                    "evolution.dt must be positive (got {dt})"
                ))));
            }
        }
        if let Some(t) = self.evolution.t_max {
            if !(t > 0.0 && t.is_finite()) {
                note(Err(Error::config(format!(
                    "evolution.t_max must be positive (got {t})"
                ))));
            }
        }
        if self.evolution.record_every == Some(0) {
            note(Err(Error::config(
                "evolution.record_every must be at least 1",
            )));
        }
        let Ok(grid) = grid else {
            return out;
        };
        let packet = |center: f64, width: f64, what: &str| -> Result<()> {
            if width < grid.spacing() {
                return Err(Error::config(format!(
                    "{what} width {width} is below the lattice spacing {}",
                    grid.spacing()
                )));
            }
            if !grid.contains(center) {
                return Err(Error::config(format!(
                    "{what} centre {center} outside the grid [{}, {})",
                    grid.origin(),
                    grid.end()
                )));
            }
            Ok(())
        };
        match self.experiment {
            Experiment::Evolve => {
                match self.initial {
                    InitialState::Uniform => {}
                    InitialState::Gaussian { center, width, .. } => {
                        note(packet(center, width, "initial packet"))
                    }
                    InitialState::TwoPackets {
                        alpha2,
                        x1,
                        x2,
                        width,
                    } => {
                        note(packet(x1, width, "initial packet 1"));
                        note(packet(x2, width, "initial packet 2"));
                        if !(0.0..=1.0).contains(&alpha2) {
                            note(Err(Error::config(format!(
                                "initial alpha2 must lie in [0, 1] (got {alpha2})"
                            ))));
                        }
                    }
                }
                if let Some(cuts) = &self.evolution.cuts {
                    note(crate::wavefunction::validate_cuts(&grid, cuts));
                }
                if !self.is_stochastic() || self.seed.is_some() {
                    note(self.evolve_spec().map(|_| ()));
                }
            }
            Experiment::Localization | Experiment::Relocation => {
                if self.experiment == Experiment::Relocation {
                    note(packet(
                        self.relocation.x_init,
                        self.relocation.width,
                        "relocation packet",
                    ));
                }
                note(self.timescale_setup().and_then(|s| s.spec()).map(|_| ()));
            }
            Experiment::Sweep => {
                note(check_log_spaced(&self.sweep.values, 4, "sweep"));
                if let Ok(base) = self.timescale_setup() {
                    for v in &self.sweep.values {
                        note(base.with(self.sweep.parameter, *v).and_then(|s| {
                            if self.sweep.measure == Measure::Reloc {
                                packet(s.x_init, s.packet_width, "relocation packet")?;
                            }
                            s.spec().map(|_| ())
                        }));
                    }
                }
            }
            Experiment::Limits => {
                note(check_log_spaced(
                    &self.limits.n_values,
                    3,
                    "limits n_values",
                ));
                note(check_log_spaced(
                    &self.limits.omega_values,
                    3,
                    "limits omega_values",
                ));
                note(packet(
                    self.relocation.x_init,
                    self.relocation.width,
                    "relocation packet",
                ));
                if let Ok(base) = self.timescale_setup() {
                    for n in &self.limits.n_values {
                        for o in &self.limits.omega_values {
                            note(
                                base.with(Param::N, *n)
                                    .and_then(|s| s.with(Param::Omega, *o))
                                    .and_then(|s| s.spec())
                                    .map(|_| ()),
                            );
                        }
                    }
                }
            }
            Experiment::Born => {
                let b = self.born;
                if !(b.alpha2 > 0.0 && b.alpha2 < 1.0) {
                    note(Err(Error::config(format!(
                        "born.alpha2 must lie in (0, 1) (got {})",
                        b.alpha2
                    ))));
                }
                if b.trials < 100 {
                    note(Err(Error::config(format!(
                        "born.trials must be at least 100 (got {})",
                        b.trials
                    ))));
                }
                note(packet(b.x1, b.width, "born packet 1"));
                note(packet(b.x2, b.width, "born packet 2"));
                note(self.trial_setup().and_then(|s| s.validate()));
            }
            Experiment::Oracle => {
                let o = self.oracle;
                if !(o.alpha2 > 0.0 && o.alpha2 < 1.0) {
                    note(Err(Error::config(format!(
                        "oracle.alpha2 must lie in (0, 1) (got {})",
                        o.alpha2
                    ))));
                }
                if !(o.gain > 0.0 && o.gain < 1.0) {
                    note(Err(Error::config(format!(
                        "oracle.gain must lie in (0, 1) (got {})",
                        o.gain
                    ))));
                }
                if o.trials == 0 {
                    note(Err(Error::config("oracle.trials must be at least 1")));
                }
            }
        }
        out.dedup();
        out
    }

    /// Fails with all diagnostics joined when any invariant is violated.
    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(Error::config(d.join("; ")))
        }
    }
}

fn clone_err(e: &Error) -> Error {
    Error::config(message(e))
}

fn message(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
