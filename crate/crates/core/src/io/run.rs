//! Experiment dispatch: validates a [`RunConfig`], runs it and writes its artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve_with, steps_for, EvolveOptions};
use crate::experiments::{
    born_ensemble, gambler_oracle, limits_table, ruin_probability, scaling_sweep, LimitsTable,
    Measure,
};
use crate::noise::X0Source;
use crate::wavefunction::WaveFunction;

use super::config::{Experiment, RunConfig, DEFAULT_EVOLVE_RECORDS};
use super::output::{
    config_hash, recorded_config, snapshot_series, trajectory_series, write_artifacts, Series,
};

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: Experiment,
    pub config: RunConfig,
    pub config_sha256: String,
    pub summary: String,
    pub result: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveResult {
    pub kappa: f64,
    pub dt: f64,
    pub steps: u64,
    pub t_final: f64,
    pub log_norm: f64,
    pub x_mean: f64,
    pub spread: f64,
    pub region_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScaleResult {
    pub measure: Measure,
    pub kappa: f64,
    pub dt: f64,
    pub time: f64,
    /// `hbar / (4 kappa a^2)` for localization, `|X_i - X0| / (a Omega)` for relocation.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsResult {
    pub table: LimitsTable,
    pub loc_decreasing_in_n: bool,
    pub loc_growing_as_omega_shrinks: bool,
    pub reloc_growing_as_omega_shrinks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    #[serde(flatten)]
    pub monte_carlo: crate::experiments::OracleResult,
    /// Absorption probability from the exact birth-death solution.
    pub exact: f64,
}

/// Validates `config`, runs the experiment and writes its artifacts into `out_dir`.
/// Nothing is written unless the experiment succeeds.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let hash = config_hash(config)?;
    let exp = config.experiment;
    let stem = |part: &str| {
        let mut name = format!("series-{}", exp.name());
        if !part.is_empty() {
            name.push('-');
            name.push_str(part);
        }
        if let Some(seed) = config.seed {
            name.push_str(&format!("-seed{seed}"));
        }
        name.push('-');
        name.push_str(&hash[..12]);
        name
    };
    let (summary, result, series) = match exp {
        Experiment::Evolve => run_evolve(config, &stem)?,
        Experiment::Localization => run_timescale(config, Measure::Loc, &stem)?,
        Experiment::Relocation => run_timescale(config, Measure::Reloc, &stem)?,
        Experiment::Sweep => run_sweep(config, &stem)?,
        Experiment::Limits => run_limits(config, &stem)?,
        Experiment::Born => run_born(config, &stem)?,
        Experiment::Oracle => run_oracle(config, &stem)?,
    };
    let series: Vec<Series> = series
        .into_iter()
        .map(|s| {
            let s = match config.seed {
                Some(seed) => s.comment("seed", seed),
                None => s,
            };
            s.comment("dwell_steps", config.noise.dwell_steps)
                .comment("config_sha256", &hash)
        })
        .collect();
    let record = RunRecord {
        experiment: exp,
        config: recorded_config(config),
        config_sha256: hash,
        summary,
        result,
    };
    let files = write_artifacts(out_dir, &series, &record)?;
    Ok(RunOutcome { record, files })
}

type Produced = (String, serde_json::Value, Vec<Series>);

fn run_evolve(config: &RunConfig, stem: &dyn Fn(&str) -> String) -> Result<Produced> {
    let (spec, source) = config.evolve_spec()?;
    let psi = config.initial_state()?;
    let t_final = config.evolve_t_final();
    let steps = steps_for(t_final, spec.dt);
    let record_every = config
        .evolution
        .record_every
        .unwrap_or((steps / DEFAULT_EVOLVE_RECORDS).max(1));
    let opts = EvolveOptions {
        t_final,
        record_every,
        cuts: config.evolve_cuts(),
    };
    let (traj, state) = evolve_with(&psi, &spec, &opts, &source)?;
    let last = traj.len() - 1;
    let result = EvolveResult {
        kappa: spec.potential.kappa,
        dt: spec.dt,
        steps,
        t_final: traj.times[last],
        log_norm: traj.log_norms[last],
        x_mean: traj.x_means[last],
        spread: traj.spreads[last],
        region_weights: traj.region_weights.as_ref().map(|w| w[last].clone()),
    };
    let mut summary = format!(
        "evolve: t = {:.6e}, <X> = {:.6}, spread = {:.6}, ln norm = {:.6e}",
        result.t_final, result.x_mean, result.spread, result.log_norm
    );
    if let Some(w) = &result.region_weights {
        let cells: Vec<String> = w.iter().map(|v| format!("{v:.6}")).collect();
        summary.push_str(&format!(", region weights = [{}]", cells.join(", ")));
    }
    let series = vec![
        trajectory_series(&stem("trajectory"), &traj),
        snapshot_series(&stem("final-state"), &state),
    ];
    Ok((summary, serde_json::to_value(result)?, series))
}

fn run_timescale(
    config: &RunConfig,
    measure: Measure,
    stem: &dyn Fn(&str) -> String,
) -> Result<Produced> {
    let setup = config.timescale_setup()?;
    let spec = setup.spec()?;
    let time = setup.measure(measure)?;
    let every = setup.record_every(measure)?;
    let (psi, name) = match measure {
        Measure::Loc => (WaveFunction::uniform(setup.grid), "localization"),
        Measure::Reloc => (
            WaveFunction::gaussian(
                setup.grid,
                setup.x_init,
                setup.packet_width,
                0.0,
                setup.params.hbar,
            )?,
            "relocation",
        ),
    };
    let opts = EvolveOptions {
        t_final: time,
        record_every: every,
        cuts: Vec::new(),
    };
    let (traj, _) = evolve_with(&psi, &spec, &opts, &X0Source::fixed(setup.x0))?;
    let result = TimeScaleResult {
        measure,
        kappa: spec.potential.kappa,
        dt: spec.dt,
        time,
        estimate: setup.estimate(measure)?,
    };
    let summary = format!(
        "{name}: t = {:.6e} (estimate {:.6e}, ratio {:.4})",
        time,
        result.estimate,
        time / result.estimate
    );
    let series = vec![trajectory_series(&stem("trajectory"), &traj)];
    Ok((summary, serde_json::to_value(result)?, series))
}

fn run_sweep(config: &RunConfig, stem: &dyn Fn(&str) -> String) -> Result<Produced> {
    let base = config.timescale_setup()?;
    let sw = &config.sweep;
    let result = scaling_sweep(&base, sw.parameter, &sw.values, sw.measure)?;
    let mut s = Series::new(stem(""), &[sw.parameter.name(), "time"]);
    for (v, t) in result.values.iter().zip(&result.measured_times) {
        s.push(vec![*v, *t]);
    }
    let summary = format!(
        "sweep: t_{} ~ {}^{:.4} (prefactor {:.6e}, rms log residual {:.3e})",
        match sw.measure {
            Measure::Loc => "loc",
            Measure::Reloc => "reloc",
        },
        sw.parameter.name(),
        result.fitted_exponent,
        result.prefactor,
        result.fit_residual
    );
    Ok((summary, serde_json::to_value(result)?, vec![s]))
}

fn run_limits(config: &RunConfig, stem: &dyn Fn(&str) -> String) -> Result<Produced> {
    let base = config.timescale_setup()?;
    let l = &config.limits;
    let table = limits_table(&base, &l.n_values, &l.omega_values)?;
    let mut s = Series::new(stem(""), &["n_particles", "omega", "t_loc", "t_reloc"]);
    for (i, n) in table.n_values.iter().enumerate() {
        for (j, o) in table.omega_values.iter().enumerate() {
            s.push(vec![*n, *o, table.t_loc[i][j], table.t_reloc[i][j]]);
        }
    }
    let result = LimitsResult {
        loc_decreasing_in_n: table.loc_decreasing_in_n(),
        loc_growing_as_omega_shrinks: table.loc_growing_as_omega_shrinks(),
        reloc_growing_as_omega_shrinks: table.reloc_growing_as_omega_shrinks(),
        table,
    };
    let summary = format!(
        "limits: t_loc decreasing in N: {}, t_loc growing as Omega shrinks: {}, t_reloc growing as Omega shrinks: {}",
        result.loc_decreasing_in_n,
        result.loc_growing_as_omega_shrinks,
        result.reloc_growing_as_omega_shrinks
    );
    Ok((summary, serde_json::to_value(result)?, vec![s]))
}

fn require_seed(config: &RunConfig) -> Result<u64> {
    config
        .seed
        .ok_or_else(|| Error::config("this experiment needs an explicit seed"))
}

fn run_born(config: &RunConfig, stem: &dyn Fn(&str) -> String) -> Result<Produced> {
    let seed = require_seed(config)?;
    let setup = config.trial_setup()?;
    let b = config.born;
    let result = born_ensemble(b.alpha2, b.trials, seed, &setup)?;
    let mut s = Series::new(
        stem("trials"),
        &["trial", "seed", "selected_component", "collapse_time"],
    );
    for (i, o) in result.outcomes.iter().enumerate() {
        match o {
            Some(o) => s.push(vec![
                i as f64,
                o.seed as f64,
                o.selected_component as f64,
                o.collapse_time,
            ]),
            None => s.push(vec![i as f64, f64::NAN, f64::NAN, f64::NAN]),
        }
    }
    let summary = format!(
        "born: frequency {:.4} +/- {:.4} (alpha2 {}, {} collapsed, {} failed, mean collapse time {:.6e})",
        result.frequency,
        result.ci95,
        result.alpha2,
        result.collapsed,
        result.failed,
        result.mean_collapse_time
    );
    Ok((summary, serde_json::to_value(result)?, vec![s]))
}

fn run_oracle(config: &RunConfig, stem: &dyn Fn(&str) -> String) -> Result<Produced> {
    let seed = require_seed(config)?;
    let o = config.oracle;
    let monte_carlo = gambler_oracle(o.alpha2, o.trials, o.gain, seed, o.rule)?;
    let exact = ruin_probability(o.alpha2, o.gain, o.rule)?;
    let mut s = Series::new(
        stem(""),
        &["alpha2", "gain", "frequency", "ci95", "exact", "mean_steps"],
    );
    s.push(vec![
        o.alpha2,
        o.gain,
        monte_carlo.frequency,
        monte_carlo.ci95,
        exact,
        monte_carlo.mean_steps,
    ]);
    let summary = format!(
        "oracle: frequency {:.4} +/- {:.4} (alpha2 {}, exact {:.6}, gain {})",
        monte_carlo.frequency, monte_carlo.ci95, o.alpha2, exact, o.gain
    );
    let result = OracleRecord { monte_carlo, exact };
    Ok((summary, serde_json::to_value(result)?, vec![s]))
}
