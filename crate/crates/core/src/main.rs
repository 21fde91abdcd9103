use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use collapse_core::io::{run, Experiment, InitialState, RunConfig};
use collapse_core::{CouplingMode, Error};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "COLLAPSE_LAB_OUT";
const DEFAULT_OUT: &str = "collapse-out";

#[derive(Parser)]
#[command(
    name = "collapse-lab",
    version,
    about = "Non-Hermitian collapse dynamics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one state and record its trajectory
    Evolve(Overrides),
    /// Time for a uniform state to shrink to one lattice spacing
    Localization(Overrides),
    /// Time for a displaced packet's mean to reach the centre
    Relocation(Overrides),
    /// Power-law fit of a time scale over a log-spaced parameter sweep
    Sweep(Overrides),
    /// Localization and relocation times over an (N, Omega) grid
    Limits(Overrides),
    /// Stochastic collapse ensemble of a two-packet superposition
    Born(Overrides),
    /// Discrete gambler's-ruin model of the collapse race
    Oracle(Overrides),
    /// List every problem with a configuration without running it
    Validate(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: $COLLAPSE_LAB_OUT, then ./collapse-out]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    n_particles: Option<f64>,
    #[arg(long)]
    gain: Option<f64>,
    #[arg(long)]
    dwell_steps: Option<u64>,
    #[arg(long)]
    n_points: Option<usize>,
}

fn resolve(experiment: Option<Experiment>, o: &Overrides) -> Result<RunConfig, Error> {
    let mut c = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(e) = experiment {
        c.experiment = e;
    }
    if o.seed.is_some() {
        c.seed = o.seed;
    }
    if o.out.is_some() {
        c.out_dir = o.out.clone();
    }
    if let Some(t) = o.trials {
        c.born.trials = t;
        c.oracle.trials = t;
    }
    if o.t_max.is_some() {
        c.evolution.t_max = o.t_max;
    }
    if o.dt.is_some() {
        c.evolution.dt = o.dt;
    }
    if let Some(a) = o.alpha2 {
        c.born.alpha2 = a;
        c.oracle.alpha2 = a;
        if let InitialState::TwoPackets { alpha2, .. } = &mut c.initial {
            *alpha2 = a;
        }
    }
    if let Some(w) = o.omega {
        if c.coupling.mode != CouplingMode::Omega {
            return Err(Error::config("--omega needs the omega coupling mode"));
        }
        c.coupling.omega = w;
    }
    if let Some(n) = o.n_particles {
        c.physics.n_particles = n;
    }
    if let Some(g) = o.gain {
        c.oracle.gain = g;
    }
    if let Some(d) = o.dwell_steps {
        c.noise.dwell_steps = d;
    }
    if let Some(n) = o.n_points {
        c.grid.n_points = n;
    }
    Ok(c)
}

fn out_dir(c: &RunConfig) -> PathBuf {
    c.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, overrides) = match &cli.command {
        Command::Evolve(o) => (Some(Experiment::Evolve), o),
        Command::Localization(o) => (Some(Experiment::Localization), o),
        Command::Relocation(o) => (Some(Experiment::Relocation), o),
        Command::Sweep(o) => (Some(Experiment::Sweep), o),
        Command::Limits(o) => (Some(Experiment::Limits), o),
        Command::Born(o) => (Some(Experiment::Born), o),
        Command::Oracle(o) => (Some(Experiment::Oracle), o),
        Command::Validate(o) => (None, o),
    };
    let config = match resolve(experiment, overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if experiment.is_none() {
        let diagnostics = config.diagnostics();
        if diagnostics.is_empty() {
            println!("{}: configuration is valid", config.experiment.name());
            return ExitCode::SUCCESS;
        }
        for d in &diagnostics {
            eprintln!("invalid configuration: {d}");
        }
        return ExitCode::from(2);
    }
    let dir = out_dir(&config);
    match run(&config, &dir) {
        Ok(outcome) => {
            println!("{}", outcome.record.summary);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
