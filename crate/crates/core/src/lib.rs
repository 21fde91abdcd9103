//! Non-Hermitian dynamics of the collective coordinate of a macroscopic object:
//! a split-operator integrator, fluctuating localization centres, collapse
//! time-scale measurements and Born-rule ensembles.

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod noise;
pub mod wavefunction;

pub use error::{Error, Result};
pub use evolution::{
    evolve, evolve_with, kinetic_step, potential_step, step, EvolutionSpec, EvolveOptions,
    PotentialKind, PotentialMode, Propagator, Trajectory,
};
pub use grid::{Grid, PhysicalParams};
pub use noise::{coupling_from, CouplingMode, CouplingSpec, NoiseMeasure, X0Source};
pub use wavefunction::WaveFunction;
