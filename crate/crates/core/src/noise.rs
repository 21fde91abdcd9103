//! Localization centre sources and the mapping of physical couplings onto the
//! single quadratic coupling `kappa` used by the integrator.
//!
//! White-noise centres come from a counter-based stream: the value for a step
//! is a pure function of `(seed, step_index / dwell_steps)`, so ensembles give
//! identical results whatever order or thread their trials run on.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, PhysicalParams};

/// How candidate centres drawn from the white-noise stream are turned into the
/// centre actually applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMeasure {
    /// Every candidate is applied as drawn.
    Uniform,
    /// A candidate `X0` is accepted with probability
    /// `||K(X0) psi||^2 / ||psi||^2`, where `K(X0)` is the localization factor
    /// for the dwell block. Realizations are then weighted by the norm they
    /// produce, which makes relative component weights a martingale.
    #[default]
    NormWeighted,
}

/// Source of the localization centre `X0` for each integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum X0Source {
    Fixed {
        value: f64,
    },
    WhiteNoise {
        seed: u64,
        #[serde(default = "default_dwell")]
        dwell_steps: u64,
        #[serde(default)]
        measure: NoiseMeasure,
    },
}

fn default_dwell() -> u64 {
    1
}

impl X0Source {
    pub fn fixed(value: f64) -> Self {
        X0Source::Fixed { value }
    }

    pub fn white_noise(seed: u64) -> Self {
        X0Source::WhiteNoise {
            seed,
            dwell_steps: 1,
            measure: NoiseMeasure::NormWeighted,
        }
    }

    pub fn with_measure(self, measure: NoiseMeasure) -> Self {
        match self {
            X0Source::WhiteNoise {
                seed, dwell_steps, ..
            } => X0Source::WhiteNoise {
                seed,
                dwell_steps,
                measure,
            },
            fixed => fixed,
        }
    }

    pub fn with_dwell(self, dwell: u64) -> Self {
        match self {
            X0Source::WhiteNoise { seed, measure, .. } => X0Source::WhiteNoise {
                seed,
                dwell_steps: dwell,
                measure,
            },
            fixed => fixed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            X0Source::WhiteNoise {
                dwell_steps,
                measure,
                ..
            } => X0Source::WhiteNoise {
                seed,
                dwell_steps,
                measure,
            },
            fixed => fixed,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match *self {
            X0Source::Fixed { value } if !value.is_finite() => Err(Error::config(format!(
                "fixed X0 must be finite (got {value})"
            ))),
            X0Source::Fixed { value } if !grid.contains(value) => Err(Error::config(format!(
                "fixed X0 = {value} outside grid [{}, {})",
                grid.origin(),
                grid.end()
            ))),
            X0Source::WhiteNoise { dwell_steps: 0, .. } => {
                Err(Error::config("dwell_steps must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, X0Source::WhiteNoise { .. })
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            X0Source::WhiteNoise { seed, .. } => Some(seed),
            X0Source::Fixed { .. } => None,
        }
    }

    pub fn dwell_steps(&self) -> u64 {
        match *self {
            X0Source::WhiteNoise { dwell_steps, .. } => dwell_steps.max(1),
            X0Source::Fixed { .. } => 1,
        }
    }

    /// Whether a new centre takes effect at `step_index`.
    pub fn starts_block(&self, step_index: u64) -> bool {
        step_index.is_multiple_of(self.dwell_steps())
    }

    /// Raw white-noise value for a step: uniform over `[origin, origin + n * spacing)`,
    /// held for `dwell_steps` consecutive steps.
    pub fn next_x0(&self, grid: &Grid, step_index: u64) -> f64 {
        match *self {
            X0Source::Fixed { value } => value,
            X0Source::WhiteNoise {
                seed, dwell_steps, ..
            } => {
                let mut rng = block_stream(seed, step_index / dwell_steps.max(1));
                uniform_position(grid, &mut rng)
            }
        }
    }

    /// Centre for the dwell block starting at `step_index`.
    ///
    /// `acceptance` maps a candidate centre to its acceptance probability in
    /// `(0, 1]`; it is consulted only under [`NoiseMeasure::NormWeighted`].
    /// Candidates and acceptance uniforms alternate on the block's stream, so
    /// the first candidate is always `next_x0(grid, step_index)`.
    pub fn draw_block(
        &self,
        grid: &Grid,
        step_index: u64,
        mut acceptance: impl FnMut(f64) -> f64,
    ) -> f64 {
        match *self {
            X0Source::Fixed { value } => value,
            X0Source::WhiteNoise {
                seed,
                dwell_steps,
                measure,
            } => {
                let mut rng = block_stream(seed, step_index / dwell_steps.max(1));
                loop {
                    let candidate = uniform_position(grid, &mut rng);
                    if measure == NoiseMeasure::Uniform {
                        return candidate;
                    }
                    let u: f64 = rng.random();
                    if u < acceptance(candidate) {
                        return candidate;
                    }
                }
            }
        }
    }
}

fn block_stream(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn uniform_position(grid: &Grid, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    grid.origin() + u * grid.extent()
}

/// Seed of trial `index` in an ensemble started from `base_seed`.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng.set_word_pos(1 << 20);
    rng.next_u64()
}

/// Sequential generator for trial `index` of an ensemble.
pub fn trial_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base_seed, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// `kappa = N m Omega^2 / 2`
    Omega,
    /// `kappa = N gamma`
    Gamma,
    /// `kappa = N m G rho / 2`
    Gravity,
}

/// Physical origin of the non-Hermitian coupling. Only the active mode's
/// parameters are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub mode: CouplingMode,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub g_newton: f64,
    #[serde(default)]
    pub density: f64,
}

impl CouplingSpec {
    pub fn omega(omega: f64) -> Self {
        CouplingSpec {
            mode: CouplingMode::Omega,
            omega,
            gamma: 0.0,
            g_newton: 0.0,
            density: 0.0,
        }
    }

    pub fn gamma(gamma: f64) -> Self {
        CouplingSpec {
            mode: CouplingMode::Gamma,
            gamma,
            ..CouplingSpec::omega(0.0)
        }
    }

    pub fn gravity(g_newton: f64, density: f64) -> Self {
        CouplingSpec {
            mode: CouplingMode::Gravity,
            g_newton,
            density,
            ..CouplingSpec::omega(0.0)
        }
    }

    /// Frequency-like scale `sqrt(2 kappa / (N m))`; equals `Omega` in omega mode.
    pub fn effective_omega(&self, params: &PhysicalParams) -> Result<f64> {
        Ok((2.0 * coupling_from(self, params)? / params.total_mass()).sqrt())
    }
}

/// Quadratic coupling `kappa` of the non-Hermitian term for a physical coupling.
pub fn coupling_from(spec: &CouplingSpec, params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::config(format!(
                "coupling parameter {name} must be strictly positive (got {v})"
            )))
        }
    };
    let n = params.n_particles;
    let m = params.mass;
    Ok(match spec.mode {
        CouplingMode::Omega => {
            let omega = positive("omega", spec.omega)?;
            0.5 * n * m * omega * omega
        }
        CouplingMode::Gamma => n * positive("gamma", spec.gamma)?,
        CouplingMode::Gravity => {
            let g = positive("g_newton", spec.g_newton)?;
            let rho = positive("density", spec.density)?;
            0.5 * n * m * (g * rho)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, m: f64) -> PhysicalParams {
        PhysicalParams::new(n, m, 1.0).unwrap()
    }

    #[test]
    fn coupling_modes() {
        let p = params(100.0, 1.0);
        let k = coupling_from(&CouplingSpec::omega(0.1), &p).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
        let k = coupling_from(&CouplingSpec::gamma(0.005), &p).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
        let k = coupling_from(&CouplingSpec::gravity(1.0, 0.01), &p).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
        let k = coupling_from(&CouplingSpec::gravity(0.01, 1.0), &p).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coupling_ignores_inactive_and_rejects_nonpositive_active() {
        let p = params(10.0, 1.0);
        let mut spec = CouplingSpec::omega(0.5);
        spec.gamma = -3.0;
        spec.density = f64::NAN;
        assert!(coupling_from(&spec, &p).is_ok());
        assert!(coupling_from(&CouplingSpec::omega(0.0), &p).is_err());
        assert!(coupling_from(&CouplingSpec::gamma(-1.0), &p).is_err());
        assert!(coupling_from(&CouplingSpec::gravity(1.0, 0.0), &p).is_err());
    }

    #[test]
    fn effective_omega_recovers_omega() {
        let p = params(40.0, 0.5);
        let w = CouplingSpec::omega(0.3).effective_omega(&p).unwrap();
        assert!((w - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fixed_source_is_constant() {
        let g = Grid::new(16, 1.0, 0.0).unwrap();
        let s = X0Source::fixed(3.0);
        for step in [0, 1, 17, u64::MAX] {
            assert_eq!(s.next_x0(&g, step), 3.0);
        }
    }

    #[test]
    fn white_noise_is_a_function_of_seed_and_block() {
        let g = Grid::new(1024, 1.0, 0.0).unwrap();
        let s = X0Source::white_noise(7).with_dwell(4);
        let a: Vec<f64> = (0..64).map(|k| s.next_x0(&g, k)).collect();
        let b: Vec<f64> = (0..64).rev().map(|k| s.next_x0(&g, k)).collect();
        assert!(a.iter().eq(b.iter().rev()));
        for block in a.chunks(4) {
            assert!(block.iter().all(|v| *v == block[0]));
        }
        assert_ne!(a[0], a[4]);
        let other = X0Source::white_noise(8).with_dwell(4);
        assert_ne!(other.next_x0(&g, 0), a[0]);
        assert!(a.iter().all(|x| g.contains(*x)));
    }

    #[test]
    fn first_candidate_matches_raw_stream() {
        let g = Grid::new(64, 1.0, -32.0).unwrap();
        let s = X0Source::white_noise(11);
        for step in 0..32 {
            let raw = s.next_x0(&g, step);
            assert_eq!(s.draw_block(&g, step, |_| 1.0), raw);
            let uniform = s.with_measure(NoiseMeasure::Uniform);
            assert_eq!(uniform.draw_block(&g, step, |_| 0.0), raw);
        }
    }

    #[test]
    fn norm_weighted_rejection_tilts_the_distribution() {
        // accept only the left half: every accepted value must lie there
        let g = Grid::new(64, 1.0, -32.0).unwrap();
        let s = X0Source::white_noise(3);
        for step in 0..200 {
            let x = s.draw_block(&g, step, |c| if c < 0.0 { 1.0 } else { 0.0 });
            assert!(x < 0.0);
        }
    }

    #[test]
    fn white_noise_moments() {
        let g = Grid::new(1024, 1.0, 0.0).unwrap();
        let s = X0Source::white_noise(2024);
        let n = 1_000_000u64;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for k in 0..n {
            let x = s.next_x0(&g, k);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let expected_var = 1024.0 * 1024.0 / 12.0;
        assert!((mean - 512.0).abs() < 1.5, "mean {mean}");
        assert!(
            ((var - expected_var) / expected_var).abs() < 0.01,
            "var {var}"
        );
    }

    #[test]
    fn white_noise_chi_square() {
        // chi-square critical value, 63 dof, p = 0.001
        const CRITICAL: f64 = 103.442_377_319_873_24;
        let g = Grid::new(1024, 1.0, -512.0).unwrap();
        let s = X0Source::white_noise(99);
        let mut bins = [0u64; 64];
        let n = 1_000_000u64;
        for k in 0..n {
            let u = (s.next_x0(&g, k) - g.origin()) / g.extent();
            bins[((u * 64.0) as usize).min(63)] += 1;
        }
        let expected = n as f64 / 64.0;
        let chi2: f64 = bins
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < CRITICAL, "chi2 = {chi2}");
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> =
            (0..10_000).map(|i| derive_seed(5, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_eq!(derive_seed(5, 17), derive_seed(5, 17));
    }

    #[test]
    fn source_validation() {
        let g = Grid::new(16, 1.0, 0.0).unwrap();
        assert!(X0Source::fixed(20.0).validate(&g).is_err());
        assert!(X0Source::white_noise(1).with_dwell(0).validate(&g).is_err());
        assert!(X0Source::white_noise(1).validate(&g).is_ok());
    }

    #[test]
    fn source_serde_roundtrip() {
        let s = X0Source::white_noise(42).with_dwell(3);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"white_noise\""));
        assert_eq!(serde_json::from_str::<X0Source>(&json).unwrap(), s);
        let parsed: X0Source = serde_json::from_str(r#"{"kind":"white_noise","seed":1}"#).unwrap();
        assert_eq!(parsed.dwell_steps(), 1);
    }
}
