//! Split-operator integration of
//!
//! ```text
//! i hbar d|psi>/dt = [ P^2 / (2 N m) - i kappa (X - X0)^2 ] |psi>
//! ```
//!
//! The anti-Hermitian term damps every amplitude by `exp(-kappa (x - X0)^2 dt / hbar)`,
//! so weight away from `X0` is suppressed and the amplitude at `X0` is kept.
//! Distances are minimal images on the periodic grid. The Hermitian control
//! replaces the damping by the phase `exp(-i kappa (x - X0)^2 dt / hbar)`.
//!
//! One step is the symmetric product `K(dt/2) V(dt) K(dt/2)`; consecutive
//! kinetic half steps are fused inside [`Propagator::run`].

use std::ops::ControlFlow;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, PhysicalParams};
use crate::noise::X0Source;
use crate::wavefunction::{self, WaveFunction};

/// Largest allowed `kappa * dt * L_max^2 / hbar` per step.
pub const STABILITY_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    NonHermitianFixed,
    NonHermitianStochastic,
    HermitianFixed,
    None,
}

impl PotentialKind {
    pub fn is_stochastic(self) -> bool {
        self == PotentialKind::NonHermitianStochastic
    }

    pub fn is_non_hermitian(self) -> bool {
        matches!(
            self,
            PotentialKind::NonHermitianFixed | PotentialKind::NonHermitianStochastic
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialMode {
    pub kind: PotentialKind,
    pub kappa: f64,
    /// Centre used by the fixed kinds.
    #[serde(default)]
    pub x0: f64,
}

impl PotentialMode {
    pub fn non_hermitian(kappa: f64, x0: f64) -> Self {
        PotentialMode {
            kind: PotentialKind::NonHermitianFixed,
            kappa,
            x0,
        }
    }

    pub fn stochastic(kappa: f64) -> Self {
        PotentialMode {
            kind: PotentialKind::NonHermitianStochastic,
            kappa,
            x0: 0.0,
        }
    }

    pub fn hermitian(kappa: f64, x0: f64) -> Self {
        PotentialMode {
            kind: PotentialKind::HermitianFixed,
            kappa,
            x0,
        }
    }

    pub fn free() -> Self {
        PotentialMode {
            kind: PotentialKind::None,
            kappa: 0.0,
            x0: 0.0,
        }
    }

    /// Fixed source at this mode's centre.
    pub fn fixed_source(&self) -> X0Source {
        X0Source::fixed(self.x0)
    }

    fn is_active(&self) -> bool {
        self.kind != PotentialKind::None && self.kappa > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub params: PhysicalParams,
    pub potential: PotentialMode,
    pub dt: f64,
    #[serde(default = "yes")]
    pub kinetic_enabled: bool,
    #[serde(default = "yes")]
    pub renormalize_each_step: bool,
    /// Overflow guard: largest per-step log-amplification accepted by the integrator.
    #[serde(default = "default_max_exponent")]
    pub max_step_exponent: f64,
}

fn yes() -> bool {
    true
}

fn default_max_exponent() -> f64 {
    STABILITY_FACTOR
}

impl EvolutionSpec {
    pub fn new(params: PhysicalParams, potential: PotentialMode, dt: f64) -> Self {
        EvolutionSpec {
            params,
            potential,
            dt,
            kinetic_enabled: true,
            renormalize_each_step: true,
            max_step_exponent: STABILITY_FACTOR,
        }
    }

    pub fn with_kinetic(mut self, enabled: bool) -> Self {
        self.kinetic_enabled = enabled;
        self
    }

    pub fn with_renormalize(mut self, enabled: bool) -> Self {
        self.renormalize_each_step = enabled;
        self
    }

    /// Largest `dt` satisfying `dt <= 0.1 hbar / (kappa L_max^2)`.
    pub fn stable_dt(kappa: f64, hbar: f64, max_distance: f64) -> f64 {
        STABILITY_FACTOR * hbar / (kappa * max_distance * max_distance)
    }

    /// Largest minimal-image distance that the potential can see on `grid`.
    pub fn max_distance(&self, grid: &Grid) -> f64 {
        if self.potential.kind.is_stochastic() {
            grid.extent() / 2.0
        } else {
            grid.max_distance_from(self.potential.x0)
        }
    }

    /// Per-step log-amplification `kappa dt L_max^2 / hbar`.
    pub fn step_exponent(&self, grid: &Grid) -> f64 {
        if !self.potential.is_active() {
            return 0.0;
        }
        let d = self.max_distance(grid);
        self.potential.kappa * self.dt * d * d / self.params.hbar
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!(
                "dt must be positive (got {})",
                self.dt
            )));
        }
        if !(self.potential.kappa >= 0.0 && self.potential.kappa.is_finite()) {
            return Err(Error::config(format!(
                "kappa must be non-negative (got {})",
                self.potential.kappa
            )));
        }
        if !self.potential.kind.is_stochastic()
            && self.potential.kind != PotentialKind::None
            && !grid.contains(self.potential.x0)
        {
            return Err(Error::config(format!(
                "X0 = {} outside grid [{}, {})",
                self.potential.x0,
                grid.origin(),
                grid.end()
            )));
        }
        self.check_step_exponent(grid)
    }

    fn check_step_exponent(&self, grid: &Grid) -> Result<()> {
        let exponent = self.step_exponent(grid);
        let bound = self.max_step_exponent.min(STABILITY_FACTOR);
        if exponent > bound * (1.0 + 1e-12) {
            return Err(Error::StepSize {
                exponent,
                bound,
                dt: self.dt,
                kappa: self.potential.kappa,
                distance: self.max_distance(grid),
            });
        }
        Ok(())
    }

    fn check_source(&self, source: &X0Source, grid: &Grid) -> Result<()> {
        source.validate(grid)?;
        match (self.potential.kind.is_stochastic(), source.is_stochastic()) {
            (true, false) => Err(Error::config(
                "non_hermitian_stochastic potential needs a white-noise X0 source",
            )),
            (false, true) if self.potential.kind != PotentialKind::None => Err(Error::config(
                "fixed potential kinds need a fixed X0 source",
            )),
            _ => Ok(()),
        }
    }
}

/// Observables recorded along a run. All series share one length.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `ln(||psi(t)|| / ||psi(0)||)` of the unrenormalized evolution.
    pub log_norms: Vec<f64>,
    pub x_means: Vec<f64>,
    pub spreads: Vec<f64>,
    /// `<P^2 / (2 N m)>`
    pub kinetic_energies: Vec<f64>,
    /// Centre applied during the step that ended at each record (the fixed
    /// centre, or `NaN` at t = 0 for stochastic runs).
    pub x0s: Vec<f64>,
    pub region_weights: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A recorded point handed to run observers.
pub struct Sample<'a> {
    pub step: u64,
    pub t: f64,
    pub log_norm: f64,
    pub x0: f64,
    grid: &'a Grid,
    amplitudes: &'a [Complex64],
    kinetic: &'a [f64],
    fft: &'a Arc<dyn Fft<f64>>,
}

impl Sample<'_> {
    pub fn amplitudes(&self) -> &[Complex64] {
        self.amplitudes
    }

    pub fn moments(&self) -> Result<(f64, f64)> {
        wavefunction::position_moments(self.grid, self.amplitudes)
    }

    pub fn region_weights(&self, cuts: &[f64]) -> Result<Vec<f64>> {
        wavefunction::region_weights(self.grid, self.amplitudes, cuts)
    }

    pub fn kinetic_energy(&self) -> f64 {
        let mut buf = self.amplitudes.to_vec();
        self.fft.process(&mut buf);
        let (num, den) = buf
            .iter()
            .zip(self.kinetic)
            .fold((0.0, 0.0), |(num, den), (a, e)| {
                (num + a.norm_sqr() * e, den + a.norm_sqr())
            });
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    }

    pub fn to_wavefunction(&self) -> WaveFunction {
        WaveFunction::from_raw(*self.grid, self.amplitudes.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub t: f64,
    pub log_norm: f64,
    pub stopped: bool,
}

/// Reusable integrator for one grid and spec: FFT plans, phase tables and
/// potential factors are built once.
pub struct Propagator {
    grid: Grid,
    spec: EvolutionSpec,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    half_phase: Vec<Complex64>,
    full_phase: Vec<Complex64>,
    kinetic: Vec<f64>,
    decay: Vec<f64>,
    phase: Vec<Complex64>,
    factors_for: Option<f64>,
}

impl Propagator {
    pub fn new(grid: Grid, spec: EvolutionSpec) -> Result<Self> {
        spec.validate(&grid)?;
        let n = grid.n_points();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let hbar = spec.params.hbar;
        let mass = spec.params.total_mass();
        let kinetic: Vec<f64> = grid
            .wavenumbers()
            .iter()
            .map(|k| hbar * hbar * k * k / (2.0 * mass))
            .collect();
        let inv_n = 1.0 / n as f64;
        let table = |dt: f64| -> Vec<Complex64> {
            kinetic
                .iter()
                .map(|e| Complex64::from_polar(inv_n, -e * dt / hbar))
                .collect()
        };
        Ok(Propagator {
            grid,
            half_phase: table(0.5 * spec.dt),
            full_phase: table(spec.dt),
            kinetic,
            fft,
            ifft,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            decay: vec![1.0; n],
            phase: vec![Complex64::new(1.0, 0.0); n],
            factors_for: None,
            spec,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spec(&self) -> &EvolutionSpec {
        &self.spec
    }

    fn kick(&mut self, psi: &mut [Complex64], full: bool) {
        self.fft.process_with_scratch(psi, &mut self.scratch);
        let table = if full {
            &self.full_phase
        } else {
            &self.half_phase
        };
        for (a, p) in psi.iter_mut().zip(table) {
            *a *= p;
        }
        self.ifft.process_with_scratch(psi, &mut self.scratch);
    }

    /// Fills the per-step potential factors for centre `x0`.
    fn prepare_factors(&mut self, x0: f64) {
        if self.factors_for == Some(x0) {
            return;
        }
        let c = self.spec.potential.kappa * self.spec.dt / self.spec.params.hbar;
        let grid = self.grid;
        match self.spec.potential.kind {
            PotentialKind::NonHermitianFixed | PotentialKind::NonHermitianStochastic => {
                fill_decay(&mut self.decay, &grid, x0, c);
            }
            PotentialKind::HermitianFixed => {
                for (j, f) in self.phase.iter_mut().enumerate() {
                    let d = grid.min_image(grid.position(j) - x0);
                    *f = Complex64::from_polar(1.0, -c * d * d);
                }
            }
            PotentialKind::None => {}
        }
        self.factors_for = Some(x0);
    }

    /// Applies the potential for one step; returns `sum |psi|^2` afterwards.
    fn apply_potential(&mut self, psi: &mut [Complex64], x0: f64) -> f64 {
        if !self.spec.potential.is_active() {
            return psi.iter().map(|a| a.norm_sqr()).sum();
        }
        self.prepare_factors(x0);
        if self.spec.potential.kind.is_non_hermitian() {
            psi.iter_mut()
                .zip(&self.decay)
                .map(|(a, f)| {
                    *a *= *f;
                    a.norm_sqr()
                })
                .sum()
        } else {
            psi.iter_mut()
                .zip(&self.phase)
                .map(|(a, f)| {
                    *a *= f;
                    a.norm_sqr()
                })
                .sum()
        }
    }

    /// Picks the centre for the step at `step_index`. Under the norm-weighted
    /// measure each candidate's factors are computed once and reused for the step.
    fn select_x0(
        &mut self,
        source: &X0Source,
        step_index: u64,
        current: f64,
        psi: &[Complex64],
        norm_sum: f64,
    ) -> f64 {
        if !source.is_stochastic() {
            return source.next_x0(&self.grid, step_index);
        }
        if !source.starts_block(step_index) {
            return current;
        }
        let dwell = source.dwell_steps() as i32;
        let grid = self.grid;
        let c = self.spec.potential.kappa * self.spec.dt / self.spec.params.hbar;
        let decay = &mut self.decay;
        let factors_for = &mut self.factors_for;
        source.draw_block(&grid, step_index, |candidate| {
            fill_decay(decay, &grid, candidate, c);
            *factors_for = Some(candidate);
            let kept: f64 = psi
                .iter()
                .zip(decay.iter())
                .map(|(a, f)| a.norm_sqr() * f.powi(2 * dwell))
                .sum();
            kept / norm_sum
        })
    }

    /// Single symmetric step `K(dt/2) V(dt) K(dt/2)` at centre `x0`.
    ///
    /// Returns the norm factor `||psi_after|| / ||psi_before||`; the state is
    /// rescaled to unit norm afterwards when `renormalize_each_step` is set.
    pub fn step(&mut self, psi: &mut WaveFunction, x0: f64) -> Result<f64> {
        self.check_x0(x0)?;
        let before = psi.norm_sqr();
        if !(before > 0.0 && before.is_finite()) {
            return Err(Error::ZeroNorm);
        }
        let amps = psi.amplitudes_mut();
        if self.spec.kinetic_enabled {
            self.kick(amps, false);
        }
        self.apply_potential(amps, x0);
        if self.spec.kinetic_enabled {
            self.kick(amps, false);
        }
        let after = psi.norm_sqr();
        if !(after > 0.0 && after.is_finite()) {
            return Err(Error::Underflow { t: self.spec.dt });
        }
        if self.spec.renormalize_each_step {
            psi.normalize()?;
        }
        Ok((after / before).sqrt())
    }

    fn check_x0(&self, x0: f64) -> Result<()> {
        if !x0.is_finite() {
            return Err(Error::config(format!("X0 must be finite (got {x0})")));
        }
        if !self.spec.potential.is_active() || self.spec.potential.kind.is_stochastic() {
            return Ok(());
        }
        let mut probe = self.spec;
        probe.potential.x0 = x0;
        probe.check_step_exponent(&self.grid)
    }

    /// Integrates `n_steps` steps, handing a [`Sample`] to `observer` at t = 0,
    /// every `record_every` steps, and after the last step. The observer may
    /// stop the run early by returning `ControlFlow::Break`.
    pub fn run<F>(
        &mut self,
        psi: &mut WaveFunction,
        source: &X0Source,
        n_steps: u64,
        record_every: u64,
        mut observer: F,
    ) -> Result<RunSummary>
    where
        F: FnMut(&Sample<'_>) -> Result<ControlFlow<()>>,
    {
        if record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        if *psi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        self.spec.check_source(source, &self.grid)?;
        if let X0Source::Fixed { value } = *source {
            self.check_x0(value)?;
        }
        let dt = self.spec.dt;
        let kinetic_on = self.spec.kinetic_enabled;
        let renormalize = self.spec.renormalize_each_step;
        let mut norm_sum: f64 = psi.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        if !(norm_sum > 0.0 && norm_sum.is_finite()) {
            return Err(Error::ZeroNorm);
        }
        let mut log_norm = 0.0;
        let mut x0 = match source {
            X0Source::Fixed { value } => *value,
            X0Source::WhiteNoise { .. } => f64::NAN,
        };

        let mut amps = psi.amplitudes().to_vec();
        let result = (|| -> Result<RunSummary> {
            let mut emit = |this: &Self, amps: &[Complex64], step: u64, log_norm: f64, x0: f64| {
                observer(&Sample {
                    step,
                    t: step as f64 * dt,
                    log_norm,
                    x0,
                    grid: &this.grid,
                    amplitudes: amps,
                    kinetic: &this.kinetic,
                    fft: &this.fft,
                })
            };
            if emit(self, &amps, 0, 0.0, x0)?.is_break() {
                return Ok(RunSummary {
                    steps: 0,
                    t: 0.0,
                    log_norm,
                    stopped: true,
                });
            }
            if n_steps == 0 {
                return Ok(RunSummary {
                    steps: 0,
                    t: 0.0,
                    log_norm,
                    stopped: false,
                });
            }
            if kinetic_on {
                self.kick(&mut amps, false);
            }
            for k in 0..n_steps {
                x0 = self.select_x0(source, k, x0, &amps, norm_sum);
                let after = self.apply_potential(&mut amps, x0);
                if !(after > 0.0 && after.is_finite()) {
                    return Err(Error::Underflow {
                        t: (k + 1) as f64 * dt,
                    });
                }
                log_norm += 0.5 * (after / norm_sum).ln();
                if renormalize {
                    let s = 1.0 / (after * self.grid.spacing()).sqrt();
                    for a in amps.iter_mut() {
                        *a *= s;
                    }
                    norm_sum = 1.0 / self.grid.spacing();
                } else {
                    norm_sum = after;
                }
                let step = k + 1;
                let last = step == n_steps;
                let record = last || step % record_every == 0;
                if kinetic_on {
                    if record {
                        self.kick(&mut amps, false);
                        if emit(self, &amps, step, log_norm, x0)?.is_break() {
                            return Ok(RunSummary {
                                steps: step,
                                t: step as f64 * dt,
                                log_norm,
                                stopped: true,
                            });
                        }
                        if !last {
                            self.kick(&mut amps, false);
                        }
                    } else {
                        self.kick(&mut amps, true);
                    }
                } else if record && emit(self, &amps, step, log_norm, x0)?.is_break() {
                    return Ok(RunSummary {
                        steps: step,
                        t: step as f64 * dt,
                        log_norm,
                        stopped: true,
                    });
                }
            }
            Ok(RunSummary {
                steps: n_steps,
                t: n_steps as f64 * dt,
                log_norm,
                stopped: false,
            })
        })();
        psi.amplitudes_mut().copy_from_slice(&amps);
        result
    }
}

/// `exp(-c d_j^2)` with `d_j` the minimal-image distance of site `j` to `x0`.
///
/// Walks outward from the site nearest `x0` with the exact ratio recurrence
/// `f(d + a) = f(d) r`, `r -> r q`, re-anchoring on `exp` every
/// [`DECAY_ANCHOR`] sites so rounding stays near 1e-13 relative.
fn fill_decay(out: &mut [f64], grid: &Grid, x0: f64, c: f64) {
    let n = out.len();
    let a = grid.spacing();
    let u = (x0 - grid.origin()) / a;
    let j0 = (u.round() as i64).rem_euclid(n as i64) as usize;
    let d0 = grid.min_image(grid.position(j0) - x0);
    let q = (-2.0 * c * a * a).exp();
    let half = n / 2;
    for (step, dir) in [(1usize, 1.0), (n - 1, -1.0)] {
        let mut j = j0;
        let mut f = 0.0;
        let mut r = 0.0;
        for s in 0..half {
            if s % DECAY_ANCHOR == 0 {
                let d = d0 + dir * s as f64 * a;
                f = (-c * d * d).exp();
                r = (-c * (2.0 * dir * d * a + a * a)).exp();
            } else {
                f *= r;
                r *= q;
            }
            out[j] = f;
            j = (j + step) % n;
        }
    }
    let ja = (j0 + half) % n;
    let da = grid.min_image(grid.position(ja) - x0);
    out[ja] = (-c * da * da).exp();
}

const DECAY_ANCHOR: usize = 32;

/// Number of steps of size `dt` covering `t_final`.
pub fn steps_for(t_final: f64, dt: f64) -> u64 {
    let raw = t_final / dt;
    let rounded = raw.round();
    if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
        rounded as u64
    } else {
        raw.ceil() as u64
    }
}

/// Options for [`evolve_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub record_every: u64,
    /// Region cut points for recorded region weights; empty disables them.
    pub cuts: Vec<f64>,
}

/// Integrates `psi` to `t_final` and records observables every `record_every` steps.
pub fn evolve(
    psi: &WaveFunction,
    spec: &EvolutionSpec,
    t_final: f64,
    record_every: u64,
    x0_source: &X0Source,
) -> Result<Trajectory> {
    let opts = EvolveOptions {
        t_final,
        record_every,
        cuts: Vec::new(),
    };
    evolve_with(psi, spec, &opts, x0_source).map(|(traj, _)| traj)
}

/// Like [`evolve`], also recording region weights and returning the final state.
pub fn evolve_with(
    psi: &WaveFunction,
    spec: &EvolutionSpec,
    opts: &EvolveOptions,
    x0_source: &X0Source,
) -> Result<(Trajectory, WaveFunction)> {
    if !(opts.t_final > 0.0 && opts.t_final.is_finite()) {
        return Err(Error::config(format!(
            "t_final must be positive (got {})",
            opts.t_final
        )));
    }
    if !opts.cuts.is_empty() {
        wavefunction::validate_cuts(psi.grid(), &opts.cuts)?;
    }
    let mut prop = Propagator::new(*psi.grid(), *spec)?;
    let n_steps = steps_for(opts.t_final, spec.dt);
    let mut traj = Trajectory {
        region_weights: (!opts.cuts.is_empty()).then(Vec::new),
        ..Trajectory::default()
    };
    let mut state = psi.clone();
    prop.run(&mut state, x0_source, n_steps, opts.record_every, |s| {
        let (mean, spread) = s.moments()?;
        traj.times.push(s.t);
        traj.log_norms.push(s.log_norm);
        traj.x_means.push(mean);
        traj.spreads.push(spread);
        traj.kinetic_energies.push(s.kinetic_energy());
        traj.x0s.push(s.x0);
        if let Some(w) = traj.region_weights.as_mut() {
            w.push(s.region_weights(&opts.cuts)?);
        }
        Ok(ControlFlow::Continue(()))
    })?;
    Ok((traj, state))
}

/// Applies `exp(-i dt P^2 / (2 N m hbar))` exactly in the plane-wave basis.
pub fn kinetic_step(psi: &WaveFunction, dt: f64, params: &PhysicalParams) -> Result<WaveFunction> {
    let spec = EvolutionSpec::new(*params, PotentialMode::free(), dt);
    let mut prop = Propagator::new(*psi.grid(), spec)?;
    let mut amps = psi.amplitudes().to_vec();
    prop.kick(&mut amps, true);
    WaveFunction::new(*psi.grid(), amps)
}

/// Applies the potential factor of `mode` for one interval `dt` at centre `x0`.
pub fn potential_step(
    psi: &WaveFunction,
    dt: f64,
    mode: &PotentialMode,
    x0: f64,
    hbar: f64,
) -> Result<WaveFunction> {
    let params = PhysicalParams::new(1.0, 1.0, hbar)?;
    let mut m = *mode;
    if m.kind.is_stochastic() {
        m.kind = PotentialKind::NonHermitianFixed;
    }
    m.x0 = x0;
    let spec = EvolutionSpec::new(params, m, dt).with_kinetic(false);
    let mut prop = Propagator::new(*psi.grid(), spec)?;
    let mut amps = psi.amplitudes().to_vec();
    let after = prop.apply_potential(&mut amps, x0);
    if !(after > 0.0 && after.is_finite()) {
        return Err(Error::Underflow { t: dt });
    }
    Ok(WaveFunction::from_raw(*psi.grid(), amps))
}

/// One Strang step of `spec` at centre `x0`; returns the new state and the norm factor.
pub fn step(psi: &WaveFunction, spec: &EvolutionSpec, x0: f64) -> Result<(WaveFunction, f64)> {
    let mut spec = *spec;
    if spec.potential.kind.is_stochastic() {
        spec.potential.kind = PotentialKind::NonHermitianFixed;
    }
    spec.potential.x0 = x0;
    let mut prop = Propagator::new(*psi.grid(), spec)?;
    let mut state = psi.clone();
    let factor = prop.step(&mut state, x0)?;
    Ok((state, factor))
}
