//! Stochastic collapse trials of a two-packet superposition, ensembles of them,
//! and a PDE-free Gambler's Ruin walk on the two component weights.

use std::ops::ControlFlow;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{steps_for, EvolutionSpec, PotentialMode, Propagator};
use crate::grid::{Grid, PhysicalParams};
use crate::noise::{coupling_from, derive_seed, trial_rng, CouplingSpec, NoiseMeasure, X0Source};
use crate::wavefunction::WaveFunction;

/// A trial has collapsed once one region holds at least `1 - threshold` of the weight.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// Absorbing boundary of the oracle walk.
pub const ORACLE_THRESHOLD: f64 = 1e-6;

/// Largest tolerated fraction of trials that reach `t_max` uncollapsed.
pub const MAX_FAILED_FRACTION: f64 = 0.01;

const DEFAULT_CHECK_EVERY: u64 = 16;
const DEFAULT_T_MAX_FACTOR: f64 = 20.0;

/// Geometry and dynamics of a two-packet collapse trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub coupling: CouplingSpec,
    pub kinetic_enabled: bool,
    /// Centre of the first packet, whose weight is `alpha2`.
    pub x1: f64,
    pub x2: f64,
    pub width: f64,
    pub threshold: f64,
    pub dwell_steps: u64,
    pub measure: NoiseMeasure,
    /// Step size; the stability bound at half the grid extent when absent.
    pub dt: Option<f64>,
    /// Time limit per trial; a multiple of the expected collapse time when absent.
    pub t_max: Option<f64>,
    /// Steps between collapse checks; rounded up to whole dwell blocks.
    pub check_every: Option<u64>,
}

impl Default for TrialSetup {
    fn default() -> Self {
        TrialSetup {
            grid: Grid::centered(1024, 1.0).expect("valid default grid"),
            params: PhysicalParams::new(100.0, 1.0, 1.0).expect("valid default params"),
            coupling: CouplingSpec::omega(0.1),
            kinetic_enabled: true,
            x1: -20.0,
            x2: 20.0,
            width: 4.0,
            threshold: DEFAULT_THRESHOLD,
            dwell_steps: 1,
            measure: NoiseMeasure::NormWeighted,
            dt: None,
            t_max: None,
            check_every: None,
        }
    }
}

impl TrialSetup {
    pub fn kappa(&self) -> Result<f64> {
        coupling_from(&self.coupling, &self.params)
    }

    pub fn spec(&self) -> Result<EvolutionSpec> {
        let kappa = self.kappa()?;
        let dt = match self.dt {
            Some(dt) => dt,
            None => EvolutionSpec::stable_dt(kappa, self.params.hbar, self.grid.extent() / 2.0),
        };
        let spec = EvolutionSpec::new(self.params, PotentialMode::stochastic(kappa), dt)
            .with_kinetic(self.kinetic_enabled);
        spec.validate(&self.grid)?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 0.5) {
            return Err(Error::config(format!(
                "collapse threshold must lie in (0, 0.5) (got {})",
                self.threshold
            )));
        }
        if self.dwell_steps == 0 {
            return Err(Error::config("dwell_steps must be at least 1"));
        }
        if self.check_every == Some(0) {
            return Err(Error::config("check_every must be at least 1"));
        }
        if self.x1 == self.x2 {
            return Err(Error::config("the two packets need distinct centres"));
        }
        for x in [self.x1, self.x2] {
            if !self.grid.contains(x) {
                return Err(Error::config(format!("packet centre {x} outside the grid")));
            }
        }
        self.spec().map(|_| ())
    }

    /// Region boundary halfway between the packets.
    pub fn cut(&self) -> f64 {
        0.5 * (self.x1 + self.x2)
    }

    fn first_region(&self) -> usize {
        usize::from(self.x1 >= self.cut())
    }

    pub fn check_every(&self) -> u64 {
        let d = self.dwell_steps.max(1);
        let raw = self.check_every.unwrap_or(DEFAULT_CHECK_EVERY).max(1);
        raw.div_ceil(d) * d
    }

    /// Rough mean number of steps to collapse from equal weights: the log weight
    /// ratio diffuses with per-step variance `(4 kappa dt |x1 - x2| sigma_X0 / hbar)^2`
    /// and must travel `ln((1 - threshold) / threshold)`.
    pub fn expected_steps(&self) -> Result<f64> {
        let spec = self.spec()?;
        let sigma_x0 = self.grid.extent() / 12f64.sqrt();
        let sigma = 4.0 * spec.potential.kappa * spec.dt * (self.x1 - self.x2).abs() * sigma_x0
            / self.params.hbar;
        let b = ((1.0 - self.threshold) / self.threshold).ln();
        Ok(b * b / (sigma * sigma * self.dwell_steps as f64))
    }

    pub fn t_max(&self) -> Result<f64> {
        match self.t_max {
            Some(t) => Ok(t),
            None => Ok(DEFAULT_T_MAX_FACTOR * self.expected_steps()? * self.spec()?.dt),
        }
    }

    pub fn source(&self, seed: u64) -> X0Source {
        X0Source::white_noise(seed)
            .with_dwell(self.dwell_steps)
            .with_measure(self.measure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// 0 for the first packet (weight `alpha2`), 1 for the second.
    pub selected_component: usize,
    /// First checked time at which the collapse criterion held; 0 when it held
    /// from the start.
    pub collapse_time: f64,
    pub seed: u64,
}

fn check_alpha2(alpha2: f64) -> Result<()> {
    if alpha2 > 0.0 && alpha2 < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "alpha2 must lie in (0, 1) (got {alpha2})"
        )))
    }
}

/// Evolves `sqrt(alpha2) |x1> + sqrt(1 - alpha2) |x2>` under white-noise
/// centres seeded by `seed` until one packet region holds `1 - threshold` of the weight.
pub fn collapse_trial(alpha2: f64, setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    check_alpha2(alpha2)?;
    setup.validate()?;
    let spec = setup.spec()?;
    let mut psi = WaveFunction::two_packets(
        setup.grid,
        alpha2,
        setup.x1,
        setup.x2,
        setup.width,
        setup.params.hbar,
    )?;
    let t_max = setup.t_max()?;
    let cut = [setup.cut()];
    let first = setup.first_region();
    let bound = 1.0 - setup.threshold;
    let mut prop = Propagator::new(setup.grid, spec)?;
    let mut outcome = None;
    let mut last = f64::NAN;
    prop.run(
        &mut psi,
        &setup.source(seed),
        steps_for(t_max, spec.dt),
        setup.check_every(),
        |s| {
            let w = s.region_weights(&cut)?[first];
            last = w;
            let selected = if w >= bound {
                0
            } else if 1.0 - w >= bound {
                1
            } else {
                return Ok(ControlFlow::Continue(()));
            };
            outcome = Some(TrialOutcome {
                selected_component: selected,
                collapse_time: s.t,
                seed,
            });
            Ok(ControlFlow::Break(()))
        },
    )?;
    outcome.ok_or(Error::TimeLimit {
        t_max,
        what: "collapse",
        last_value: last,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornResult {
    pub alpha2: f64,
    pub base_seed: u64,
    pub n_trials: usize,
    /// Fraction of collapsed trials that selected the first packet.
    pub frequency: f64,
    /// Binomial 95% half-width `1.96 sqrt(f (1 - f) / n)`.
    pub ci95: f64,
    pub collapsed: usize,
    pub failed: usize,
    pub mean_collapse_time: f64,
    /// Per trial, in trial order; `None` where `t_max` was reached.
    pub outcomes: Vec<Option<TrialOutcome>>,
}

pub fn binomial_ci95(p: f64, n: usize) -> f64 {
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Runs `n_trials` collapse trials with seeds derived from `base_seed`.
pub fn born_ensemble(
    alpha2: f64,
    n_trials: usize,
    base_seed: u64,
    setup: &TrialSetup,
) -> Result<BornResult> {
    check_alpha2(alpha2)?;
    if n_trials < 100 {
        return Err(Error::config(format!(
            "a Born ensemble needs at least 100 trials (got {n_trials})"
        )));
    }
    setup.validate()?;
    let outcomes = (0..n_trials as u64)
        .into_par_iter()
        .map(
            |i| match collapse_trial(alpha2, setup, derive_seed(base_seed, i)) {
                Ok(o) => Ok(Some(o)),
                Err(Error::TimeLimit { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let done: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
    let failed = n_trials - done.len();
    if failed as f64 > MAX_FAILED_FRACTION * n_trials as f64 || done.is_empty() {
        return Err(Error::CollapseIncomplete {
            failed,
            trials: n_trials,
        });
    }
    let n = done.len();
    let first = done.iter().filter(|o| o.selected_component == 0).count();
    let frequency = first as f64 / n as f64;
    Ok(BornResult {
        alpha2,
        base_seed,
        n_trials,
        frequency,
        ci95: binomial_ci95(frequency, n),
        collapsed: n,
        failed,
        mean_collapse_time: done.iter().map(|o| o.collapse_time).sum::<f64>() / n as f64,
        outcomes,
    })
}

/// Which component the oracle walk amplifies at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GamblerRule {
    /// Component `k` with probability `(1 + gain w_k) / (2 + gain)`, its share of
    /// the total weight after amplification. The weights are then a martingale.
    #[default]
    NormProportional,
    /// Component `k` with probability `w_k`. Drifts toward the larger weight.
    WeightProportional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub alpha2: f64,
    pub gain: f64,
    pub rule: GamblerRule,
    pub seed: u64,
    pub n_trials: usize,
    pub frequency: f64,
    pub ci95: f64,
    pub mean_steps: f64,
}

/// States `k` of the log weight ratio `ln(alpha2 / (1 - alpha2)) + k ln(1 + gain)`.
struct RuinLattice {
    l0: f64,
    h: f64,
    gain: f64,
    rule: GamblerRule,
    k_lo: i64,
    k_hi: i64,
    /// The walk is absorbed at `k <= win_lo` or `k >= win_hi`.
    win_lo: i64,
    win_hi: i64,
}

impl RuinLattice {
    fn new(alpha2: f64, gain: f64, rule: GamblerRule) -> Self {
        let h = gain.ln_1p();
        let l0 = (alpha2 / (1.0 - alpha2)).ln();
        let bound = ((1.0 - ORACLE_THRESHOLD) / ORACLE_THRESHOLD).ln();
        let k_hi = ((bound - l0) / h).ceil() as i64 + 1;
        let k_lo = ((-bound - l0) / h).floor() as i64 - 1;
        let mut lattice = RuinLattice {
            l0,
            h,
            gain,
            rule,
            k_lo,
            k_hi,
            win_lo: k_lo,
            win_hi: k_hi,
        };
        lattice.win_hi = (k_lo..=k_hi)
            .find(|&k| lattice.w1(k) >= 1.0 - ORACLE_THRESHOLD)
            .unwrap_or(k_hi);
        lattice.win_lo = (k_lo..=k_hi)
            .rev()
            .find(|&k| 1.0 - lattice.w1(k) >= 1.0 - ORACLE_THRESHOLD)
            .unwrap_or(k_lo);
        lattice
    }

    fn w1(&self, k: i64) -> f64 {
        1.0 / (1.0 + (-(self.l0 + k as f64 * self.h)).exp())
    }

    /// Probability of amplifying the first component, for `k_lo ..= k_hi`.
    fn up_probabilities(&self) -> Vec<f64> {
        (self.k_lo..=self.k_hi)
            .map(|k| {
                let w1 = self.w1(k);
                match self.rule {
                    GamblerRule::NormProportional => (1.0 + self.gain * w1) / (2.0 + self.gain),
                    GamblerRule::WeightProportional => w1,
                }
            })
            .collect()
    }
}

/// Exact probability that the oracle walk started at `alpha2` ends with the
/// first component winning, from the birth-death absorption formula
/// `P = sum_{j < 0} rho_j / sum_j rho_j` with `rho_j = prod_{i <= j} q_i / p_i`,
/// evaluated in log space.
pub fn ruin_probability(alpha2: f64, gain: f64, rule: GamblerRule) -> Result<f64> {
    check_alpha2(alpha2)?;
    if !(gain > 0.0 && gain < 1.0) {
        return Err(Error::config(format!(
            "gain must lie in (0, 1) (got {gain})"
        )));
    }
    let lattice = RuinLattice::new(alpha2, gain, rule);
    if 0 >= lattice.win_hi {
        return Ok(1.0);
    }
    if 0 <= lattice.win_lo {
        return Ok(0.0);
    }
    let p = lattice.up_probabilities();
    // log rho_j for the edges j = win_lo .. win_hi - 1 (edge j joins j and j + 1)
    let mut log_rho = Vec::with_capacity((lattice.win_hi - lattice.win_lo) as usize);
    let mut acc = 0.0;
    log_rho.push(acc);
    for k in lattice.win_lo + 1..lattice.win_hi {
        let pk = p[(k - lattice.k_lo) as usize];
        acc += ((1.0 - pk) / pk).ln();
        log_rho.push(acc);
    }
    let max = log_rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_to = |n: usize| log_rho[..n].iter().map(|l| (l - max).exp()).sum::<f64>();
    let start = (0 - lattice.win_lo) as usize;
    Ok(sum_to(start) / sum_to(log_rho.len()))
}

/// Gambler's Ruin on the weights `(alpha2, 1 - alpha2)`: each step one
/// component is multiplied by `1 + gain` and the pair renormalized, until one
/// weight reaches `1 - ORACLE_THRESHOLD`. Returns how often the first wins.
///
/// The log weight ratio lives on the lattice `ln(alpha2 / (1 - alpha2)) + k ln(1 + gain)`,
/// so the choice probability for every reachable `k` is tabulated up front.
pub fn gambler_oracle(
    alpha2: f64,
    n_trials: usize,
    gain: f64,
    seed: u64,
    rule: GamblerRule,
) -> Result<OracleResult> {
    check_alpha2(alpha2)?;
    if !(gain > 0.0 && gain < 1.0) {
        return Err(Error::config(format!(
            "gain must lie in (0, 1) (got {gain})"
        )));
    }
    if n_trials == 0 {
        return Err(Error::config("the oracle needs at least one trial"));
    }
    let lattice = RuinLattice::new(alpha2, gain, rule);
    let table: Vec<u64> = lattice
        .up_probabilities()
        .iter()
        .map(|p| (p * 2f64.powi(64)).min(u64::MAX as f64) as u64)
        .collect();
    let RuinLattice {
        k_lo,
        win_lo,
        win_hi,
        ..
    } = lattice;
    let walks: Vec<(bool, u64)> = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let mut k = 0i64;
            let mut steps = 0u64;
            while k > win_lo && k < win_hi {
                if rng.next_u64() < table[(k - k_lo) as usize] {
                    k += 1;
                } else {
                    k -= 1;
                }
                steps += 1;
            }
            (k >= win_hi, steps)
        })
        .collect();
    let wins = walks.iter().filter(|w| w.0).count();
    let frequency = wins as f64 / n_trials as f64;
    Ok(OracleResult {
        alpha2,
        gain,
        rule,
        seed,
        n_trials,
        frequency,
        ci95: binomial_ci95(frequency, n_trials),
        mean_steps: walks.iter().map(|w| w.1 as f64).sum::<f64>() / n_trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_exact_ruin_probability_for_the_biased_rule() {
        // With rule WeightProportional on a tiny lattice the walk can be solved
        // exactly by the linear system for absorption probabilities.
        let gain = 0.5;
        let alpha2 = 0.5;
        let h = f64::ln_1p(gain);
        let bound = ((1.0 - ORACLE_THRESHOLD) / ORACLE_THRESHOLD).ln();
        let k_hi = (bound / h).ceil() as i64;
        let k_lo = -k_hi;
        let p = |k: i64| 1.0 / (1.0 + (-(k as f64) * h).exp());
        // Gauss-Seidel on u(k) = p u(k+1) + (1-p) u(k-1), u(k_hi) = 1, u(k_lo) = 0
        let size = (k_hi - k_lo + 1) as usize;
        let mut u = vec![0.0; size];
        u[size - 1] = 1.0;
        for _ in 0..200_000 {
            for i in 1..size - 1 {
                let k = k_lo + i as i64;
                u[i] = p(k) * u[i + 1] + (1.0 - p(k)) * u[i - 1];
            }
        }
        let exact = u[(-k_lo) as usize];
        let r = gambler_oracle(alpha2, 20_000, gain, 5, GamblerRule::WeightProportional).unwrap();
        assert!((exact - 0.5).abs() < 1e-9, "symmetric start");
        assert!(
            (r.frequency - exact).abs() < 4.0 * r.ci95 / 1.96,
            "{} vs {exact}",
            r.frequency
        );
    }

    #[test]
    fn exact_ruin_probability_matches_gauss_seidel() {
        let gain = 0.5;
        let h = f64::ln_1p(gain);
        let bound = ((1.0 - ORACLE_THRESHOLD) / ORACLE_THRESHOLD).ln();
        for &(alpha2, rule) in &[
            (0.5, GamblerRule::WeightProportional),
            (0.3, GamblerRule::WeightProportional),
            (0.3, GamblerRule::NormProportional),
        ] {
            let l0 = f64::ln(alpha2 / (1.0 - alpha2));
            let w1 = |k: i64| 1.0 / (1.0 + (-(l0 + k as f64 * h)).exp());
            let hi = (0..).find(|&k| w1(k) >= 1.0 - ORACLE_THRESHOLD).unwrap();
            let lo = (0..)
                .map(|k: i64| -k)
                .find(|&k| 1.0 - w1(k) >= 1.0 - ORACLE_THRESHOLD)
                .unwrap();
            assert!(l0 + hi as f64 * h >= bound - 1e-9);
            let size = (hi - lo + 1) as usize;
            let mut u = vec![0.0; size];
            u[size - 1] = 1.0;
            for _ in 0..100_000 {
                for i in 1..size - 1 {
                    let k = lo + i as i64;
                    let p = match rule {
                        GamblerRule::NormProportional => (1.0 + gain * w1(k)) / (2.0 + gain),
                        GamblerRule::WeightProportional => w1(k),
                    };
                    u[i] = p * u[i + 1] + (1.0 - p) * u[i - 1];
                }
            }
            let exact = ruin_probability(alpha2, gain, rule).unwrap();
            assert!(
                (exact - u[(-lo) as usize]).abs() < 1e-9,
                "{alpha2} {rule:?}"
            );
        }
    }

    #[test]
    fn fair_rule_win_probability_is_the_initial_weight() {
        for &alpha2 in &[0.2, 0.5, 0.64, 0.9] {
            for &gain in &[0.01, 0.001] {
                let p = ruin_probability(alpha2, gain, GamblerRule::NormProportional).unwrap();
                assert!((p - alpha2).abs() < 1e-3, "{alpha2} {gain}: {p}");
            }
        }
        let biased = ruin_probability(0.64, 0.01, GamblerRule::WeightProportional).unwrap();
        assert!(biased > 0.99);
    }

    #[test]
    fn fair_rule_is_a_martingale_step() {
        for &w1 in &[0.1f64, 0.5, 0.64, 0.97] {
            for &g in &[0.001, 0.01, 0.3] {
                let p1 = (1.0 + g * w1) / (2.0 + g);
                let up = w1 * (1.0 + g) / (1.0 + g * w1);
                let down = w1 / (1.0 + g * (1.0 - w1));
                let mean = p1 * up + (1.0 - p1) * down;
                assert!((mean - w1).abs() < 1e-15, "w1={w1} g={g}");
            }
        }
    }

    #[test]
    fn oracle_fair_rule_follows_initial_weight() {
        let r = gambler_oracle(0.64, 4000, 0.05, 11, GamblerRule::NormProportional).unwrap();
        assert!((r.frequency - 0.64).abs() < 0.03, "{}", r.frequency);
        let biased = gambler_oracle(0.64, 2000, 0.05, 11, GamblerRule::WeightProportional).unwrap();
        assert!(biased.frequency > 0.9, "{}", biased.frequency);
    }

    #[test]
    fn oracle_is_deterministic_and_validates() {
        let a = gambler_oracle(0.3, 500, 0.05, 3, GamblerRule::default()).unwrap();
        let b = gambler_oracle(0.3, 500, 0.05, 3, GamblerRule::default()).unwrap();
        assert_eq!(a, b);
        assert!(gambler_oracle(0.0, 10, 0.01, 1, GamblerRule::default()).is_err());
        assert!(gambler_oracle(0.5, 10, 0.0, 1, GamblerRule::default()).is_err());
        assert!(gambler_oracle(0.5, 0, 0.01, 1, GamblerRule::default()).is_err());
        let pure = gambler_oracle(1.0 - 1e-9, 10, 0.01, 1, GamblerRule::default()).unwrap();
        assert_eq!(pure.frequency, 1.0);
        assert_eq!(pure.mean_steps, 0.0);
    }

    fn small_setup() -> TrialSetup {
        TrialSetup {
            grid: Grid::centered(256, 1.0).unwrap(),
            x1: -16.0,
            x2: 16.0,
            width: 3.0,
            dwell_steps: 8,
            ..TrialSetup::default()
        }
    }

    #[test]
    fn near_pure_state_is_collapsed_at_once() {
        let o = collapse_trial(1.0 - 1e-9, &small_setup(), 4).unwrap();
        assert_eq!(o.selected_component, 0);
        assert_eq!(o.collapse_time, 0.0);
        assert_eq!(o.seed, 4);
    }

    #[test]
    fn trial_collapses_and_is_reproducible() {
        let setup = small_setup();
        let a = collapse_trial(0.5, &setup, 99).unwrap();
        let b = collapse_trial(0.5, &setup, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.collapse_time > 0.0);
        assert!(a.selected_component < 2);
    }

    #[test]
    fn packet_order_does_not_change_component_labels() {
        let setup = small_setup();
        let swapped = TrialSetup {
            x1: setup.x2,
            x2: setup.x1,
            ..setup
        };
        assert_eq!(setup.first_region(), 0);
        assert_eq!(swapped.first_region(), 1);
        let o = collapse_trial(1.0 - 1e-9, &swapped, 1).unwrap();
        assert_eq!(o.selected_component, 0);
    }

    #[test]
    fn exhausted_time_limit_is_reported() {
        let setup = TrialSetup {
            t_max: Some(1e-6),
            ..small_setup()
        };
        let err = collapse_trial(0.5, &setup, 1).unwrap_err();
        assert!(
            matches!(
                err,
                Error::TimeLimit {
                    what: "collapse",
                    ..
                }
            ),
            "{err}"
        );
        let err = born_ensemble(0.5, 100, 1, &setup).unwrap_err();
        assert!(
            matches!(
                err,
                Error::CollapseIncomplete {
                    failed: 100,
                    trials: 100
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn setup_validation() {
        let s = small_setup();
        assert!(s.validate().is_ok());
        assert_eq!(s.check_every(), 16);
        assert_eq!(
            TrialSetup {
                dwell_steps: 5,
                ..s
            }
            .check_every(),
            20
        );
        assert!(TrialSetup {
            threshold: 0.7,
            ..s
        }
        .validate()
        .is_err());
        assert!(TrialSetup {
            dwell_steps: 0,
            ..s
        }
        .validate()
        .is_err());
        assert!(TrialSetup { x2: s.x1, ..s }.validate().is_err());
        assert!(TrialSetup { x2: 1e4, ..s }.validate().is_err());
        assert!(TrialSetup { dt: Some(1.0), ..s }.validate().is_err());
        assert!(collapse_trial(1.0, &s, 1).is_err());
        assert!(born_ensemble(0.5, 99, 1, &s).is_err());
    }

    #[test]
    fn binomial_interval() {
        assert!((binomial_ci95(0.5, 2000) - 0.021_913_466_179_497_94).abs() < 1e-15);
        assert_eq!(binomial_ci95(1.0, 10), 0.0);
    }
}
