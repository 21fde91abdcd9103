//! Localization and re-location times, power-law sweeps over them, and the
//! (N, Omega) limits table.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{steps_for, EvolutionSpec, PotentialMode, Propagator};
use crate::grid::{Grid, PhysicalParams};
use crate::noise::{coupling_from, CouplingMode, CouplingSpec, X0Source};
use crate::wavefunction::WaveFunction;

/// Records per expected time scale when the record interval is derived.
pub const RECORDS_PER_ESTIMATE: f64 = 1000.0;

/// `t_max` as a multiple of the expected time scale when not given.
pub const DEFAULT_T_MAX_FACTOR: f64 = 20.0;

/// First recorded time at which the spread of an initially uniform state is at
/// most one lattice spacing.
pub fn localization_time(
    grid: Grid,
    spec: &EvolutionSpec,
    source: &X0Source,
    t_max: f64,
    record_every: u64,
) -> Result<f64> {
    let psi = WaveFunction::uniform(grid);
    let a = grid.spacing();
    first_crossing(
        psi,
        spec,
        source,
        t_max,
        record_every,
        "localization",
        |s| {
            let (_, spread) = s.moments()?;
            Ok((spread <= a, spread))
        },
    )
}

/// First recorded time at which `<X>` of a Gaussian started at `x_init` is within
/// one lattice spacing of the fixed centre.
pub fn relocation_time(
    grid: Grid,
    spec: &EvolutionSpec,
    x_init: f64,
    width: f64,
    t_max: f64,
    record_every: u64,
) -> Result<f64> {
    if spec.potential.kind.is_stochastic() {
        return Err(Error::config("relocation_time needs a fixed X0"));
    }
    let psi = WaveFunction::gaussian(grid, x_init, width, 0.0, spec.params.hbar)?;
    let x0 = spec.potential.x0;
    let a = grid.spacing();
    let source = X0Source::fixed(x0);
    first_crossing(psi, spec, &source, t_max, record_every, "relocation", |s| {
        let (mean, _) = s.moments()?;
        let dist = grid.min_image(mean - x0).abs();
        Ok((dist <= a, dist))
    })
}

fn first_crossing<F>(
    mut psi: WaveFunction,
    spec: &EvolutionSpec,
    source: &X0Source,
    t_max: f64,
    record_every: u64,
    what: &'static str,
    mut test: F,
) -> Result<f64>
where
    F: FnMut(&crate::evolution::Sample<'_>) -> Result<(bool, f64)>,
{
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::config(format!(
            "t_max must be positive (got {t_max})"
        )));
    }
    let mut prop = Propagator::new(*psi.grid(), *spec)?;
    let mut hit = None;
    let mut last = f64::NAN;
    prop.run(
        &mut psi,
        source,
        steps_for(t_max, spec.dt),
        record_every,
        |s| {
            let (done, value) = test(s)?;
            last = value;
            if done {
                hit = Some(s.t);
                Ok(ControlFlow::Break(()))
            } else {
                Ok(ControlFlow::Continue(()))
            }
        },
    )?;
    hit.ok_or(Error::TimeLimit {
        t_max,
        what,
        last_value: last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Loc,
    Reloc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Omega,
    N,
    /// `|X_i - X0|`
    Distance,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Omega => "omega",
            SweepParameter::N => "n",
            SweepParameter::Distance => "distance",
        }
    }
}

/// Base configuration shared by all time-scale measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScaleSetup {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub coupling: CouplingSpec,
    pub kinetic_enabled: bool,
    /// Fixed localization centre.
    pub x0: f64,
    /// Start of the re-location packet.
    pub x_init: f64,
    pub packet_width: f64,
    /// Step size; the stability bound when absent.
    pub dt: Option<f64>,
    /// Time limit; a multiple of the expected time scale when absent.
    pub t_max: Option<f64>,
}

impl Default for TimeScaleSetup {
    fn default() -> Self {
        TimeScaleSetup {
            grid: Grid::centered(1024, 1.0).expect("valid default grid"),
            params: PhysicalParams::default(),
            coupling: CouplingSpec::omega(0.1),
            kinetic_enabled: true,
            x0: 0.0,
            x_init: 10.0,
            packet_width: 4.0,
            dt: None,
            t_max: None,
        }
    }
}

impl TimeScaleSetup {
    pub fn kappa(&self) -> Result<f64> {
        coupling_from(&self.coupling, &self.params)
    }

    pub fn spec(&self) -> Result<EvolutionSpec> {
        let kappa = self.kappa()?;
        let dt = match self.dt {
            Some(dt) => dt,
            None => EvolutionSpec::stable_dt(
                kappa,
                self.params.hbar,
                self.grid.max_distance_from(self.x0),
            ),
        };
        let spec = EvolutionSpec::new(
            self.params,
            PotentialMode::non_hermitian(kappa, self.x0),
            dt,
        )
        .with_kinetic(self.kinetic_enabled);
        spec.validate(&self.grid)?;
        Ok(spec)
    }

    /// `hbar / (2 N m Omega^2 a^2)`, the kinetic-free localization time.
    pub fn loc_estimate(&self) -> Result<f64> {
        let a = self.grid.spacing();
        Ok(self.params.hbar / (4.0 * self.kappa()? * a * a))
    }

    /// `|X_i - X0| / (a Omega)` with `Omega` the effective frequency of the coupling.
    pub fn reloc_estimate(&self) -> Result<f64> {
        let omega = self.coupling.effective_omega(&self.params)?;
        let d = self.grid.min_image(self.x_init - self.x0).abs();
        Ok(d.max(self.grid.spacing()) / (self.grid.spacing() * omega))
    }

    pub fn estimate(&self, measure: Measure) -> Result<f64> {
        match measure {
            Measure::Loc => self.loc_estimate(),
            Measure::Reloc => self.reloc_estimate(),
        }
    }

    /// Steps between records: about [`RECORDS_PER_ESTIMATE`] per expected time scale.
    pub fn record_every(&self, measure: Measure) -> Result<u64> {
        let dt = self.spec()?.dt;
        let every = (self.estimate(measure)? / RECORDS_PER_ESTIMATE / dt).floor();
        Ok((every as u64).max(1))
    }

    pub fn t_max_for(&self, measure: Measure) -> Result<f64> {
        match self.t_max {
            Some(t) => Ok(t),
            None => Ok(DEFAULT_T_MAX_FACTOR * self.estimate(measure)?),
        }
    }

    /// Copy of the setup with one swept parameter replaced.
    pub fn with(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::config(format!(
                "swept {} must be positive (got {value})",
                parameter.name()
            )));
        }
        let mut out = *self;
        match parameter {
            SweepParameter::Omega => {
                if self.coupling.mode != CouplingMode::Omega {
                    return Err(Error::config(
                        "an omega sweep needs the omega coupling mode",
                    ));
                }
                out.coupling.omega = value;
            }
            SweepParameter::N => out.params.n_particles = value,
            SweepParameter::Distance => out.x_init = self.x0 + value,
        }
        Ok(out)
    }

    pub fn measure(&self, measure: Measure) -> Result<f64> {
        let spec = self.spec()?;
        let t_max = self.t_max_for(measure)?;
        let every = self.record_every(measure)?;
        match measure {
            Measure::Loc => {
                localization_time(self.grid, &spec, &X0Source::fixed(self.x0), t_max, every)
            }
            Measure::Reloc => relocation_time(
                self.grid,
                &spec,
                self.x_init,
                self.packet_width,
                t_max,
                every,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub swept_parameter: SweepParameter,
    pub measure: Measure,
    pub values: Vec<f64>,
    pub measured_times: Vec<f64>,
    pub fitted_exponent: f64,
    pub prefactor: f64,
    /// RMS residual of the fit in natural-log units.
    pub fit_residual: f64,
}

/// Least-squares line through `(ln x, ln y)`: returns `(slope, intercept, rms residual)`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::config(
            "power-law fit needs two equal-length series of >= 2 points",
        ));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::config(
            "power-law fit needs strictly positive values",
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::config("power-law fit needs distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok((slope, intercept, (ss / n).sqrt()))
}

pub(crate) fn check_log_spaced(values: &[f64], min_len: usize, what: &str) -> Result<()> {
    if values.len() < min_len {
        return Err(Error::config(format!(
            "{what} needs at least {min_len} values (got {})",
            values.len()
        )));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::config(format!(
            "{what} values must be strictly positive"
        )));
    }
    let ratios: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let first = ratios[0];
    if first == 0.0
        || ratios
            .iter()
            .any(|r| (r - first).abs() > 0.01 * first.abs())
    {
        return Err(Error::config(format!(
            "{what} values must be log-spaced (constant ratio)"
        )));
    }
    Ok(())
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => lo * (step * i as f64).exp(),
        })
        .collect()
}

/// Measures `measure` at every value of `parameter` and fits a power law.
pub fn scaling_sweep(
    base: &TimeScaleSetup,
    parameter: SweepParameter,
    values: &[f64],
    measure: Measure,
) -> Result<ScalingResult> {
    check_log_spaced(values, 4, "scaling sweep")?;
    let setups = values
        .iter()
        .map(|v| base.with(parameter, *v))
        .collect::<Result<Vec<_>>>()?;
    let times = setups
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            s.measure(measure).map_err(|e| Error::SweepMember {
                index,
                value: values[index],
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let (exponent, intercept, residual) = fit_power_law(values, &times)?;
    Ok(ScalingResult {
        swept_parameter: parameter,
        measure,
        values: values.to_vec(),
        measured_times: times,
        fitted_exponent: exponent,
        prefactor: intercept.exp(),
        fit_residual: residual,
    })
}

/// `t_loc` and `t_reloc` over an (N, Omega) grid; rows follow `n_values`, columns `omega_values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsTable {
    pub n_values: Vec<f64>,
    pub omega_values: Vec<f64>,
    pub t_loc: Vec<Vec<f64>>,
    pub t_reloc: Vec<Vec<f64>>,
}

impl LimitsTable {
    /// `t_loc` strictly decreases along every row of increasing N.
    pub fn loc_decreasing_in_n(&self) -> bool {
        columns_strictly(&self.t_loc, self.omega_values.len(), |a, b| b < a)
    }

    /// `t_loc` strictly grows as Omega decreases, for every N.
    pub fn loc_growing_as_omega_shrinks(&self) -> bool {
        rows_strictly(&self.t_loc, &self.omega_values)
    }

    /// `t_reloc` strictly grows as Omega decreases, for every N.
    pub fn reloc_growing_as_omega_shrinks(&self) -> bool {
        rows_strictly(&self.t_reloc, &self.omega_values)
    }

    /// Ratios `t(N_{i+1}) / t(N_i)` for every column.
    pub fn n_ratios(table: &[Vec<f64>]) -> Vec<f64> {
        table
            .windows(2)
            .flat_map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .map(|(a, b)| b / a)
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Ratios `t(Omega_j) / t(Omega_{j+1})` for every row; with increasing
    /// Omega values this is the effect of shrinking Omega by one step.
    pub fn omega_ratios(table: &[Vec<f64>]) -> Vec<f64> {
        table
            .iter()
            .flat_map(|row| row.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>())
            .collect()
    }
}

fn columns_strictly(table: &[Vec<f64>], n_cols: usize, ok: impl Fn(f64, f64) -> bool) -> bool {
    (0..n_cols).all(|j| table.windows(2).all(|w| ok(w[0][j], w[1][j])))
}

fn rows_strictly(table: &[Vec<f64>], omegas: &[f64]) -> bool {
    table.iter().all(|row| {
        row.windows(2).zip(omegas.windows(2)).all(|(t, o)| {
            if o[0] < o[1] {
                t[0] > t[1]
            } else {
                t[0] < t[1]
            }
        })
    })
}

pub fn limits_table(
    base: &TimeScaleSetup,
    n_values: &[f64],
    omega_values: &[f64],
) -> Result<LimitsTable> {
    check_log_spaced(n_values, 3, "limits table N")?;
    check_log_spaced(omega_values, 3, "limits table Omega")?;
    let cells: Vec<(usize, f64, f64)> = n_values
        .iter()
        .flat_map(|n| omega_values.iter().map(move |o| (*n, *o)))
        .enumerate()
        .map(|(i, (n, o))| (i, n, o))
        .collect();
    let measured = cells
        .par_iter()
        .map(|&(index, n, omega)| {
            let wrap = |e| Error::SweepMember {
                index,
                value: n * omega,
                source: Box::new(e),
            };
            let setup = base
                .with(SweepParameter::N, n)
                .and_then(|s| s.with(SweepParameter::Omega, omega))
                .map_err(wrap)?;
            let loc = setup.measure(Measure::Loc).map_err(wrap)?;
            let reloc = setup.measure(Measure::Reloc).map_err(wrap)?;
            Ok((loc, reloc))
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = omega_values.len();
    let pick = |f: fn(&(f64, f64)) -> f64| -> Vec<Vec<f64>> {
        measured
            .chunks(cols)
            .map(|row| row.iter().map(f).collect())
            .collect()
    };
    Ok(LimitsTable {
        n_values: n_values.to_vec(),
        omega_values: omega_values.to_vec(),
        t_loc: pick(|c| c.0),
        t_reloc: pick(|c| c.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_power_law() {
        let x = log_space(1.0, 16.0, 5);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.5)).collect();
        let (slope, intercept, rms) = fit_power_law(&x, &y).unwrap();
        assert!((slope + 1.5).abs() < 1e-12);
        assert!((intercept.exp() - 3.0).abs() < 1e-12);
        assert!(rms < 1e-12);
    }

    #[test]
    fn fit_residual_is_rms_in_log_units() {
        // ln y alternates +-0.1 about a flat line
        let x = [1.0, 2.0, 4.0, 8.0];
        let e = 0.1f64.exp();
        let y = [e, 1.0 / e, e, 1.0 / e];
        let (slope, _, rms) = fit_power_law(&x, &y).unwrap();
        // least squares picks up a small negative slope from the pattern
        assert!(slope < 0.0 && slope > -0.1);
        assert!(rms > 0.08 && rms < 0.1);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_power_law(&[1.0], &[1.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, -1.0]).is_err());
        assert!(fit_power_law(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn log_space_endpoints_and_ratio() {
        let v = log_space(0.25, 4.0, 5);
        assert_eq!(v[0], 0.25);
        assert_eq!(v[4], 4.0);
        assert!((v[2] - 1.0).abs() < 1e-15);
        assert!(check_log_spaced(&v, 4, "t").is_ok());
        assert!(check_log_spaced(&[1.0, 2.0, 3.0, 4.0], 4, "t").is_err());
        assert!(check_log_spaced(&[1.0, 2.0, 4.0], 4, "t").is_err());
    }

    #[test]
    fn limits_table_monotonicity_checks() {
        let table = LimitsTable {
            n_values: vec![1.0, 2.0, 4.0],
            omega_values: vec![0.25, 0.5, 1.0],
            t_loc: vec![
                vec![16.0, 4.0, 1.0],
                vec![8.0, 2.0, 0.5],
                vec![4.0, 1.0, 0.25],
            ],
            t_reloc: vec![
                vec![4.0, 2.0, 1.0],
                vec![4.0, 2.0, 1.0],
                vec![4.0, 2.0, 1.0],
            ],
        };
        assert!(table.loc_decreasing_in_n());
        assert!(table.loc_growing_as_omega_shrinks());
        assert!(table.reloc_growing_as_omega_shrinks());
        assert_eq!(LimitsTable::n_ratios(&table.t_loc), vec![0.5; 6]);
        assert_eq!(LimitsTable::omega_ratios(&table.t_loc), vec![4.0; 6]);
        assert_eq!(LimitsTable::n_ratios(&table.t_reloc), vec![1.0; 6]);

        let mut flat = table.clone();
        flat.t_loc[1][1] = 4.0;
        assert!(!flat.loc_decreasing_in_n());
    }

    #[test]
    fn setup_estimates_and_overrides() {
        let s = TimeScaleSetup {
            params: PhysicalParams::new(100.0, 1.0, 1.0).unwrap(),
            ..TimeScaleSetup::default()
        };
        assert!((s.kappa().unwrap() - 0.5).abs() < 1e-15);
        assert!((s.loc_estimate().unwrap() - 0.5).abs() < 1e-15);
        assert!((s.reloc_estimate().unwrap() - 100.0).abs() < 1e-9);
        let spec = s.spec().unwrap();
        assert!((spec.step_exponent(&s.grid) - 0.1).abs() < 1e-12);
        let t = s.with(SweepParameter::Distance, 20.0).unwrap();
        assert_eq!(t.x_init, 20.0);
        assert!(s.with(SweepParameter::N, 0.0).is_err());
        let g = TimeScaleSetup {
            coupling: CouplingSpec::gamma(0.005),
            ..s
        };
        assert!(g.with(SweepParameter::Omega, 0.2).is_err());
    }

    #[test]
    fn kinetic_free_localization_hits_closed_form() {
        let setup = TimeScaleSetup {
            grid: Grid::centered(128, 1.0).unwrap(),
            coupling: CouplingSpec::omega(1.0),
            kinetic_enabled: false,
            ..TimeScaleSetup::default()
        };
        let t = setup.measure(Measure::Loc).unwrap();
        assert!((t - 0.5).abs() <= 0.5 / RECORDS_PER_ESTIMATE + 1e-12, "{t}");
    }

    #[test]
    fn zero_coupling_never_localizes() {
        let grid = Grid::centered(64, 1.0).unwrap();
        let spec = EvolutionSpec::new(
            PhysicalParams::default(),
            PotentialMode::non_hermitian(0.0, 0.0),
            0.01,
        );
        let err = localization_time(grid, &spec, &X0Source::fixed(0.0), 1.0, 10).unwrap_err();
        match err {
            Error::TimeLimit { last_value, .. } => {
                assert!((last_value - ((64.0f64 * 64.0 - 1.0) / 12.0).sqrt()).abs() < 1e-9)
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn relocation_from_the_centre_is_immediate() {
        let setup = TimeScaleSetup {
            grid: Grid::centered(128, 1.0).unwrap(),
            x_init: 0.0,
            ..TimeScaleSetup::default()
        };
        assert_eq!(setup.measure(Measure::Reloc).unwrap(), 0.0);
    }

    #[test]
    fn sweep_wraps_member_failures() {
        let setup = TimeScaleSetup {
            grid: Grid::centered(64, 1.0).unwrap(),
            t_max: Some(1e-3),
            ..TimeScaleSetup::default()
        };
        let err = scaling_sweep(
            &setup,
            SweepParameter::N,
            &[1.0, 2.0, 4.0, 8.0],
            Measure::Loc,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SweepMember { index: 0, .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }
}
