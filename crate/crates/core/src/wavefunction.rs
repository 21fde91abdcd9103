//! Grid wavefunctions, the initial states used by the experiments, and
//! observables taken relative to the instantaneous norm.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Complex amplitudes on a [`Grid`].
///
/// The norm is tracked rather than fixed: states produced by non-unitary
/// evolution are generally unnormalized and every observable divides by
/// `<psi|psi>`. The discrete inner product carries the lattice spacing,
/// `<psi|psi> = sum_j |psi_j|^2 * spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::config(format!(
                "expected {} amplitudes, got {}",
                grid.n_points(),
                amplitudes.len()
            )));
        }
        let psi = WaveFunction { grid, amplitudes };
        psi.checked_norm_sqr()?;
        Ok(psi)
    }

    /// Wraps amplitudes produced by the integrator without re-checking the norm.
    pub(crate) fn from_raw(grid: Grid, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), grid.n_points());
        WaveFunction { grid, amplitudes }
    }

    /// Zero-momentum plane wave: equal, real, positive amplitudes with unit norm.
    pub fn uniform(grid: Grid) -> Self {
        let amp = 1.0 / grid.extent().sqrt();
        WaveFunction {
            grid,
            amplitudes: vec![Complex64::new(amp, 0.0); grid.n_points()],
        }
    }

    /// Normalized Gaussian packet `exp(-(x - center)^2 / (4 width^2)) * exp(i momentum x / hbar)`.
    ///
    /// `width` is the standard deviation of `|psi|^2`. Distances to the centre
    /// are taken as minimal images on the periodic grid.
    pub fn gaussian(grid: Grid, center: f64, width: f64, momentum: f64, hbar: f64) -> Result<Self> {
        if !(width >= grid.spacing()) || !width.is_finite() {
            return Err(Error::config(format!(
                "packet width {width} is below the grid spacing {}",
                grid.spacing()
            )));
        }
        if !grid.contains(center) {
            return Err(Error::config(format!(
                "packet centre {center} outside grid [{}, {})",
                grid.origin(),
                grid.end()
            )));
        }
        if !(hbar > 0.0) {
            return Err(Error::config("hbar must be positive"));
        }
        let k = momentum / hbar;
        let amplitudes = (0..grid.n_points())
            .map(|j| {
                let d = grid.min_image(grid.position(j) - center);
                let envelope = (-d * d / (4.0 * width * width)).exp();
                Complex64::from_polar(envelope, k * (center + d))
            })
            .collect();
        let mut psi = WaveFunction::new(grid, amplitudes)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Pointwise weighted sum of packets on a common grid. The result is not renormalized.
    pub fn superpose(components: &[(Complex64, &WaveFunction)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::config("superposition needs at least one component"))?;
        let grid = first.grid;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.n_points()];
        for (c, psi) in components {
            if psi.grid != grid {
                return Err(Error::GridMismatch);
            }
            for (a, p) in amplitudes.iter_mut().zip(&psi.amplitudes) {
                *a += c * p;
            }
        }
        WaveFunction::new(grid, amplitudes)
    }

    /// Two disjoint Gaussian packets with weights `alpha2` and `1 - alpha2`.
    pub fn two_packets(
        grid: Grid,
        alpha2: f64,
        x1: f64,
        x2: f64,
        width: f64,
        hbar: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha2) {
            return Err(Error::config(format!(
                "alpha2 must lie in [0, 1] (got {alpha2})"
            )));
        }
        let p1 = WaveFunction::gaussian(grid, x1, width, 0.0, hbar)?;
        let p2 = WaveFunction::gaussian(grid, x2, width, 0.0, hbar)?;
        WaveFunction::superpose(&[
            (Complex64::new(alpha2.sqrt(), 0.0), &p1),
            (Complex64::new((1.0 - alpha2).sqrt(), 0.0), &p2),
        ])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn checked_norm_sqr(&self) -> Result<f64> {
        let n = self.norm_sqr();
        if n > 0.0 && n.is_finite() {
            Ok(n)
        } else {
            Err(Error::ZeroNorm)
        }
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.checked_norm_sqr()?.sqrt();
        let inv = 1.0 / norm;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        Ok(norm)
    }

    pub fn scaled(&self, c: Complex64) -> WaveFunction {
        WaveFunction {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
        }
    }

    /// `<psi|O|psi> / <psi|psi>` for an observable diagonal in position.
    pub fn expectation(&self, observable: &[f64]) -> Result<f64> {
        if observable.len() != self.amplitudes.len() {
            return Err(Error::config(format!(
                "observable has {} entries, grid has {}",
                observable.len(),
                self.amplitudes.len()
            )));
        }
        let (num, den) =
            self.amplitudes
                .iter()
                .zip(observable)
                .fold((0.0, 0.0), |(num, den), (a, o)| {
                    let p = a.norm_sqr();
                    (num + p * o, den + p)
                });
        if !(den > 0.0 && den.is_finite()) {
            return Err(Error::ZeroNorm);
        }
        Ok(num / den)
    }

    pub fn mean_position(&self) -> Result<f64> {
        Ok(self.position_moments()?.0)
    }

    /// Standard deviation of position, `sqrt(<X^2> - <X>^2)`.
    pub fn spread(&self) -> Result<f64> {
        Ok(self.position_moments()?.1)
    }

    /// `(<X>, spread)` in two passes over the amplitudes.
    pub fn position_moments(&self) -> Result<(f64, f64)> {
        position_moments(&self.grid, &self.amplitudes)
    }

    /// Relative weight in each region delimited by the strictly increasing cut
    /// points `cuts`: `[origin, c0), [c0, c1), .., [c_last, end)`.
    pub fn region_weights(&self, cuts: &[f64]) -> Result<Vec<f64>> {
        validate_cuts(&self.grid, cuts)?;
        region_weights(&self.grid, &self.amplitudes, cuts)
    }

    /// `<P>` evaluated in the discrete plane-wave basis.
    pub fn momentum_expectation(&self, hbar: f64) -> Result<f64> {
        let spectrum = self.spectrum();
        let k = self.grid.wavenumbers();
        let (num, den) = spectrum
            .iter()
            .zip(&k)
            .fold((0.0, 0.0), |(num, den), (s, k)| {
                (num + s.norm_sqr() * k, den + s.norm_sqr())
            });
        if !(den > 0.0 && den.is_finite()) {
            return Err(Error::ZeroNorm);
        }
        Ok(hbar * num / den)
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.amplitudes.clone();
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        buf
    }
}

pub(crate) fn position_moments(grid: &Grid, amps: &[Complex64]) -> Result<(f64, f64)> {
    let mut den = 0.0;
    let mut first = 0.0;
    for (j, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        den += p;
        first += p * grid.position(j);
    }
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::ZeroNorm);
    }
    let mean = first / den;
    let var = amps
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let d = grid.position(j) - mean;
            a.norm_sqr() * d * d
        })
        .sum::<f64>()
        / den;
    Ok((mean, var.max(0.0).sqrt()))
}

pub(crate) fn validate_cuts(grid: &Grid, cuts: &[f64]) -> Result<()> {
    if let Some(bad) = cuts
        .iter()
        .find(|c| !(**c > grid.origin() && **c < grid.end()))
    {
        return Err(Error::config(format!(
            "region boundary {bad} not strictly inside grid ({}, {})",
            grid.origin(),
            grid.end()
        )));
    }
    if cuts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config(
            "region boundaries must be strictly increasing",
        ));
    }
    Ok(())
}

pub(crate) fn region_weights(grid: &Grid, amps: &[Complex64], cuts: &[f64]) -> Result<Vec<f64>> {
    let mut weights = vec![0.0; cuts.len() + 1];
    let mut region = 0;
    for (j, a) in amps.iter().enumerate() {
        let x = grid.position(j);
        while region < cuts.len() && x >= cuts[region] {
            region += 1;
        }
        weights[region] += a.norm_sqr();
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroNorm);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}
