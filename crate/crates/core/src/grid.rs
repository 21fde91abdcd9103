//! Uniform periodic 1-D lattice and the physical constants of the collective
//! coordinate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic lattice: `n_points` sites at `origin + j * spacing`.
///
/// The point count is a power of two so the kinetic propagator can work in the
/// plane-wave basis with a radix-2 transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    n_points: usize,
    spacing: f64,
    origin: f64,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    n_points: usize,
    spacing: f64,
    origin: f64,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        Grid::new(r.n_points, r.spacing, r.origin)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            n_points: g.n_points,
            spacing: g.spacing,
            origin: g.origin,
        }
    }
}

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(n_points: usize, spacing: f64, origin: f64) -> Result<Self> {
        if n_points < Self::MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::config(format!(
                "grid n_points must be a power of two >= {} (got {n_points})",
                Self::MIN_POINTS
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::config(format!(
                "grid spacing must be positive and finite (got {spacing})"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::config(format!(
                "grid origin must be finite (got {origin})"
            )));
        }
        Ok(Grid {
            n_points,
            spacing,
            origin,
        })
    }

    /// Grid of `n_points` with unit spacing, centred so that x = 0 is site `n_points / 2`.
    pub fn centered(n_points: usize, spacing: f64) -> Result<Self> {
        Grid::new(n_points, spacing, -(n_points as f64) * spacing / 2.0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Total periodic length `n_points * spacing`.
    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    /// One past the last site: the half-open range is `[origin, end)`.
    pub fn end(&self) -> f64 {
        self.origin + self.extent()
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.origin && x < self.end()
    }

    /// Wraps a displacement into `[-L/2, L/2)`.
    pub fn min_image(&self, dx: f64) -> f64 {
        let l = self.extent();
        dx - l * ((dx + 0.5 * l) / l).floor()
    }

    /// Largest minimal-image distance from `x0` to any site.
    pub fn max_distance_from(&self, x0: f64) -> f64 {
        (0..self.n_points)
            .map(|j| self.min_image(self.position(j) - x0).abs())
            .fold(0.0, f64::max)
    }

    /// Angular wavenumbers in FFT order (`0, 1, .., n/2-1, -n/2, .., -1` times `2 pi / L`).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = 2.0 * PI / self.extent();
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n } as f64 * dk)
            .collect()
    }
}

/// Particle number, mass per particle and reduced Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n_particles: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            n_particles: 1.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(n_particles: f64, mass: f64, hbar: f64) -> Result<Self> {
        let p = PhysicalParams {
            n_particles,
            mass,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_particles", self.n_particles),
            ("mass", self.mass),
            ("hbar", self.hbar),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "{name} must be strictly positive (got {v})"
                )));
            }
        }
        Ok(())
    }

    /// Mass of the whole object, `N * m`.
    pub fn total_mass(&self) -> f64 {
        self.n_particles * self.mass
    }
}
