//! Physical deployment: map, receiver sites, candidate transmitter grid and the
//! shared uniform linear array.

mod io;
mod synth;

pub use io::{load_multipath, read_multipath, save_multipath, write_multipath, SCHEMA_VERSION};
pub use synth::{generate_synthetic_scenario, SynthParams, SynthWorld};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("degenerate geometry: site {site} coincides with candidate {candidate}")]
    Degenerate { site: u32, candidate: usize },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("unsupported schema version {0}")]
    Version(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_elements: usize,
    pub spacing_over_wavelength: f64,
    pub orientation_rad: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig { n_elements: 4, spacing_over_wavelength: 0.5, orientation_rad: 0.0 }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_elements == 0 {
            return Err(ScenarioError::Invalid("array needs at least one element".into()));
        }
        if !(self.spacing_over_wavelength > 0.0) || !self.spacing_over_wavelength.is_finite() {
            return Err(ScenarioError::Invalid("element spacing must be positive".into()));
        }
        if !self.orientation_rad.is_finite() {
            return Err(ScenarioError::Invalid("array orientation must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

/// Regular grid of candidate transmitter positions, row-major with x fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl CandidateGrid {
    /// Cell-centred grid covering `[0,lx]×[0,ly]`.
    pub fn centered(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        CandidateGrid { nx, ny, x0: dx / 2.0, y0: dy / 2.0, dx, dy }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, m: usize) -> (usize, usize) {
        (m % self.nx, m / self.nx)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, m: usize) -> (f64, f64) {
        let (ix, iy) = self.cell(m);
        (self.x0 + ix as f64 * self.dx, self.y0 + iy as f64 * self.dy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub lx: f64,
    pub ly: f64,
    pub carrier_hz: f64,
    pub array: ArrayConfig,
    pub sites: Vec<Site>,
    pub grid: CandidateGrid,
}

impl Scenario {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn site(&self, id: u32) -> Option<&Site> {
        self.sites.iter().find(|s| s.id == id)
    }

    pub fn site_ids(&self) -> Vec<u32> {
        self.sites.iter().map(|s| s.id).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.lx > 0.0 && self.ly > 0.0) || !self.lx.is_finite() || !self.ly.is_finite() {
            return bad(format!("map size {}x{} must be positive", self.lx, self.ly));
        }
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return bad("carrier frequency must be positive".into());
        }
        self.array.validate()?;
        for (i, s) in self.sites.iter().enumerate() {
            if !(0.0..=self.lx).contains(&s.x) || !(0.0..=self.ly).contains(&s.y) {
                return bad(format!("site {} at ({}, {}) lies outside the map", s.id, s.x, s.y));
            }
            if self.sites[..i].iter().any(|o| o.id == s.id) {
                return bad(format!("duplicate site id {}", s.id));
            }
        }
        let g = &self.grid;
        if g.is_empty() {
            return bad("candidate grid is empty".into());
        }
        if !(g.dx >= 0.0 && g.dy >= 0.0) {
            return bad("grid spacing must be non-negative".into());
        }
        let (x1, y1) = g.coords(g.len() - 1);
        if g.x0 < 0.0 || g.y0 < 0.0 || x1 > self.lx + 1e-9 || y1 > self.ly + 1e-9 {
            return bad("candidate grid extends beyond the map".into());
        }
        Ok(())
    }
}

/// One propagation path between a candidate and a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub e_dbuv: f64,
    pub phase_rad: f64,
    pub dep_az_rad: f64,
    pub dep_el_rad: f64,
    pub arr_az_rad: f64,
    pub arr_el_rad: f64,
}

impl Path {
    fn validate(&self) -> Result<(), String> {
        let v = [self.e_dbuv, self.phase_rad, self.dep_az_rad, self.dep_el_rad, self.arr_az_rad, self.arr_el_rad];
        if v.iter().any(|x| !x.is_finite()) {
            return Err("path fields must be finite".into());
        }
        let half_pi = std::f64::consts::FRAC_PI_2 + 1e-12;
        if self.dep_el_rad.abs() > half_pi || self.arr_el_rad.abs() > half_pi {
            return Err("elevation outside [-pi/2, pi/2]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathRecord {
    #[serde(rename = "m")]
    pub candidate_index: usize,
    #[serde(rename = "s")]
    pub site_id: u32,
    pub paths: Vec<Path>,
}
