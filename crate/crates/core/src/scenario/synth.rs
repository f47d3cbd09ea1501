//! Synthetic multipath generator standing in for ray-tracer output.
//!
//! Free-space 20·log10 decay from a reference field strength at 1 m, one
//! line-of-sight path per (candidate, site) pair plus one two-leg bounce per
//! scatterer with a fixed reflection loss.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ArrayConfig, CandidateGrid, MultipathRecord, Path, Scenario, ScenarioError, Site};

/// Elevation of every synthetic path.
///
/// The steering phase scales with sin(el), so paths confined to the horizontal
/// plane sit at el = π/2. At el = 0 every steering vector degenerates to all
/// ones and every channel to the same rank-1 matrix.
pub const SYNTH_ELEVATION_RAD: f64 = FRAC_PI_2;

const MIN_SEPARATION_M: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub lx: f64,
    pub ly: f64,
    pub carrier_hz: f64,
    pub array: ArrayConfig,
    pub nx: usize,
    pub ny: usize,
    pub sites: Vec<Site>,
    pub scatterers: usize,
    /// Field strength at 1 m in dBµV/m.
    pub e0_dbuv: f64,
    pub reflection_loss_db: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        let (lx, ly) = (224.0, 222.0);
        SynthParams {
            lx,
            ly,
            carrier_hz: 2e9,
            array: ArrayConfig::default(),
            nx: 30,
            ny: 30,
            sites: ring_layout(4, lx, ly),
            scatterers: 3,
            e0_dbuv: 86.0,
            reflection_loss_db: 6.0,
        }
    }
}

impl SynthParams {
    /// The fixed reference deployment used by the experiment drivers and the
    /// acceptance suite: one receiver in each quadrant, array axis along y,
    /// strongly attenuated bounces.
    pub fn reference() -> Self {
        SynthParams {
            array: ArrayConfig { orientation_rad: FRAC_PI_2, ..ArrayConfig::default() },
            sites: vec![
                Site { id: 6, x: 45.0, y: 55.0 },
                Site { id: 7, x: 75.0, y: 200.0 },
                Site { id: 8, x: 190.0, y: 175.0 },
                Site { id: 12, x: 145.0, y: 25.0 },
            ],
            e0_dbuv: 83.0,
            reflection_loss_db: 40.0,
            ..SynthParams::default()
        }
    }

    /// Replace the site layout with `n` sites on a fixed ellipse, ids 1..=n.
    pub fn with_site_count(mut self, n: usize) -> Self {
        self.sites = ring_layout(n, self.lx, self.ly);
        self
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            lx: self.lx,
            ly: self.ly,
            carrier_hz: self.carrier_hz,
            array: self.array,
            sites: self.sites.clone(),
            grid: CandidateGrid::centered(self.lx, self.ly, self.nx, self.ny),
        }
    }
}

fn ring_layout(n: usize, lx: f64, ly: f64) -> Vec<Site> {
    (0..n)
        .map(|k| {
            let a = TAU * (k as f64 + 0.5) / n.max(1) as f64 + 0.3;
            Site {
                id: k as u32 + 1,
                x: lx / 2.0 + 0.37 * lx * a.cos(),
                y: ly / 2.0 + 0.37 * ly * a.sin(),
            }
        })
        .collect()
}

/// Seeded scatterer placement plus the propagation rules, reusable for probe
/// points that are not sites (heatmaps).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    pub params: SynthParams,
    pub scatterers: Vec<(f64, f64)>,
}

impl SynthWorld {
    pub fn new(params: SynthParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scatterers = (0..params.scatterers)
            .map(|_| (rng.random_range(0.0..params.lx), rng.random_range(0.0..params.ly)))
            .collect();
        SynthWorld { params, scatterers }
    }

    fn wavelength(&self) -> f64 {
        super::SPEED_OF_LIGHT / self.params.carrier_hz
    }

    /// Paths from a transmitter at `tx` to a receiver at `rx`. Line-of-sight
    /// distances below `min_los` are clamped to it.
    pub fn paths(&self, tx: (f64, f64), rx: (f64, f64), min_los: f64) -> Vec<Path> {
        let lambda = self.wavelength();
        let e0 = self.params.e0_dbuv;
        let phase = |d: f64| (-TAU * d / lambda).rem_euclid(TAU);
        let el = SYNTH_ELEVATION_RAD;
        let d = (rx.0 - tx.0).hypot(rx.1 - tx.1).max(min_los);
        let mut out = Vec::with_capacity(1 + self.scatterers.len());
        out.push(Path {
            e_dbuv: e0 - 20.0 * d.log10(),
            phase_rad: phase(d),
            dep_az_rad: (rx.1 - tx.1).atan2(rx.0 - tx.0),
            dep_el_rad: el,
            arr_az_rad: (tx.1 - rx.1).atan2(tx.0 - rx.0),
            arr_el_rad: el,
        });
        for &(qx, qy) in &self.scatterers {
            let d1 = (qx - tx.0).hypot(qy - tx.1);
            let d2 = (rx.0 - qx).hypot(rx.1 - qy);
            let total = (d1 + d2).max(min_los);
            out.push(Path {
                e_dbuv: e0 - 20.0 * total.log10() - self.params.reflection_loss_db,
                phase_rad: phase(total),
                dep_az_rad: (qy - tx.1).atan2(qx - tx.0),
                dep_el_rad: el,
                arr_az_rad: (qy - rx.1).atan2(qx - rx.0),
                arr_el_rad: el,
            });
        }
        out
    }

    pub fn records(&self, scenario: &Scenario) -> Result<Vec<MultipathRecord>, ScenarioError> {
        let mut records = Vec::with_capacity(scenario.grid.len() * scenario.sites.len());
        for m in 0..scenario.grid.len() {
            let c = scenario.grid.coords(m);
            for s in &scenario.sites {
                if (s.x - c.0).hypot(s.y - c.1) < MIN_SEPARATION_M {
                    return Err(ScenarioError::Degenerate { site: s.id, candidate: m });
                }
                records.push(MultipathRecord {
                    candidate_index: m,
                    site_id: s.id,
                    paths: self.paths(c, (s.x, s.y), 0.0),
                });
            }
        }
        Ok(records)
    }
}

/// Build a scenario and its multipath records. The seed drives scatterer
/// placement only.
pub fn generate_synthetic_scenario(
    params: &SynthParams,
    seed: u64,
) -> Result<(Scenario, Vec<MultipathRecord>), ScenarioError> {
    let scenario = params.scenario();
    scenario.validate()?;
    let records = SynthWorld::new(params.clone(), seed).records(&scenario)?;
    Ok((scenario, records))
}
