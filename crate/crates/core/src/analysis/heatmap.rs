use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{write_csv, AnalysisError};
use crate::channel::{apply_reciprocity, synthesize_channel};
use crate::optimizer::{received_power, Precoder};
use crate::scenario::{CandidateGrid, Scenario, SynthWorld};
use crate::to_db;

/// Probes closer than this to the transmitter are evaluated at this distance.
pub const MIN_PROBE_DISTANCE_M: f64 = 1.0;

/// Received power in dB on a regular probe grid, row-major with x fastest and
/// the first row at the southern edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub resolution: usize,
    pub lx: f64,
    pub ly: f64,
    pub tx: (f64, f64),
    pub values_db: Vec<f64>,
}

/// Power at an arbitrary point for a transmitter at candidate `m`, using the
/// same path model, channel synthesis and transpose as the channel tensor.
pub fn probe_power(world: &SynthWorld, scenario: &Scenario, m: usize, w: &Precoder, point: (f64, f64)) -> Result<f64, AnalysisError> {
    if m >= scenario.grid.len() {
        return Err(AnalysisError::Heatmap(format!("candidate {m} is outside the grid")));
    }
    let paths = world.paths(scenario.grid.coords(m), point, MIN_PROBE_DISTANCE_M);
    let h = apply_reciprocity(&synthesize_channel(&paths, &scenario.array)).expect("square synthetic channel");
    Ok(received_power(&h, w)?)
}

pub fn heatmap(world: &SynthWorld, scenario: &Scenario, m: usize, w: &Precoder, resolution: usize) -> Result<Heatmap, AnalysisError> {
    if resolution == 0 {
        return Err(AnalysisError::Heatmap("resolution must be positive".into()));
    }
    let probes = CandidateGrid::centered(scenario.lx, scenario.ly, resolution, resolution);
    let values_db = (0..probes.len())
        .map(|k| probe_power(world, scenario, m, w, probes.coords(k)).map(to_db))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Heatmap { resolution, lx: scenario.lx, ly: scenario.ly, tx: scenario.grid.coords(m), values_db })
}

impl Heatmap {
    fn probes(&self) -> CandidateGrid {
        CandidateGrid::centered(self.lx, self.ly, self.resolution, self.resolution)
    }

    pub fn range_db(&self) -> (f64, f64) {
        let lo = self.values_db.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// `x,y,db`, one row per probe.
    pub fn to_csv(&self) -> String {
        let g = self.probes();
        write_csv(
            ["x", "y", "db"],
            self.values_db.iter().enumerate().map(|(k, v)| {
                let (x, y) = g.coords(k);
                [x.to_string(), y.to_string(), v.to_string()]
            }),
        )
    }

    /// Binary 16-bit graymap (P5, big-endian) mapped linearly over the value
    /// range, north at the top.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.resolution;
        let (lo, hi) = self.range_db();
        let span = hi - lo;
        let mut out = Vec::with_capacity(32 + 2 * n * n);
        write!(out, "P5\n{n} {n}\n65535\n").expect("in-memory write");
        for row in (0..n).rev() {
            for col in 0..n {
                let v = self.values_db[row * n + col];
                let level = if span > 0.0 { ((v - lo) / span * 65535.0).round() as u16 } else { 0 };
                out.extend_from_slice(&level.to_be_bytes());
            }
        }
        out
    }
}
