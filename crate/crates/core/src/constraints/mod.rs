//! Structured spatial constraints: named regions, bounding-box resolution to
//! site and candidate sets, and the clean-up chain applied to raw parser text.

mod postprocess;

pub use postprocess::postprocess;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("could not parse constraint JSON: {message}")]
    Parse { message: String, text: String },
    #[error("invalid constraints: {0}")]
    Validation(String),
    #[error("unknown region name '{0}'")]
    UnknownRegion(String),
    #[error("no bright site matched")]
    NoBright,
    #[error("no candidate transmitter position lies in the tx region")]
    EmptyFeasible,
}

/// Axis-aligned box in map metres. Serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl From<[f64; 4]> for BoundingBox {
    fn from(v: [f64; 4]) -> Self {
        BoundingBox { xmin: v[0], ymin: v[1], xmax: v[2], ymax: v[3] }
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.xmin, b.ymin, b.xmax, b.ymax]
    }
}

impl BoundingBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        BoundingBox { xmin, ymin, xmax, ymax }
    }

    pub fn full(lx: f64, ly: f64) -> Self {
        BoundingBox::new(0.0, 0.0, lx, ly)
    }

    pub fn point(x: f64, y: f64) -> Self {
        BoundingBox::new(x, y, x, y)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }

    pub fn clip(&self, lx: f64, ly: f64) -> Self {
        BoundingBox {
            xmin: self.xmin.clamp(0.0, lx),
            ymin: self.ymin.clamp(0.0, ly),
            xmax: self.xmax.clamp(0.0, lx),
            ymax: self.ymax.clamp(0.0, ly),
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.xmin, self.ymin, self.xmax, self.ymax].iter().all(|v| v.is_finite())
            && self.xmin <= self.xmax
            && self.ymin <= self.ymax
    }

    pub fn covers(&self, other: &BoundingBox) -> bool {
        self.xmin <= other.xmin && self.ymin <= other.ymin && self.xmax >= other.xmax && self.ymax >= other.ymax
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]x[{}, {}]", self.xmin, self.xmax, self.ymin, self.ymax)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Maximize,
    Minimize,
}

impl Objective {
    /// Canonical objective for a keyword, case-insensitive.
    pub fn from_keyword(s: &str) -> Option<Objective> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" | "maximize" | "enhance" | "boost" => Some(Objective::Maximize),
            "min" | "minimize" | "suppress" | "null" => Some(Objective::Minimize),
            _ => None,
        }
    }

    pub fn flipped(self) -> Objective {
        match self {
            Objective::Maximize => Objective::Minimize,
            Objective::Minimize => Objective::Maximize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionConstraint {
    pub bbox: BoundingBox,
    pub objective: Objective,
}

/// Receiver orientation request. Parsed and echoed, not applied to channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxOrientation {
    pub sites: Vec<u32>,
    pub angle_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedIntent {
    pub regions: Vec<RegionConstraint>,
    pub tx_region: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_orientation: Option<RxOrientation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub bright: Vec<u32>,
    pub dark: Vec<u32>,
    pub feasible: Vec<usize>,
    pub source: ParsedIntent,
}

impl ConstraintSet {
    pub fn summary(&self) -> String {
        format!(
            "bright sites: {:?}; dark sites: {:?}; feasible candidates: {}",
            self.bright,
            self.dark,
            self.feasible.len()
        )
    }

    /// Bright then dark site ids, the channels an optimization needs.
    pub fn active_sites(&self) -> Vec<u32> {
        self.bright.iter().chain(&self.dark).copied().collect()
    }
}

/// The ten named regions. North is larger y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionName {
    North,
    South,
    East,
    West,
    Northeast,
    Northwest,
    Southeast,
    Southwest,
    Center,
    Everywhere,
}

impl RegionName {
    pub const ALL: [RegionName; 10] = [
        RegionName::North,
        RegionName::South,
        RegionName::East,
        RegionName::West,
        RegionName::Northeast,
        RegionName::Northwest,
        RegionName::Southeast,
        RegionName::Southwest,
        RegionName::Center,
        RegionName::Everywhere,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionName::North => "north",
            RegionName::South => "south",
            RegionName::East => "east",
            RegionName::West => "west",
            RegionName::Northeast => "northeast",
            RegionName::Northwest => "northwest",
            RegionName::Southeast => "southeast",
            RegionName::Southwest => "southwest",
            RegionName::Center => "center",
            RegionName::Everywhere => "everywhere",
        }
    }

    pub fn bbox(self, lx: f64, ly: f64) -> BoundingBox {
        let (hx, hy) = (lx / 2.0, ly / 2.0);
        let b = BoundingBox::new;
        match self {
            RegionName::North => b(0.0, hy, lx, ly),
            RegionName::South => b(0.0, 0.0, lx, hy),
            RegionName::East => b(hx, 0.0, lx, ly),
            RegionName::West => b(0.0, 0.0, hx, ly),
            RegionName::Northeast => b(hx, hy, lx, ly),
            RegionName::Northwest => b(0.0, hy, hx, ly),
            RegionName::Southeast => b(hx, 0.0, lx, hy),
            RegionName::Southwest => b(0.0, 0.0, hx, hy),
            RegionName::Center => b(lx / 4.0, ly / 4.0, 3.0 * lx / 4.0, 3.0 * ly / 4.0),
            RegionName::Everywhere => b(0.0, 0.0, lx, ly),
        }
    }
}

impl FromStr for RegionName {
    type Err = ConstraintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        RegionName::ALL
            .into_iter()
            .find(|r| r.as_str() == t)
            .ok_or(ConstraintError::UnknownRegion(s.to_string()))
    }
}

pub fn region_for_keyword(name: &str, lx: f64, ly: f64) -> Result<BoundingBox, ConstraintError> {
    Ok(name.parse::<RegionName>()?.bbox(lx, ly))
}

pub fn sites_in_bbox(bbox: &BoundingBox, scenario: &Scenario) -> Vec<u32> {
    let set: BTreeSet<u32> = scenario.sites.iter().filter(|s| bbox.contains(s.x, s.y)).map(|s| s.id).collect();
    set.into_iter().collect()
}

pub fn candidates_in_bbox(bbox: &BoundingBox, scenario: &Scenario) -> Vec<usize> {
    (0..scenario.grid.len())
        .filter(|&m| {
            let (x, y) = scenario.grid.coords(m);
            bbox.contains(x, y)
        })
        .collect()
}

/// Turn a validated intent into site and candidate sets. Bright wins when a
/// site falls in both a maximize and a minimize box.
pub fn resolve(intent: &ParsedIntent, scenario: &Scenario) -> Result<ConstraintSet, ConstraintError> {
    let mut bright = BTreeSet::new();
    let mut dark = BTreeSet::new();
    for r in &intent.regions {
        let target = match r.objective {
            Objective::Maximize => &mut bright,
            Objective::Minimize => &mut dark,
        };
        target.extend(sites_in_bbox(&r.bbox, scenario));
    }
    let dark: Vec<u32> = dark.difference(&bright).copied().collect();
    if bright.is_empty() {
        return Err(ConstraintError::NoBright);
    }
    let tx = intent.tx_region.unwrap_or_else(|| BoundingBox::full(scenario.lx, scenario.ly));
    let feasible = candidates_in_bbox(&tx, scenario);
    if feasible.is_empty() {
        return Err(ConstraintError::EmptyFeasible);
    }
    Ok(ConstraintSet { bright: bright.into_iter().collect(), dark, feasible, source: intent.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SynthParams;

    fn bb(v: [f64; 4]) -> BoundingBox {
        v.into()
    }

    #[test]
    fn named_regions() {
        assert_eq!(region_for_keyword("northwest", 224.0, 222.0).unwrap(), bb([0.0, 111.0, 112.0, 222.0]));
        assert_eq!(region_for_keyword("everywhere", 10.0, 10.0).unwrap(), bb([0.0, 0.0, 10.0, 10.0]));
        assert_eq!(region_for_keyword("center", 224.0, 222.0).unwrap(), bb([56.0, 55.5, 168.0, 166.5]));
        assert_eq!(region_for_keyword("North", 4.0, 2.0).unwrap(), bb([0.0, 1.0, 4.0, 2.0]));
        assert!(matches!(region_for_keyword("upstairs", 1.0, 1.0), Err(ConstraintError::UnknownRegion(_))));
    }

    #[test]
    fn point_box_on_site() {
        let sc = SynthParams::reference().scenario();
        assert_eq!(sites_in_bbox(&BoundingBox::point(75.0, 200.0), &sc), vec![7]);
        assert_eq!(sites_in_bbox(&BoundingBox::full(sc.lx, sc.ly), &sc), vec![6, 7, 8, 12]);
        assert_eq!(candidates_in_bbox(&BoundingBox::full(sc.lx, sc.ly), &sc).len(), 900);
    }

    #[test]
    fn bright_wins_overlap() {
        let sc = SynthParams::reference().scenario();
        let intent = ParsedIntent {
            regions: vec![
                RegionConstraint { bbox: bb([0.0, 0.0, 224.0, 222.0]), objective: Objective::Minimize },
                RegionConstraint { bbox: BoundingBox::point(145.0, 25.0), objective: Objective::Maximize },
            ],
            tx_region: None,
            rx_orientation: None,
        };
        let cs = resolve(&intent, &sc).unwrap();
        assert_eq!(cs.bright, vec![12]);
        assert_eq!(cs.dark, vec![6, 7, 8]);
        assert_eq!(cs.feasible.len(), 900);
    }

    #[test]
    fn resolve_errors() {
        let sc = SynthParams::reference().scenario();
        let only_min = ParsedIntent {
            regions: vec![RegionConstraint { bbox: bb([0.0, 0.0, 224.0, 222.0]), objective: Objective::Minimize }],
            tx_region: None,
            rx_orientation: None,
        };
        assert_eq!(resolve(&only_min, &sc), Err(ConstraintError::NoBright));
        let no_tx = ParsedIntent {
            regions: vec![RegionConstraint { bbox: bb([0.0, 0.0, 224.0, 222.0]), objective: Objective::Maximize }],
            tx_region: Some(bb([0.0, 0.0, 1.0, 1.0])),
            rx_orientation: None,
        };
        assert_eq!(resolve(&no_tx, &sc), Err(ConstraintError::EmptyFeasible));
    }

    #[test]
    fn bbox_serializes_as_array() {
        let s = serde_json::to_string(&bb([1.0, 2.0, 3.5, 4.0])).unwrap();
        assert_eq!(s, "[1.0,2.0,3.5,4.0]");
    }
}
