use std::fmt::Write;

use crate::constraints::{ParsedIntent, RegionName};
use crate::scenario::Scenario;

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

fn bbox_json(b: &crate::constraints::BoundingBox) -> String {
    format!("[{}, {}, {}, {}]", coord(b.xmin), coord(b.ymin), coord(b.xmax), coord(b.ymax))
}

/// Literal coordinate string used for a site in the prompt.
pub fn site_coordinate_string(x: f64, y: f64) -> String {
    format!("({}, {})", coord(x), coord(y))
}

const SCHEMA: &str = r#"{
  "regions": [ { "bbox": [xmin, ymin, xmax, ymax], "objective": "maximize" | "minimize" } ],
  "tx_region": [xmin, ymin, xmax, ymax] | null,
  "rx_orientation": { "sites": [site ids], "angle_deg": number } | null
}"#;

/// System prompt for intent parsing. A pure function of the scenario.
pub fn build_scene_prompt(scenario: &Scenario) -> String {
    let (lx, ly) = (scenario.lx, scenario.ly);
    let mut p = String::new();
    p.push_str("You translate wireless deployment requests into spatial constraints.\n\n");

    p.push_str("## 1. Scenario\n");
    let _ = writeln!(p, "The map is {} m wide (x) and {} m tall (y).", coord(lx), coord(ly));
    p.push_str("Coordinates are in metres with the origin at the south-west corner. x grows to the east, y grows to the north (north = larger y).\n");
    let _ = writeln!(p, "Receiver sites ({}):", scenario.sites.len());
    for s in &scenario.sites {
        let _ = writeln!(p, "- Site {} at {}", s.id, site_coordinate_string(s.x, s.y));
    }
    let _ = writeln!(
        p,
        "Candidate base-station positions form a {}x{} grid covering the map.\n",
        scenario.grid.nx, scenario.grid.ny
    );

    p.push_str("## 2. Region names\n");
    p.push_str("Use these boxes [xmin, ymin, xmax, ymax] for region words:\n");
    for r in RegionName::ALL {
        let _ = writeln!(p, "- {}: {}", r.as_str(), bbox_json(&r.bbox(lx, ly)));
    }
    p.push_str("A specific site is addressed with a zero-size box at its coordinates.\n\n");

    p.push_str("## 3. Examples\n");
    let north = RegionName::North.bbox(lx, ly);
    let south = RegionName::South.bbox(lx, ly);
    let center = RegionName::Center.bbox(lx, ly);
    let _ = writeln!(p, "Input: \"Enhance coverage in the north, keep the south quiet, put the base station in the center.\"");
    let _ = writeln!(
        p,
        "Output: {{\"regions\": [{{\"bbox\": {}, \"objective\": \"maximize\"}}, {{\"bbox\": {}, \"objective\": \"minimize\"}}], \"tx_region\": {}, \"rx_orientation\": null}}",
        bbox_json(&north),
        bbox_json(&south),
        bbox_json(&center)
    );
    let west = RegionName::West.bbox(lx, ly);
    match scenario.sites.first() {
        Some(s) => {
            let _ = writeln!(p, "Input: \"Boost Site {} and suppress everything in the west.\"", s.id);
            let _ = writeln!(
                p,
                "Output: {{\"regions\": [{{\"bbox\": {}, \"objective\": \"maximize\"}}, {{\"bbox\": {}, \"objective\": \"minimize\"}}], \"tx_region\": null, \"rx_orientation\": null}}",
                bbox_json(&crate::constraints::BoundingBox::point(s.x, s.y)),
                bbox_json(&west)
            );
        }
        None => {
            let _ = writeln!(p, "Input: \"Suppress the west.\"");
            let _ = writeln!(
                p,
                "Output: {{\"regions\": [{{\"bbox\": {}, \"objective\": \"minimize\"}}], \"tx_region\": null, \"rx_orientation\": null}}",
                bbox_json(&west)
            );
        }
    }
    p.push('\n');

    p.push_str("## 4. Output format\n");
    p.push_str("Reply with a single JSON object and nothing else, following this schema:\n");
    p.push_str(SCHEMA);
    p.push_str("\n\n");

    p.push_str("## 5. Validation rules\n");
    let _ = writeln!(p, "- Every x must lie in [0, {}] and every y in [0, {}].", coord(lx), coord(ly));
    p.push_str("- Each box needs xmin <= xmax and ymin <= ymax.\n");
    p.push_str("- At least one region must have objective \"maximize\".\n");
    p.push_str("- If no base-station location is requested, set tx_region to null (the whole map).\n");
    p.push_str("- If no receiver orientation is requested, set rx_orientation to null.\n");
    p
}

/// User message for a delta update of the current constraints.
pub fn build_update_prompt(current: &ParsedIntent, modification: &str) -> String {
    let current_json = serde_json::to_string(current).expect("intent serializes");
    format!(
        "Current constraints:\n{current_json}\n\nModification request: {modification}\n\n\
         Apply the request to the current constraints. Preserve unmodified constraints and change only \
         the parts the request asks for. Reply with the complete updated JSON object."
    )
}

pub const CLASSIFY_PROMPT: &str = "The user is reviewing parsed beamforming constraints. \
Classify the reply as CONFIRM if the user accepts them as they are, or MODIFY if the user wants any change. \
Answer with exactly one word: CONFIRM or MODIFY.";
