use serde_json::Value;

use super::{BoundingBox, ConstraintError, Objective, ParsedIntent, RegionConstraint, RxOrientation};
use crate::scenario::Scenario;

/// Strip Markdown fences and surrounding prose: keep the span from the first
/// `{` to the last `}`.
fn extract_json(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    (end > start).then(|| &raw[start..=end])
}

fn invalid(msg: impl Into<String>) -> ConstraintError {
    ConstraintError::Validation(msg.into())
}

fn number(v: &Value, what: &str) -> Result<f64, ConstraintError> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| invalid(format!("{what} must be a finite number")))
}

/// Accepts `[xmin, ymin, xmax, ymax]`, `{"xmin":..,"ymin":..,"xmax":..,"ymax":..}`
/// or `{"bbox": ...}`.
fn parse_bbox(v: &Value) -> Result<BoundingBox, ConstraintError> {
    match v {
        Value::Array(a) if a.len() == 4 => {
            let n: Vec<f64> = a.iter().map(|x| number(x, "bbox coordinate")).collect::<Result<_, _>>()?;
            Ok(BoundingBox::new(n[0], n[1], n[2], n[3]))
        }
        Value::Object(o) if o.contains_key("bbox") => parse_bbox(&o["bbox"]),
        Value::Object(o) => {
            let get = |k: &str| o.get(k).ok_or_else(|| invalid(format!("bbox lacks {k}"))).and_then(|x| number(x, k));
            Ok(BoundingBox::new(get("xmin")?, get("ymin")?, get("xmax")?, get("ymax")?))
        }
        _ => Err(invalid("bbox must be [xmin, ymin, xmax, ymax]")),
    }
}

fn clip_checked(b: BoundingBox, lx: f64, ly: f64) -> Result<BoundingBox, ConstraintError> {
    if !b.is_valid() {
        return Err(invalid(format!("bbox {b} has min above max")));
    }
    Ok(b.clip(lx, ly))
}

fn parse_orientation(v: &Value) -> Result<Option<RxOrientation>, ConstraintError> {
    if v.is_null() {
        return Ok(None);
    }
    let sites = v
        .get("sites")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("rx_orientation needs a sites list"))?
        .iter()
        .map(|s| s.as_u64().and_then(|x| u32::try_from(x).ok()).ok_or_else(|| invalid("bad site id")))
        .collect::<Result<Vec<u32>, _>>()?;
    let angle_rad = match (v.get("angle_rad"), v.get("angle_deg")) {
        (Some(a), _) => number(a, "angle_rad")?,
        (None, Some(d)) => number(d, "angle_deg")?.to_radians(),
        _ => return Err(invalid("rx_orientation needs angle_rad")),
    };
    Ok(Some(RxOrientation { sites, angle_rad }))
}

/// Deterministic clean-up of raw parser output: strip fences and prose, parse
/// JSON, clip boxes to the map, normalize objective keywords, default the tx
/// region to the full map.
pub fn postprocess(raw_text: &str, scenario: &Scenario) -> Result<ParsedIntent, ConstraintError> {
    let parse_err = |message: String| ConstraintError::Parse { message, text: raw_text.to_string() };
    let body = extract_json(raw_text).ok_or_else(|| parse_err("no JSON object found".into()))?;
    let root: Value = serde_json::from_str(body).map_err(|e| parse_err(e.to_string()))?;
    let (lx, ly) = (scenario.lx, scenario.ly);

    let regions_v = root
        .get("regions")
        .ok_or_else(|| invalid("missing regions list"))?
        .as_array()
        .ok_or_else(|| invalid("regions must be a list"))?;
    let mut regions = Vec::with_capacity(regions_v.len());
    for r in regions_v {
        let bbox = parse_bbox(r.get("bbox").ok_or_else(|| invalid("region lacks bbox"))?)?;
        let word = r.get("objective").and_then(Value::as_str).ok_or_else(|| invalid("region lacks objective"))?;
        let objective = Objective::from_keyword(word).ok_or_else(|| invalid(format!("unknown objective '{word}'")))?;
        regions.push(RegionConstraint { bbox: clip_checked(bbox, lx, ly)?, objective });
    }
    if regions.is_empty() {
        return Err(invalid("empty regions list"));
    }

    let tx_region = match root.get("tx_region") {
        None | Some(Value::Null) => BoundingBox::full(lx, ly),
        Some(v) => clip_checked(parse_bbox(v)?, lx, ly)?,
    };
    let rx_orientation = match root.get("rx_orientation") {
        None => None,
        Some(v) => parse_orientation(v)?,
    };
    Ok(ParsedIntent { regions, tx_region: Some(tx_region), rx_orientation })
}
