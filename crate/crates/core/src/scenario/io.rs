//! Line-oriented multipath file: a JSON header carrying the scenario and a
//! `schema_version`, then one JSON record per line.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path as FsPath;

use serde::Serialize;

use super::{MultipathRecord, Scenario, ScenarioError};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize)]
struct Header<'a> {
    schema_version: u64,
    #[serde(flatten)]
    scenario: &'a Scenario,
}

pub fn write_multipath<W: Write>(
    mut out: W,
    scenario: &Scenario,
    records: &[MultipathRecord],
) -> Result<(), ScenarioError> {
    let header = Header { schema_version: SCHEMA_VERSION, scenario };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::other)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_multipath(
    path: impl AsRef<FsPath>,
    scenario: &Scenario,
    records: &[MultipathRecord],
) -> Result<(), ScenarioError> {
    write_multipath(BufWriter::new(File::create(path)?), scenario, records)
}

pub fn read_multipath<R: BufRead>(input: R) -> Result<(Scenario, Vec<MultipathRecord>), ScenarioError> {
    let line_err = |line: usize, message: String| ScenarioError::Line { line, message };
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| line_err(1, "missing header".into()))??;
    let header: serde_json::Value =
        serde_json::from_str(&first).map_err(|e| line_err(1, format!("bad header: {e}")))?;
    match header.get("schema_version").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(ScenarioError::Version(v)),
        None => return Err(line_err(1, "header lacks schema_version".into())),
    }
    let scenario: Scenario =
        serde_json::from_value(header).map_err(|e| line_err(1, format!("bad header: {e}")))?;
    scenario.validate()?;

    let sites: HashSet<u32> = scenario.sites.iter().map(|s| s.id).collect();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MultipathRecord = serde_json::from_str(&line).map_err(|e| line_err(n, e.to_string()))?;
        if rec.candidate_index >= scenario.grid.len() {
            return Err(line_err(n, format!("candidate index {} out of range", rec.candidate_index)));
        }
        if !sites.contains(&rec.site_id) {
            return Err(line_err(n, format!("unknown site id {}", rec.site_id)));
        }
        if rec.paths.is_empty() {
            return Err(line_err(n, "record has no paths".into()));
        }
        if let Some(msg) = rec.paths.iter().find_map(|p| p.validate().err()) {
            return Err(line_err(n, msg));
        }
        if !seen.insert((rec.candidate_index, rec.site_id)) {
            return Err(line_err(n, format!("duplicate record ({}, {})", rec.candidate_index, rec.site_id)));
        }
        records.push(rec);
    }
    Ok((scenario, records))
}

pub fn load_multipath(path: impl AsRef<FsPath>) -> Result<(Scenario, Vec<MultipathRecord>), ScenarioError> {
    read_multipath(BufReader::new(File::open(path)?))
}
