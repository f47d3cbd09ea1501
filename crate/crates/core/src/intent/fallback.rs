//! Deterministic keyword grammar used when no language model is available.

use crate::constraints::{BoundingBox, Objective, ParsedIntent, RegionConstraint, RegionName};
use crate::scenario::Scenario;

use super::IntentError;

/// Lower-cased words of one clause. Apostrophes stay inside words.
pub(crate) fn clauses(text: &str) -> Vec<Vec<String>> {
    let text = text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
    let mut out = vec![Vec::new()];
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<Vec<String>>| {
        if word.is_empty() {
            return;
        }
        let w = std::mem::take(word);
        let w = w.trim_matches('\'').to_string();
        if w == "and" {
            out.push(Vec::new());
        } else if !w.is_empty() {
            out.last_mut().expect("non-empty").push(w);
        }
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            word.push(ch);
        } else {
            flush(&mut word, &mut out);
            if matches!(ch, '.' | ';' | ',') {
                out.push(Vec::new());
            }
        }
    }
    flush(&mut word, &mut out);
    out.retain(|c| !c.is_empty());
    out
}

/// All words of the text, ignoring clause boundaries.
pub(crate) fn words(text: &str) -> Vec<String> {
    let text = text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|w| w.trim_matches('\'').to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trigger {
    Objective(Objective),
    Tx,
}

const MAXIMIZE_STEMS: [&str; 5] = ["enhanc", "boost", "maximi", "strong", "bright"];
const MINIMIZE_STEMS: [&str; 6] = ["suppress", "minimi", "null", "weak", "dark", "quiet"];
const TX_WORDS: [&str; 7] = ["place", "placed", "placing", "placement", "bs", "transmitter", "tx"];
const SWAP_WORDS: [&str; 5] = ["swap", "switch", "flip", "invert", "reverse"];

/// Trigger at `words[i]` and the number of words it spans.
fn trigger_at(words: &[String], i: usize) -> Option<(Trigger, usize)> {
    let w = words[i].as_str();
    if w == "base" && words.get(i + 1).is_some_and(|n| n == "station" || n == "stations") {
        return Some((Trigger::Tx, 2));
    }
    if TX_WORDS.contains(&w) || w == "transmitters" {
        return Some((Trigger::Tx, 1));
    }
    if MAXIMIZE_STEMS.iter().any(|s| w.starts_with(s)) {
        return Some((Trigger::Objective(Objective::Maximize), 1));
    }
    if MINIMIZE_STEMS.iter().any(|s| w.starts_with(s)) {
        return Some((Trigger::Objective(Objective::Minimize), 1));
    }
    None
}

fn cardinal(w: &str) -> Option<RegionName> {
    match w {
        "north" | "northern" => Some(RegionName::North),
        "south" | "southern" => Some(RegionName::South),
        "east" | "eastern" => Some(RegionName::East),
        "west" | "western" => Some(RegionName::West),
        _ => None,
    }
}

fn diagonal(ns: RegionName, ew: RegionName) -> Option<RegionName> {
    use RegionName::*;
    match (ns, ew) {
        (North, East) => Some(Northeast),
        (North, West) => Some(Northwest),
        (South, East) => Some(Southeast),
        (South, West) => Some(Southwest),
        _ => None,
    }
}

fn named_region(w: &str) -> Option<RegionName> {
    match w {
        "northeastern" => Some(RegionName::Northeast),
        "northwestern" => Some(RegionName::Northwest),
        "southeastern" => Some(RegionName::Southeast),
        "southwestern" => Some(RegionName::Southwest),
        "centre" | "central" | "middle" => Some(RegionName::Center),
        _ => w.parse().ok().or_else(|| cardinal(w)),
    }
}

/// Region token at `words[i]`: a box and the number of words it spans.
fn region_at(words: &[String], i: usize, scenario: &Scenario) -> Result<Option<(BoundingBox, usize)>, IntentError> {
    let w = words[i].as_str();
    if w == "site" || w == "sites" {
        if let Some(id) = words.get(i + 1).and_then(|n| n.parse::<u32>().ok()) {
            let s = scenario.site(id).ok_or(IntentError::UnknownSite(id))?;
            return Ok(Some((BoundingBox::point(s.x, s.y), 2)));
        }
        return Ok(None);
    }
    if let (Some(a), Some(b)) = (cardinal(w), words.get(i + 1).and_then(|n| cardinal(n))) {
        if let Some(d) = diagonal(a, b) {
            return Ok(Some((d.bbox(scenario.lx, scenario.ly), 2)));
        }
    }
    Ok(named_region(w).map(|r| (r.bbox(scenario.lx, scenario.ly), 1)))
}

/// What the grammar extracted from a piece of text, before defaults or merging.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Fragment {
    /// Regions in text order, each flagged when its clause starts with "also".
    pub regions: Vec<(RegionConstraint, bool)>,
    pub tx: Option<BoundingBox>,
    pub swap: bool,
}

impl Fragment {
    pub fn is_empty(&self) -> bool {
        self.regions.is_empty() && self.tx.is_none() && !self.swap
    }
}

pub(crate) fn fragment(text: &str, scenario: &Scenario) -> Result<Fragment, IntentError> {
    let mut frag = Fragment { swap: words(text).iter().any(|w| SWAP_WORDS.contains(&w.as_str())), ..Fragment::default() };
    // a clause without a trigger continues the previous one ("boost site 7 and site 8")
    let mut carried: Option<(Trigger, bool)> = None;
    for clause in clauses(text) {
        let also = clause.first().is_some_and(|w| w == "also");
        let mut triggers = Vec::new();
        let mut regions = Vec::new();
        let mut i = 0;
        while i < clause.len() {
            if let Some((t, span)) = trigger_at(&clause, i) {
                triggers.push((i, t));
                i += span;
            } else if let Some((b, span)) = region_at(&clause, i, scenario)? {
                regions.push((i, b));
                i += span;
            } else {
                i += 1;
            }
        }
        let mut emit = |t: Trigger, b: BoundingBox, also: bool| match t {
            Trigger::Objective(objective) => frag.regions.push((RegionConstraint { bbox: b, objective }, also)),
            Trigger::Tx => frag.tx = Some(b),
        };
        if triggers.is_empty() {
            if let Some((t, also)) = carried {
                for &(_, b) in &regions {
                    emit(t, b, also);
                }
            }
            continue;
        }
        for &(pos, t) in &triggers {
            // nearest region; on a tie the one after the trigger
            let nearest = regions.iter().min_by_key(|(rp, _)| (rp.abs_diff(pos), *rp < pos));
            if let Some(&(_, b)) = nearest {
                emit(t, b, also);
            }
        }
        carried = triggers.last().map(|&(_, t)| (t, also));
    }
    Ok(frag)
}

/// Keyword-grammar parse. The tx region defaults to the whole map.
pub fn fallback_parse(user_text: &str, scenario: &Scenario) -> Result<ParsedIntent, IntentError> {
    if user_text.trim().is_empty() {
        return Err(IntentError::EmptyInput);
    }
    let frag = fragment(user_text, scenario)?;
    if frag.regions.is_empty() {
        return Err(IntentError::NoIntent);
    }
    Ok(ParsedIntent {
        regions: frag.regions.into_iter().map(|(r, _)| r).collect(),
        tx_region: Some(frag.tx.unwrap_or_else(|| BoundingBox::full(scenario.lx, scenario.ly))),
        rx_orientation: None,
    })
}

/// Apply a modification fragment to the current intent.
///
/// A region with objective O replaces every existing O region unless its
/// clause starts with "also"; a tx region overwrites; "swap" flips every
/// existing objective first.
pub(crate) fn merge(current: &ParsedIntent, frag: &Fragment) -> Result<ParsedIntent, IntentError> {
    if frag.is_empty() {
        return Err(IntentError::NoModification);
    }
    let mut regions = current.regions.clone();
    if frag.swap {
        for r in &mut regions {
            r.objective = r.objective.flipped();
        }
    }
    for obj in [Objective::Maximize, Objective::Minimize] {
        if frag.regions.iter().any(|(r, also)| r.objective == obj && !also) {
            regions.retain(|r| r.objective != obj);
        }
    }
    regions.extend(frag.regions.iter().map(|(r, _)| *r));
    Ok(ParsedIntent {
        regions,
        tx_region: frag.tx.or(current.tx_region),
        rx_orientation: current.rx_orientation.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SynthParams;

    fn sc() -> Scenario {
        SynthParams::reference().scenario()
    }

    fn rc(b: BoundingBox, objective: Objective) -> RegionConstraint {
        RegionConstraint { bbox: b, objective }
    }

    #[test]
    fn clause_split() {
        assert_eq!(
            clauses("Boost Site 7 and site 8, keep it quiet; done."),
            vec![vec!["boost", "site", "7"], vec!["site", "8"], vec!["keep", "it", "quiet"], vec!["done"]]
        );
        assert_eq!(words("Don’t change"), vec!["don't", "change"]);
    }

    #[test]
    fn reference_sentence() {
        let s = sc();
        let p = fallback_parse("enhance signals in the north and suppress the south, base station in the center", &s).unwrap();
        assert_eq!(
            p.regions,
            vec![
                rc(RegionName::North.bbox(s.lx, s.ly), Objective::Maximize),
                rc(RegionName::South.bbox(s.lx, s.ly), Objective::Minimize)
            ]
        );
        assert_eq!(p.tx_region, Some(RegionName::Center.bbox(s.lx, s.ly)));
    }

    #[test]
    fn site_literals_and_inheritance() {
        let s = sc();
        let p = fallback_parse("boost site 7 and site 8, keep site 6 quiet, transmitter in the west", &s).unwrap();
        let pt = |id| {
            let site = s.site(id).unwrap();
            BoundingBox::point(site.x, site.y)
        };
        assert_eq!(
            p.regions,
            vec![rc(pt(7), Objective::Maximize), rc(pt(8), Objective::Maximize), rc(pt(6), Objective::Minimize)]
        );
        assert_eq!(p.tx_region, Some(RegionName::West.bbox(s.lx, s.ly)));
    }

    #[test]
    fn diagonal_and_default_tx() {
        let s = sc();
        let p = fallback_parse("suppress everything in the south-east", &s).unwrap();
        assert_eq!(p.regions, vec![rc(RegionName::Southeast.bbox(s.lx, s.ly), Objective::Minimize)]);
        assert_eq!(p.tx_region, Some(BoundingBox::full(s.lx, s.ly)));
    }

    #[test]
    fn rejections() {
        let s = sc();
        assert!(matches!(fallback_parse("hello there", &s), Err(IntentError::NoIntent)));
        assert!(matches!(fallback_parse("   ", &s), Err(IntentError::EmptyInput)));
        assert!(matches!(fallback_parse("boost site 99", &s), Err(IntentError::UnknownSite(99))));
    }

    #[test]
    fn merge_rules() {
        let s = sc();
        let (n, e, sw) = (
            RegionName::North.bbox(s.lx, s.ly),
            RegionName::East.bbox(s.lx, s.ly),
            RegionName::Southwest.bbox(s.lx, s.ly),
        );
        let cur = ParsedIntent {
            regions: vec![rc(n, Objective::Maximize)],
            tx_region: Some(RegionName::Center.bbox(s.lx, s.ly)),
            rx_orientation: None,
        };
        let moved = merge(&cur, &fragment("move the transmitter to the east", &s).unwrap()).unwrap();
        assert_eq!(moved.regions, cur.regions);
        assert_eq!(moved.tx_region, Some(e));

        let also = merge(&cur, &fragment("also suppress the southwest", &s).unwrap()).unwrap();
        assert_eq!(also.regions, vec![rc(n, Objective::Maximize), rc(sw, Objective::Minimize)]);

        let replaced = merge(&also, &fragment("boost the east", &s).unwrap()).unwrap();
        assert_eq!(replaced.regions, vec![rc(sw, Objective::Minimize), rc(e, Objective::Maximize)]);

        let swapped = merge(&also, &fragment("no, swap bright and dark", &s).unwrap()).unwrap();
        assert_eq!(swapped.regions, vec![rc(n, Objective::Minimize), rc(sw, Objective::Maximize)]);

        assert!(matches!(merge(&cur, &fragment("hmm", &s).unwrap()), Err(IntentError::NoModification)));
    }
}
