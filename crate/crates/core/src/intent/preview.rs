use crate::constraints::{BoundingBox, ConstraintSet, Objective};
use crate::scenario::Scenario;

pub const PREVIEW_COLS: usize = 48;
pub const PREVIEW_ROWS: usize = 24;

pub const LEGEND: &str = "legend: S site  T tx-feasible  + maximize  - minimize  . empty";

/// Map coordinate of the centre of output cell `(col, row)`; row 0 is the north edge.
pub fn cell_center(scenario: &Scenario, cols: usize, rows: usize, col: usize, row: usize) -> (f64, f64) {
    let x = (col as f64 + 0.5) * scenario.lx / cols as f64;
    let y = scenario.ly - (row as f64 + 0.5) * scenario.ly / rows as f64;
    (x, y)
}

/// Output cell `(col, row)` holding the point, clamped to the grid.
pub fn cell_of(scenario: &Scenario, cols: usize, rows: usize, x: f64, y: f64) -> (usize, usize) {
    let cx = ((x / scenario.lx * cols as f64).floor().max(0.0) as usize).min(cols - 1);
    let cy = ((y / scenario.ly * rows as f64).floor().max(0.0) as usize).min(rows - 1);
    (cx, rows - 1 - cy)
}

/// The tx region worth drawing: `None` when absent or covering the whole map,
/// which would otherwise hide every region mark.
fn drawn_tx(cs: &ConstraintSet, scenario: &Scenario) -> Option<BoundingBox> {
    cs.source.tx_region.filter(|b| !b.covers(&BoundingBox::full(scenario.lx, scenario.ly)))
}

/// Character grid of the constraints, north at the top, followed by a legend
/// line and the constraint summary. Dimensions below 4 are raised to 4.
pub fn ascii_preview(cs: &ConstraintSet, scenario: &Scenario, cols: usize, rows: usize) -> String {
    let (cols, rows) = (cols.max(4), rows.max(4));
    let tx = drawn_tx(cs, scenario);
    let mut grid = vec![vec!['.'; cols]; rows];
    for (row, line) in grid.iter_mut().enumerate() {
        for (col, cell) in line.iter_mut().enumerate() {
            let (x, y) = cell_center(scenario, cols, rows, col, row);
            let in_obj = |o: Objective| cs.source.regions.iter().any(|r| r.objective == o && r.bbox.contains(x, y));
            *cell = if tx.is_some_and(|b| b.contains(x, y)) {
                'T'
            } else if in_obj(Objective::Maximize) {
                '+'
            } else if in_obj(Objective::Minimize) {
                '-'
            } else {
                '.'
            };
        }
    }
    for s in &scenario.sites {
        let (c, r) = cell_of(scenario, cols, rows, s.x, s.y);
        grid[r][c] = 'S';
    }
    let mut out = String::with_capacity((cols + 1) * rows + 160);
    for line in grid {
        out.extend(line);
        out.push('\n');
    }
    out.push_str(LEGEND);
    out.push('\n');
    out.push_str(&cs.summary());
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{resolve, ParsedIntent, RegionConstraint, RegionName};
    use crate::scenario::{Site, SynthParams};

    fn lines(p: &str, rows: usize) -> Vec<Vec<char>> {
        p.lines().take(rows).map(|l| l.chars().collect()).collect()
    }

    fn empty_cs() -> ConstraintSet {
        ConstraintSet {
            bright: vec![],
            dark: vec![],
            feasible: vec![],
            source: ParsedIntent { regions: vec![], tx_region: None, rx_orientation: None },
        }
    }

    #[test]
    fn empty_is_all_dots() {
        let mut sc = SynthParams::default().scenario();
        sc.sites.clear();
        let p = ascii_preview(&empty_cs(), &sc, 10, 6);
        let g = lines(&p, 6);
        assert_eq!(g.len(), 6);
        assert!(g.iter().all(|l| l.len() == 10 && l.iter().all(|&c| c == '.')));
        assert!(p.contains(LEGEND));
    }

    #[test]
    fn centre_site() {
        let mut sc = SynthParams::default().scenario();
        sc.sites = vec![Site { id: 1, x: sc.lx / 2.0, y: sc.ly / 2.0 }];
        let g = lines(&ascii_preview(&empty_cs(), &sc, 5, 5), 5);
        assert_eq!(g[2][2], 'S');
        assert_eq!(g.iter().flatten().filter(|&&c| c == 'S').count(), 1);
    }

    #[test]
    fn north_on_top() {
        let sc = SynthParams::reference().scenario();
        let intent = ParsedIntent {
            regions: vec![
                RegionConstraint { bbox: RegionName::North.bbox(sc.lx, sc.ly), objective: Objective::Maximize },
                RegionConstraint { bbox: RegionName::South.bbox(sc.lx, sc.ly), objective: Objective::Minimize },
            ],
            tx_region: Some(RegionName::Center.bbox(sc.lx, sc.ly)),
            rx_orientation: None,
        };
        let cs = resolve(&intent, &sc).unwrap();
        let g = lines(&ascii_preview(&cs, &sc, PREVIEW_COLS, PREVIEW_ROWS), PREVIEW_ROWS);
        for col in 0..PREVIEW_COLS {
            let plus = (0..PREVIEW_ROWS).filter(|&r| g[r][col] == '+').max();
            let minus = (0..PREVIEW_ROWS).filter(|&r| g[r][col] == '-').min();
            if let (Some(p), Some(m)) = (plus, minus) {
                assert!(p < m);
            }
        }
        assert!(g[0].contains(&'+') && g[PREVIEW_ROWS - 1].contains(&'-'));
        assert!(g.iter().flatten().any(|&c| c == 'T'));
    }

    #[test]
    fn full_map_tx_not_drawn() {
        let sc = SynthParams::reference().scenario();
        let intent = ParsedIntent {
            regions: vec![RegionConstraint { bbox: RegionName::North.bbox(sc.lx, sc.ly), objective: Objective::Maximize }],
            tx_region: Some(BoundingBox::full(sc.lx, sc.ly)),
            rx_orientation: None,
        };
        let cs = resolve(&intent, &sc).unwrap();
        let g = lines(&ascii_preview(&cs, &sc, 20, 10), 10);
        assert!(g.iter().flatten().all(|&c| c != 'T'));
    }
}
