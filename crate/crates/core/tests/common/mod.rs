//! Golden cases for the offline semantic pipeline, shared by the integration
//! tests and the acceptance runner.
#![allow(dead_code)]

use std::path::PathBuf;

use beamforge_core::constraints::{
    candidates_in_bbox, region_for_keyword, BoundingBox, ConstraintSet, Objective, ParsedIntent, RegionConstraint,
};
use beamforge_core::Scenario;
use serde::Deserialize;

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[derive(Debug, Deserialize)]
pub struct PromptCase {
    pub prompt: String,
    /// `[region, objective]`; a region is one of the ten names or `site <id>`.
    pub regions: Vec<[String; 2]>,
    pub tx: String,
    pub bright: Vec<u32>,
    pub dark: Vec<u32>,
}

pub fn prompt_cases() -> Vec<PromptCase> {
    let text = std::fs::read_to_string(golden_dir().join("fallback_prompts.json")).expect("golden prompts");
    serde_json::from_str(&text).expect("golden prompts parse")
}

fn region_box(name: &str, sc: &Scenario) -> BoundingBox {
    match name.strip_prefix("site ") {
        Some(id) => {
            let s = sc.site(id.parse().expect("site id")).expect("site exists");
            BoundingBox::point(s.x, s.y)
        }
        None => region_for_keyword(name, sc.lx, sc.ly).expect("region name"),
    }
}

impl PromptCase {
    /// The full expected constraint set, built from the case without the parser.
    pub fn expected(&self, sc: &Scenario) -> ConstraintSet {
        let regions = self
            .regions
            .iter()
            .map(|[r, o]| RegionConstraint {
                bbox: region_box(r, sc),
                objective: if o == "maximize" { Objective::Maximize } else { Objective::Minimize },
            })
            .collect();
        let tx = region_box(&self.tx, sc);
        ConstraintSet {
            bright: self.bright.clone(),
            dark: self.dark.clone(),
            feasible: candidates_in_bbox(&tx, sc),
            source: ParsedIntent { regions, tx_region: Some(tx), rx_orientation: None },
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct DialogueCase {
    pub initial: String,
    pub replies: Vec<String>,
    pub rounds: usize,
}

pub fn dialogue_case() -> DialogueCase {
    let text = std::fs::read_to_string(golden_dir().join("dialogue.json")).expect("golden dialogue");
    serde_json::from_str(&text).expect("golden dialogue parse")
}

pub fn dialogue_expected_bytes() -> String {
    std::fs::read_to_string(golden_dir().join("dialogue_constraints.json")).expect("golden dialogue constraints")
}

pub const REFERENCE_SEED: u64 = 42;

/// North maximize, south minimize, transmitter in the centre box.
pub fn reference_intent(sc: &Scenario) -> ParsedIntent {
    use beamforge_core::constraints::RegionName;
    ParsedIntent {
        regions: vec![
            RegionConstraint { bbox: RegionName::North.bbox(sc.lx, sc.ly), objective: Objective::Maximize },
            RegionConstraint { bbox: RegionName::South.bbox(sc.lx, sc.ly), objective: Objective::Minimize },
        ],
        tx_region: Some(RegionName::Center.bbox(sc.lx, sc.ly)),
        rx_orientation: None,
    }
}

pub struct Reference {
    pub scenario: Scenario,
    pub records: Vec<beamforge_core::scenario::MultipathRecord>,
    pub tensor: beamforge_core::ChannelTensor,
    pub cs: ConstraintSet,
}

pub fn reference() -> Reference {
    use beamforge_core::channel::build_channel_tensor;
    use beamforge_core::scenario::generate_synthetic_scenario;
    let (scenario, records) =
        generate_synthetic_scenario(&beamforge_core::SynthParams::reference(), REFERENCE_SEED).expect("reference scenario");
    let tensor = build_channel_tensor(&scenario, &records, None).expect("tensor");
    let cs = beamforge_core::constraints::resolve(&reference_intent(&scenario), &scenario).expect("reference constraints");
    Reference { scenario, records, tensor, cs }
}

// ---- independent numerical oracles ----

use beamforge_core::optimizer::{LossKind, OptimizerConfig, Precoder, SiteChannels};
use beamforge_core::ComplexMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Σ_i |Σ_k h_ik w_k|²` with complex arithmetic.
pub fn oracle_power(h: &ComplexMatrix, w: &[Complex64]) -> f64 {
    (0..h.n_rows).map(|i| (0..h.n_cols).map(|k| h.get(i, k) * w[k]).sum::<Complex64>().norm_sqr()).sum()
}

/// Loss of the normalized precoder, written directly from the definitions.
pub fn oracle_loss(ch: &SiteChannels, w_raw: &[f64], cfg: &OptimizerConfig) -> f64 {
    let n = w_raw.len() / 2;
    let norm = w_raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w: Vec<Complex64> = (0..n).map(|k| Complex64::new(w_raw[k], w_raw[n + k]) / norm).collect();
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let bright = mean(ch.bright.iter().map(|h| oracle_power(h, &w).ln()).collect());
    let mut loss = -bright;
    if !ch.dark.is_empty() {
        let dark: Vec<f64> = ch.dark.iter().map(|h| oracle_power(h, &w)).collect();
        loss += cfg.penalty_coeff
            * match cfg.loss {
                LossKind::Hinge => mean(dark.iter().map(|p| (10.0 * p.log10() - cfg.threshold_db).max(0.0).powi(2)).collect()),
                LossKind::Tradeoff => mean(dark.iter().map(|p| p.ln()).collect()),
            };
    }
    loss
}

/// Central-difference gradient of [`oracle_loss`].
pub fn fd_gradient(ch: &SiteChannels, w_raw: &[f64], cfg: &OptimizerConfig, h: f64) -> Vec<f64> {
    (0..w_raw.len())
        .map(|k| {
            let mut up = w_raw.to_vec();
            let mut dn = w_raw.to_vec();
            up[k] += h;
            dn[k] -= h;
            (oracle_loss(ch, &up, cfg) - oracle_loss(ch, &dn, cfg)) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let s = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-12);
    d / s
}

/// Random `n×n` channel with entries near `level_db` in power.
pub fn random_channel(rng: &mut ChaCha8Rng, n: usize, level_db: f64) -> ComplexMatrix {
    let a = 10f64.powf(level_db / 20.0) / n as f64;
    let v: Vec<Complex64> =
        (0..n * n).map(|_| Complex64::new(rng.random_range(-a..a), rng.random_range(-a..a))).collect();
    ComplexMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// One gradient-check instance: N=4, two bright and two dark channels around
/// the threshold so the hinge is active on some instances and not others.
pub fn gradient_instance(seed: u64) -> (SiteChannels, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bright = (0..2).map(|_| random_channel(&mut rng, 4, 60.0)).collect();
    let dark = (0..2)
        .map(|_| {
            let level = rng.random_range(20.0..45.0);
            random_channel(&mut rng, 4, level)
        })
        .collect();
    let w: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    (SiteChannels { bright, dark }, w)
}

pub fn precoder_from_raw(w: &[f64]) -> Precoder {
    Precoder::from_stacked(w)
}
