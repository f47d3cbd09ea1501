//! Experiment drivers and their CSV reports: method comparison, parameter
//! sweeps, ablations, per-site bounds, stage timings and power heatmaps.

mod heatmap;

pub use heatmap::{heatmap, probe_power, Heatmap};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{exhaustive_wrap, scale_channels_to_threshold, svd_bounds, BaselineError, BaselineMethod};
use crate::channel::ChannelTensor;
use crate::constraints::ConstraintSet;
use crate::optimizer::{
    alternate_optimize, max_db, mean_db, site_powers, LossKind, OptError, OptResult, OptimizerConfig, Precoder, ScanStack,
    SiteChannels,
};
use crate::to_db;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("heatmap: {0}")]
    Heatmap(String),
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv<const K: usize>(header: [&str; K], rows: impl IntoIterator<Item = [String; K]>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub site_index: usize,
    pub bright_mean_db: f64,
    pub max_dark_db: Option<f64>,
    /// Absent when no post-scaling was needed.
    pub scale_db: Option<f64>,
    pub contrast_db: Option<f64>,
}

impl ComparisonRow {
    fn new(method: &str, site_index: usize, bright_mean_db: f64, max_dark_db: Option<f64>, scale_db: f64) -> Self {
        ComparisonRow {
            method: method.to_string(),
            site_index,
            bright_mean_db,
            max_dark_db,
            scale_db: (scale_db > 0.0).then_some(scale_db),
            contrast_db: max_dark_db.map(|d| bright_mean_db - d),
        }
    }
}

pub const BEAMFORGE_ROW: &str = "BeamForge";

/// Post-scale an optimizer result under its own threshold, the same rule the
/// baselines follow.
pub fn post_scaled(r: &OptResult, tensor: &ChannelTensor, cs: &ConstraintSet, threshold_db: f64) -> Result<(Precoder, f64), OptError> {
    let ch = SiteChannels::at(tensor, cs, r.site_index)?;
    Ok(scale_channels_to_threshold(&r.precoder, &ch, threshold_db))
}

/// Every baseline plus the alternating optimizer under one constraint set and
/// threshold, each post-scaled so the loudest dark site is at most `T`.
pub fn run_comparison(tensor: &ChannelTensor, cs: &ConstraintSet, cfg: &OptimizerConfig) -> Result<Vec<ComparisonRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(BaselineMethod::ALL.len() + 1);
    for method in BaselineMethod::ALL {
        let r = exhaustive_wrap(method, tensor, cs, cfg)?;
        rows.push(ComparisonRow::new(method.name(), r.site_index, r.bright_mean_db, r.max_dark_db, r.scale_db));
    }
    let r = alternate_optimize(tensor, cs, cfg)?;
    let (w, scale_db) = post_scaled(&r, tensor, cs, cfg.threshold_db)?;
    let (bp, dp) = site_powers(&SiteChannels::at(tensor, cs, r.site_index)?, &w);
    let bright: Vec<f64> = bp.iter().map(|&p| to_db(p)).collect();
    let dark: Vec<f64> = dp.iter().map(|&p| to_db(p)).collect();
    rows.push(ComparisonRow::new(BEAMFORGE_ROW, r.site_index, mean_db(&bright), max_db(&dark), scale_db));
    Ok(rows)
}

/// `method,site_index,bright_mean_db,max_dark_db,scale_db,contrast_db`
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    write_csv(
        ["method", "site_index", "bright_mean_db", "max_dark_db", "scale_db", "contrast_db"],
        rows.iter().map(|r| {
            [
                r.method.clone(),
                r.site_index.to_string(),
                r.bright_mean_db.to_string(),
                opt_cell(r.max_dark_db),
                opt_cell(r.scale_db),
                opt_cell(r.contrast_db),
            ]
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Threshold,
    Lambda,
    Rounds,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Threshold => "threshold",
            SweepParam::Lambda => "lambda",
            SweepParam::Rounds => "rounds",
        }
    }

    /// Default sweep grid.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Threshold => vec![20.0, 25.0, 30.0, 35.0, 40.0],
            SweepParam::Lambda => vec![0.01, 0.03, 0.1, 0.3, 1.0],
            SweepParam::Rounds => vec![1.0, 2.0, 4.0, 5.0, 10.0],
        }
    }

    /// `cfg` with this parameter set to `value`.
    pub fn apply(self, cfg: &OptimizerConfig, value: f64) -> Result<OptimizerConfig, AnalysisError> {
        let mut c = cfg.clone();
        match self {
            SweepParam::Threshold => c.threshold_db = value,
            SweepParam::Lambda => c.penalty_coeff = value,
            SweepParam::Rounds => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(AnalysisError::Sweep(format!("rounds must be a positive integer, got {value}")));
                }
                c.rounds = value as usize;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "threshold" | "t" => Ok(SweepParam::Threshold),
            "lambda" | "penalty" => Ok(SweepParam::Lambda),
            "rounds" | "r" => Ok(SweepParam::Rounds),
            other => Err(AnalysisError::Sweep(format!("unknown parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub site_index: usize,
    pub bright_mean_db: f64,
    pub max_dark_db: Option<f64>,
}

/// One full optimization per value, same seed throughout, in input order.
pub fn sweep(
    tensor: &ChannelTensor,
    cs: &ConstraintSet,
    cfg: &OptimizerConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepPoint>, AnalysisError> {
    values
        .iter()
        .map(|&value| {
            let r = alternate_optimize(tensor, cs, &param.apply(cfg, value)?)?;
            Ok(SweepPoint { value, site_index: r.site_index, bright_mean_db: r.bright_mean_db, max_dark_db: r.max_dark_db })
        })
        .collect()
}

pub fn threshold_sweep(tensor: &ChannelTensor, cs: &ConstraintSet, cfg: &OptimizerConfig, thresholds: &[f64]) -> Result<Vec<SweepPoint>, AnalysisError> {
    sweep(tensor, cs, cfg, SweepParam::Threshold, thresholds)
}

/// `<param>,site_index,bright_mean_db,max_dark_db`
pub fn sweep_csv(param: SweepParam, points: &[SweepPoint]) -> String {
    write_csv(
        [param.name(), "site_index", "bright_mean_db", "max_dark_db"],
        points.iter().map(|p| [p.value.to_string(), p.site_index.to_string(), p.bright_mean_db.to_string(), opt_cell(p.max_dark_db)]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub site_index: usize,
    pub bright_mean_db: f64,
    pub max_dark_db: Option<f64>,
    /// Bright mean relative to the full configuration.
    pub delta_db: f64,
}

/// Variant names and configurations, full configuration first.
pub fn ablation_variants(cfg: &OptimizerConfig) -> Vec<(&'static str, OptimizerConfig)> {
    vec![
        ("Full", cfg.clone()),
        ("NoCosine", OptimizerConfig { cosine: false, ..cfg.clone() }),
        ("NoClip", OptimizerConfig { clip: false, ..cfg.clone() }),
        ("NoCosine+NoClip", OptimizerConfig { cosine: false, clip: false, ..cfg.clone() }),
        ("R=1", OptimizerConfig { rounds: 1, ..cfg.clone() }),
        ("Tradeoff", OptimizerConfig { loss: LossKind::Tradeoff, ..cfg.clone() }),
    ]
}

pub fn ablation_suite(tensor: &ChannelTensor, cs: &ConstraintSet, cfg: &OptimizerConfig) -> Result<Vec<AblationRow>, AnalysisError> {
    let mut rows: Vec<AblationRow> = Vec::new();
    for (name, c) in ablation_variants(cfg) {
        let r = alternate_optimize(tensor, cs, &c)?;
        let full = rows.first().map_or(r.bright_mean_db, |f| f.bright_mean_db);
        rows.push(AblationRow {
            variant: name.to_string(),
            site_index: r.site_index,
            bright_mean_db: r.bright_mean_db,
            max_dark_db: r.max_dark_db,
            delta_db: r.bright_mean_db - full,
        });
    }
    Ok(rows)
}

/// `variant,site_index,bright_mean_db,max_dark_db,delta_db`
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    write_csv(
        ["variant", "site_index", "bright_mean_db", "max_dark_db", "delta_db"],
        rows.iter().map(|r| {
            [r.variant.clone(), r.site_index.to_string(), r.bright_mean_db.to_string(), opt_cell(r.max_dark_db), r.delta_db.to_string()]
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteRole {
    Bright,
    Dark,
}

/// Achieved power of one site next to its singular value range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBar {
    pub site_id: u32,
    pub role: SiteRole,
    pub sigma_min_db: f64,
    pub sigma_max_db: f64,
    pub achieved_db: f64,
}

pub fn bound_bars(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize, w: &Precoder) -> Result<Vec<BoundBar>, AnalysisError> {
    let bounds = svd_bounds(tensor, cs, m)?;
    let (bp, dp) = site_powers(&SiteChannels::at(tensor, cs, m)?, w);
    let bright = cs.bright.iter().zip(bp).map(|(&id, p)| (id, SiteRole::Bright, p));
    let dark = cs.dark.iter().zip(dp).map(|(&id, p)| (id, SiteRole::Dark, p));
    Ok(bright
        .chain(dark)
        .map(|(id, role, p)| {
            let r = bounds.per_site[&id];
            BoundBar { site_id: id, role, sigma_min_db: to_db(r.sigma_min_sq), sigma_max_db: to_db(r.sigma_max_sq), achieved_db: to_db(p) }
        })
        .collect())
}

/// `site_id,role,sigma_min_db,sigma_max_db,achieved_db`
pub fn bound_bars_csv(bars: &[BoundBar]) -> String {
    write_csv(
        ["site_id", "role", "sigma_min_db", "sigma_max_db", "achieved_db"],
        bars.iter().map(|b| {
            let role = match b.role {
                SiteRole::Bright => "bright",
                SiteRole::Dark => "dark",
            };
            [b.site_id.to_string(), role.to_string(), b.sigma_min_db.to_string(), b.sigma_max_db.to_string(), b.achieved_db.to_string()]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock per stage in a fixed order: tensor stacking, each Phase A scan,
/// total Phase B, the full run and exhaustive MRT.
pub fn timing_report(tensor: &ChannelTensor, cs: &ConstraintSet, cfg: &OptimizerConfig) -> Result<Vec<TimingRow>, AnalysisError> {
    let row = |stage: String, seconds: f64| TimingRow { stage, seconds };
    let t0 = Instant::now();
    ScanStack::new(tensor, cs)?;
    let mut rows = vec![row("tensor_stacking".into(), t0.elapsed().as_secs_f64())];

    let r = alternate_optimize(tensor, cs, cfg)?;
    let t = &r.phase_timings;
    for (k, s) in t.phase_a_s.iter().enumerate() {
        let name = if k < cfg.rounds { format!("phase_a_round_{}", k + 1) } else { "phase_a_final".to_string() };
        rows.push(row(name, *s));
    }
    rows.push(row("phase_b_total".into(), t.phase_b_s.iter().sum()));
    rows.push(row("full_run".into(), t.total_s));

    let t1 = Instant::now();
    exhaustive_wrap(BaselineMethod::ExhMrt, tensor, cs, cfg)?;
    rows.push(row("exh_mrt".into(), t1.elapsed().as_secs_f64()));
    Ok(rows)
}

/// `stage,seconds`
pub fn timing_csv(rows: &[TimingRow]) -> String {
    write_csv(["stage", "seconds"], rows.iter().map(|r| [r.stage.clone(), r.seconds.to_string()]))
}
