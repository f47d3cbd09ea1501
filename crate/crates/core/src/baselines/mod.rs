//! Comparison precoders (random, MRT, ZF, MMSE, SLNR), threshold post-scaling,
//! per-site singular value bounds and the exhaustive site wrapper.

pub mod linalg;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linalg::{hermitian_eig, solve_hpd, svd_small, Eigen, LinalgError, Svd};

use crate::channel::{ChannelTensor, ComplexMatrix};
use crate::constraints::ConstraintSet;
use crate::optimizer::{max_db, mean_db, site_powers, OptError, OptimizerConfig, Precoder, SiteChannels};
use crate::to_db;

const SLNR_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error("unknown baseline method {0:?}")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineMethod {
    Random,
    #[serde(rename = "Exh+MRT")]
    ExhMrt,
    #[serde(rename = "Exh+MMSE")]
    ExhMmse,
    #[serde(rename = "Exh+ZF")]
    ExhZf,
    #[serde(rename = "SLNR")]
    Slnr,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 5] =
        [BaselineMethod::Random, BaselineMethod::ExhMrt, BaselineMethod::ExhMmse, BaselineMethod::ExhZf, BaselineMethod::Slnr];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Random => "Random",
            BaselineMethod::ExhMrt => "Exh+MRT",
            BaselineMethod::ExhMmse => "Exh+MMSE",
            BaselineMethod::ExhZf => "Exh+ZF",
            BaselineMethod::Slnr => "SLNR",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "random" => Ok(BaselineMethod::Random),
            "exhmrt" | "mrt" => Ok(BaselineMethod::ExhMrt),
            "exhmmse" | "mmse" => Ok(BaselineMethod::ExhMmse),
            "exhzf" | "zf" => Ok(BaselineMethod::ExhZf),
            "slnr" => Ok(BaselineMethod::Slnr),
            _ => Err(BaselineError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: BaselineMethod,
    pub site_index: usize,
    /// Post-scaled; norm below one when scaling was applied.
    pub precoder: Precoder,
    /// Attenuation applied by post-scaling, 0 when none was needed.
    pub scale_db: f64,
    pub bright_powers_db: Vec<f64>,
    pub dark_powers_db: Vec<f64>,
    pub bright_mean_db: f64,
    pub max_dark_db: Option<f64>,
    pub contrast_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteRange {
    pub sigma_max_sq: f64,
    pub sigma_min_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdBounds {
    pub per_site: BTreeMap<u32, SiteRange>,
    /// `min_B σ²_max (dB) − max_D σ²_min (dB)`; absent without dark sites.
    pub contrast_ub_db: Option<f64>,
}

fn gram_sum(hs: &[ComplexMatrix], n: usize) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(n, n);
    for h in hs {
        g.add_assign(&h.gram());
    }
    g
}

fn trace(g: &ComplexMatrix) -> f64 {
    (0..g.n_rows).map(|i| g.get(i, i).re).sum()
}

fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Rotate so the first component with non-negligible magnitude is real positive.
fn fix_phase(v: &mut [Complex64]) {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().copied().find(|z| z.norm() > 1e-12 * peak) {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

fn unit(v: Vec<Complex64>) -> Result<Precoder, BaselineError> {
    Ok(Precoder::from_complex(&v).normalized()?)
}

fn default_noise_var(g_b: &ComplexMatrix) -> f64 {
    1e-2 * trace(g_b) / g_b.n_rows as f64
}

/// Unit vector drawn from `CN(0, I)`.
pub fn random_precoder(n: usize, seed: u64) -> Result<Precoder, BaselineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std dev");
    let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect();
    unit(v)
}

/// Dominant eigenvector of `Σ_B HᴴH`.
pub fn mrt_from_channels(ch: &SiteChannels) -> Result<Precoder, BaselineError> {
    let g_b = gram_sum(&ch.bright, ch.n());
    let mut v = hermitian_eig(&g_b)?.vectors.column(0);
    fix_phase(&mut v);
    unit(v)
}

/// MRT direction with the dominant dark directions projected out.
pub fn zf_from_channels(ch: &SiteChannels, rank_cut: Option<usize>) -> Result<Precoder, BaselineError> {
    let n = ch.n();
    let mrt = mrt_from_channels(ch)?;
    if ch.dark.is_empty() {
        return Ok(mrt);
    }
    let rows = ch.dark.len() * n;
    let a = ComplexMatrix::from_fn(rows, n, |i, j| ch.dark[i / n].get(i % n, j));
    let svd = svd_small(&a)?;
    let cut = rank_cut.unwrap_or(n.saturating_sub(1));
    let s1 = svd.values[0];
    let dominant: Vec<usize> = (0..n).filter(|&k| svd.values[k] > 1e-9 * s1).take(cut).collect();
    let mut w = mrt.to_complex();
    for &k in &dominant {
        let vk = svd.v.column(k);
        let c = dot(&vk, &w);
        w.iter_mut().zip(&vk).for_each(|(x, y)| *x -= c * y);
    }
    if vnorm(&w) < 1e-9 {
        w = svd.v.column(n - 1);
    }
    unit(w)
}

/// `(Σ_D HᴴH + σ²I)⁻¹ w_MRT`, normalized.
pub fn mmse_from_channels(ch: &SiteChannels, noise_var: Option<f64>) -> Result<Precoder, BaselineError> {
    let n = ch.n();
    let mrt = mrt_from_channels(ch)?;
    let sigma2 = noise_var.unwrap_or_else(|| default_noise_var(&gram_sum(&ch.bright, n)));
    let mut a = gram_sum(&ch.dark, n);
    a.add_assign(&ComplexMatrix::identity(n).scale(sigma2));
    let mut w = solve_hpd(&a, &mrt.to_complex())?;
    fix_phase(&mut w);
    unit(w)
}

/// Dominant generalized eigenvector of `(G_B, G_D + σ²I)` by power iteration.
pub fn slnr_from_channels(ch: &SiteChannels, noise_var: Option<f64>) -> Result<Precoder, BaselineError> {
    let n = ch.n();
    let g_b = gram_sum(&ch.bright, n);
    let sigma2 = noise_var.unwrap_or_else(|| default_noise_var(&g_b));
    let mut a = gram_sum(&ch.dark, n);
    a.add_assign(&ComplexMatrix::identity(n).scale(sigma2));
    let mut x = mrt_from_channels(ch)?.to_complex();
    let rayleigh = |x: &[Complex64]| dot(x, &g_b.mul_vec(x)).re / dot(x, &a.mul_vec(x)).re;
    let mut rho = rayleigh(&x);
    for _ in 0..SLNR_MAX_ITERS {
        let y = solve_hpd(&a, &g_b.mul_vec(&x))?;
        let ny = vnorm(&y);
        if !(ny > 0.0) {
            break;
        }
        x = y.into_iter().map(|z| z / ny).collect();
        let next = rayleigh(&x);
        let done = (next - rho).abs() < 1e-12 * rho.abs();
        rho = next;
        if done {
            break;
        }
    }
    fix_phase(&mut x);
    unit(x)
}

fn channels(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize) -> Result<SiteChannels, BaselineError> {
    Ok(SiteChannels::at(tensor, cs, m)?)
}

pub fn mrt_precoder(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize) -> Result<Precoder, BaselineError> {
    mrt_from_channels(&channels(tensor, cs, m)?)
}

/// `rank_cut` defaults to `N − 1`.
pub fn zf_precoder(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize, rank_cut: Option<usize>) -> Result<Precoder, BaselineError> {
    zf_from_channels(&channels(tensor, cs, m)?, rank_cut)
}

/// `noise_var` defaults to `1e−2·tr(G_B)/N`.
pub fn mmse_precoder(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize, noise_var: Option<f64>) -> Result<Precoder, BaselineError> {
    mmse_from_channels(&channels(tensor, cs, m)?, noise_var)
}

pub fn slnr_precoder(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize, noise_var: Option<f64>) -> Result<Precoder, BaselineError> {
    slnr_from_channels(&channels(tensor, cs, m)?, noise_var)
}

/// Attenuate `w` until the loudest dark site sits exactly at `threshold_db`.
/// Returns the input unchanged with `scale_db = 0` when it already complies.
pub fn scale_channels_to_threshold(w: &Precoder, ch: &SiteChannels, threshold_db: f64) -> (Precoder, f64) {
    let (_, dark) = site_powers(ch, w);
    let worst = dark.iter().map(|&p| to_db(p)).reduce(f64::max);
    match worst {
        Some(d) if d > threshold_db => {
            let delta = d - threshold_db;
            (w.scaled(10f64.powf(-delta / 20.0)), delta)
        }
        _ => (w.clone(), 0.0),
    }
}

pub fn scale_to_threshold(
    w: &Precoder,
    tensor: &ChannelTensor,
    cs: &ConstraintSet,
    m: usize,
    threshold_db: f64,
) -> Result<(Precoder, f64), BaselineError> {
    Ok(scale_channels_to_threshold(w, &channels(tensor, cs, m)?, threshold_db))
}

pub fn bounds_from_channels(ids_b: &[u32], ids_d: &[u32], ch: &SiteChannels) -> Result<SvdBounds, BaselineError> {
    let mut per_site = BTreeMap::new();
    let range = |h: &ComplexMatrix| -> Result<SiteRange, BaselineError> {
        let s = svd_small(h)?;
        Ok(SiteRange { sigma_max_sq: s.values[0].powi(2), sigma_min_sq: s.values[s.values.len() - 1].powi(2) })
    };
    let mut b_max = Vec::new();
    for (&id, h) in ids_b.iter().zip(&ch.bright) {
        let r = range(h)?;
        b_max.push(to_db(r.sigma_max_sq));
        per_site.insert(id, r);
    }
    let mut d_min = Vec::new();
    for (&id, h) in ids_d.iter().zip(&ch.dark) {
        let r = range(h)?;
        d_min.push(to_db(r.sigma_min_sq));
        per_site.insert(id, r);
    }
    let contrast_ub_db = match (b_max.iter().copied().reduce(f64::min), d_min.iter().copied().reduce(f64::max)) {
        (Some(b), Some(d)) => Some(b - d),
        _ => None,
    };
    Ok(SvdBounds { per_site, contrast_ub_db })
}

/// Per-site `σ²` extremes of the stored channels at candidate `m`.
pub fn svd_bounds(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize) -> Result<SvdBounds, BaselineError> {
    bounds_from_channels(&cs.bright, &cs.dark, &channels(tensor, cs, m)?)
}

/// Post-scale `w` at one candidate and report its powers.
pub fn evaluate(method: BaselineMethod, m: usize, w: &Precoder, ch: &SiteChannels, threshold_db: f64) -> BaselineResult {
    let (w, scale_db) = scale_channels_to_threshold(w, ch, threshold_db);
    let (bp, dp) = site_powers(ch, &w);
    let bright_powers_db: Vec<f64> = bp.iter().map(|&p| to_db(p)).collect();
    let dark_powers_db: Vec<f64> = dp.iter().map(|&p| to_db(p)).collect();
    let bright_mean_db = mean_db(&bright_powers_db);
    let max_dark_db = max_db(&dark_powers_db);
    BaselineResult {
        method,
        site_index: m,
        precoder: w,
        scale_db,
        bright_powers_db,
        dark_powers_db,
        bright_mean_db,
        max_dark_db,
        contrast_db: max_dark_db.map(|d| bright_mean_db - d),
    }
}

fn precoder_at(method: BaselineMethod, ch: &SiteChannels, cfg: &OptimizerConfig) -> Result<Precoder, BaselineError> {
    match method {
        BaselineMethod::Random => random_precoder(ch.n(), cfg.seed),
        BaselineMethod::ExhMrt => mrt_from_channels(ch),
        BaselineMethod::ExhMmse => mmse_from_channels(ch, None),
        BaselineMethod::ExhZf => zf_from_channels(ch, None),
        BaselineMethod::Slnr => slnr_from_channels(ch, None),
    }
}

fn exhaustive(method: BaselineMethod, tensor: &ChannelTensor, cs: &ConstraintSet, cfg: &OptimizerConfig) -> Result<BaselineResult, BaselineError> {
    let mut best: Option<BaselineResult> = None;
    for &m in &cs.feasible {
        let ch = channels(tensor, cs, m)?;
        let r = evaluate(method, m, &precoder_at(method, &ch, cfg)?, &ch, cfg.threshold_db);
        // strict comparison keeps the lowest index on ties
        if best.as_ref().map_or(true, |b| r.bright_mean_db > b.bright_mean_db) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| OptError::Coverage("an empty feasible set".into()).into())
}

/// Run one baseline under the threshold in `cfg`. The Exh variants search every
/// feasible candidate; Random and SLNR use the Exh+MRT candidate.
pub fn exhaustive_wrap(method: BaselineMethod, tensor: &ChannelTensor, cs: &ConstraintSet, cfg: &OptimizerConfig) -> Result<BaselineResult, BaselineError> {
    match method {
        BaselineMethod::ExhMrt | BaselineMethod::ExhMmse | BaselineMethod::ExhZf => exhaustive(method, tensor, cs, cfg),
        BaselineMethod::Random | BaselineMethod::Slnr => {
            let m = exhaustive(BaselineMethod::ExhMrt, tensor, cs, cfg)?.site_index;
            let ch = channels(tensor, cs, m)?;
            Ok(evaluate(method, m, &precoder_at(method, &ch, cfg)?, &ch, cfg.threshold_db))
        }
    }
}
