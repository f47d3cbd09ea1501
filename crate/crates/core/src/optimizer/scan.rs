use serde::{Deserialize, Serialize};

use super::loss::{objective, power_slices};
use super::{OptError, OptimizerConfig, Precoder, SiteChannels};
use crate::channel::{ChannelTensor, ComplexMatrix};
use crate::constraints::ConstraintSet;

/// Bright and dark channels of every feasible candidate packed into one
/// contiguous buffer (`[candidate][bright.., dark..][row][col]`) so a scan is a
/// single pass over memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanStack {
    pub n: usize,
    pub candidates: Vec<usize>,
    pub n_bright: usize,
    pub n_dark: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    /// Winning candidate index `m*`.
    pub best: usize,
    /// Per-candidate losses in `cs.feasible` order.
    pub losses: Vec<f64>,
}

impl ScanStack {
    pub fn new(tensor: &ChannelTensor, cs: &ConstraintSet) -> Result<Self, OptError> {
        if cs.feasible.is_empty() {
            return Err(OptError::Coverage("an empty feasible set".into()));
        }
        let site_pos = cs
            .active_sites()
            .iter()
            .map(|&id| tensor.site_pos(id).ok_or_else(|| OptError::Coverage(format!("site {id}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let nn = tensor.n * tensor.n;
        let cap = cs.feasible.len() * site_pos.len() * nn;
        let (mut re, mut im) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        for &m in &cs.feasible {
            let c = tensor.candidate_pos(m).ok_or_else(|| OptError::Coverage(format!("candidate {m}")))?;
            for &s in &site_pos {
                let (r, i) = tensor.slices(c, s);
                re.extend_from_slice(r);
                im.extend_from_slice(i);
            }
        }
        Ok(ScanStack { n: tensor.n, candidates: cs.feasible.clone(), n_bright: cs.bright.len(), n_dark: cs.dark.len(), re, im })
    }

    fn sites(&self) -> usize {
        self.n_bright + self.n_dark
    }

    /// Powers for every (candidate, site) in one pass, bright sites first.
    pub fn powers(&self, w: &Precoder) -> Vec<f64> {
        let nn = self.n * self.n;
        self.re
            .chunks_exact(nn)
            .zip(self.im.chunks_exact(nn))
            .map(|(r, i)| power_slices(self.n, r, i, &w.re, &w.im))
            .collect()
    }

    pub fn scan(&self, w: &Precoder, cfg: &OptimizerConfig) -> ScanOutcome {
        let powers = self.powers(w);
        let per = self.sites();
        let losses: Vec<f64> = powers
            .chunks_exact(per)
            .map(|p| objective(&p[..self.n_bright], &p[self.n_bright..], cfg))
            .collect();
        // strict comparison keeps the lowest index on ties; NaN never wins
        let mut best = 0;
        for (k, &l) in losses.iter().enumerate() {
            if l < losses[best] || losses[best].is_nan() {
                best = k;
            }
        }
        ScanOutcome { best: self.candidates[best], losses }
    }

    /// Channels of candidate `m` as stored in the stack.
    pub fn channels(&self, m: usize) -> Option<SiteChannels> {
        let k = self.candidates.binary_search(&m).ok()?;
        let nn = self.n * self.n;
        let mat = |s: usize| {
            let o = (k * self.sites() + s) * nn;
            ComplexMatrix { n_rows: self.n, n_cols: self.n, re: self.re[o..o + nn].to_vec(), im: self.im[o..o + nn].to_vec() }
        };
        Some(SiteChannels {
            bright: (0..self.n_bright).map(mat).collect(),
            dark: (self.n_bright..self.sites()).map(mat).collect(),
        })
    }
}

/// Evaluate the loss at every feasible candidate for a fixed unit-norm `w`
/// and return the argmin (lowest index on ties).
pub fn phase_a_scan(
    tensor: &ChannelTensor,
    cs: &ConstraintSet,
    w: &Precoder,
    cfg: &OptimizerConfig,
) -> Result<ScanOutcome, OptError> {
    if w.len() != tensor.n {
        return Err(OptError::Dimension(format!("precoder of {} for {}-element array", w.len(), tensor.n)));
    }
    Ok(ScanStack::new(tensor, cs)?.scan(w, cfg))
}
