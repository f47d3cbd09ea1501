//! MIMO channel synthesis from multipath records, batched channel tensors and
//! the binary tensor cache.

mod cache;
mod matrix;

pub use cache::{cache_load, cache_store, read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use matrix::{apply_reciprocity, path_gain, steering_vector, synthesize_channel, ComplexMatrix};

use std::collections::HashMap;

use thiserror::Error;

use crate::scenario::{MultipathRecord, Scenario};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("unknown site id {0}")]
    UnknownSite(u32),
    #[error("bad cache magic")]
    Magic,
    #[error("unsupported cache version {0}")]
    Version(u32),
    #[error("cache checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("cache truncated or malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reciprocal channels `Hᵀ` for every (candidate, site) pair, stored
/// contiguously as `[candidate][site][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    pub n: usize,
    pub site_ids: Vec<u32>,
    pub candidate_indices: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ChannelTensor {
    fn offset(&self, c_pos: usize, s_pos: usize) -> usize {
        (c_pos * self.site_ids.len() + s_pos) * self.n * self.n
    }

    /// Real and imaginary parts of one stored matrix, by position.
    pub fn slices(&self, c_pos: usize, s_pos: usize) -> (&[f64], &[f64]) {
        let o = self.offset(c_pos, s_pos);
        let len = self.n * self.n;
        (&self.re[o..o + len], &self.im[o..o + len])
    }

    pub fn matrix(&self, c_pos: usize, s_pos: usize) -> ComplexMatrix {
        let (re, im) = self.slices(c_pos, s_pos);
        ComplexMatrix { n_rows: self.n, n_cols: self.n, re: re.to_vec(), im: im.to_vec() }
    }

    pub fn site_pos(&self, id: u32) -> Option<usize> {
        self.site_ids.iter().position(|&s| s == id)
    }

    pub fn candidate_pos(&self, m: usize) -> Option<usize> {
        // indices are stored ascending
        self.candidate_indices.binary_search(&m).ok()
    }

    /// Stored matrix for candidate `m` and site `id`, if covered.
    pub fn channel(&self, m: usize, id: u32) -> Option<ComplexMatrix> {
        Some(self.matrix(self.candidate_pos(m)?, self.site_pos(id)?))
    }
}

/// Stack `apply_reciprocity(synthesize_channel(..))` for every grid candidate and
/// every requested site. `None` selects all scenario sites. Pairs without a
/// record synthesize to the zero matrix.
pub fn build_channel_tensor(
    scenario: &Scenario,
    records: &[MultipathRecord],
    site_filter: Option<&[u32]>,
) -> Result<ChannelTensor, ChannelError> {
    let site_ids: Vec<u32> = match site_filter {
        Some(ids) => {
            if let Some(&bad) = ids.iter().find(|&&id| scenario.site(id).is_none()) {
                return Err(ChannelError::UnknownSite(bad));
            }
            ids.to_vec()
        }
        None => scenario.site_ids(),
    };
    let n = scenario.array.n_elements;
    let candidates: Vec<usize> = (0..scenario.grid.len()).collect();
    let by_pair: HashMap<(usize, u32), &MultipathRecord> =
        records.iter().map(|r| ((r.candidate_index, r.site_id), r)).collect();

    let total = candidates.len() * site_ids.len() * n * n;
    let mut re = Vec::with_capacity(total);
    let mut im = Vec::with_capacity(total);
    for &m in &candidates {
        for &s in &site_ids {
            let paths = by_pair.get(&(m, s)).map(|r| r.paths.as_slice()).unwrap_or(&[]);
            let h = apply_reciprocity(&synthesize_channel(paths, &scenario.array))?;
            re.extend_from_slice(&h.re);
            im.extend_from_slice(&h.im);
        }
    }
    Ok(ChannelTensor { n, site_ids, candidate_indices: candidates, re, im })
}
