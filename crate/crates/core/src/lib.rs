//! Intent-driven joint base-station placement and single-stream MIMO precoding.
//!
//! The pipeline runs in two stages. Natural-language deployment intents become a
//! structured [`constraints::ConstraintSet`] (bright sites, dark sites, feasible
//! transmitter candidates), then [`optimizer::alternate_optimize`] picks a
//! candidate site and a unit-norm precoder that maximizes bright-zone power while
//! holding every dark site under a power threshold.

// Index loops read closer to the matrix formulas; `!(x > 0.0)` is used on
// purpose so NaN takes the rejecting branch.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod channel;
pub mod constraints;
pub mod intent;
pub mod optimizer;
pub mod scenario;

pub use channel::{ChannelTensor, ComplexMatrix};
pub use constraints::{ConstraintSet, ParsedIntent};
pub use optimizer::{alternate_optimize, OptResult, OptimizerConfig, Precoder};
pub use scenario::{Scenario, SynthParams};

/// Floor applied to linear powers before taking logarithms.
pub const POWER_FLOOR: f64 = 1e-30;

/// Linear power to dB with the shared floor.
pub fn to_db(p: f64) -> f64 {
    10.0 * p.max(POWER_FLOOR).log10()
}
