//! Penalty loss, analytic gradients through the unit-norm projection, Adam with
//! cosine annealing, the batched site scan and the alternating procedure that
//! ties them together.

mod adam;
mod alternate;
mod loss;
mod scan;

pub(crate) use alternate::{max_db, mean_db};
pub use adam::{clip_gradient, cosine_lr, Adam};
pub use alternate::{alternate_optimize, OptResult, PhaseTimings, TraceRow};
pub use loss::{
    loss_gradient, objective, penalty_loss, received_power, site_powers, tradeoff_loss, SiteChannels,
};
pub use scan::{phase_a_scan, ScanOutcome, ScanStack};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("invalid optimizer config: {0}")]
    Config(String),
    #[error("precoder norm below 1e-12")]
    ZeroPrecoder,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("channel tensor does not cover {0}")]
    Coverage(String),
}

/// Single-stream precoder as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoder {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Precoder {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Self {
        assert_eq!(re.len(), im.len());
        Precoder { re, im }
    }

    pub fn uniform(n: usize) -> Self {
        let a = 1.0 / (n as f64).sqrt();
        Precoder { re: vec![a; n], im: vec![0.0; n] }
    }

    pub fn from_complex(w: &[Complex64]) -> Self {
        Precoder { re: w.iter().map(|c| c.re).collect(), im: w.iter().map(|c| c.im).collect() }
    }

    /// Stacked `[re..., im...]` layout used by the gradient code.
    pub fn from_stacked(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Precoder { re: v[..n].to_vec(), im: v[n..].to_vec() }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.re.iter().chain(&self.im).copied().collect()
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Precoder, OptError> {
        let n = self.norm();
        if !(n >= 1e-12) {
            return Err(OptError::ZeroPrecoder);
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn scaled(&self, s: f64) -> Precoder {
        Precoder { re: self.re.iter().map(|x| x * s).collect(), im: self.im.iter().map(|x| x * s).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `−mean ln P_B + λ·mean [max(0, P_D,dB − T)]²`
    Hinge,
    /// `−mean ln P_B + λ·mean ln P_D`, no threshold.
    Tradeoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub rounds: usize,
    pub total_steps: usize,
    pub learning_rate: f64,
    pub penalty_coeff: f64,
    pub threshold_db: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Cosine annealing on; off means a constant learning rate.
    pub cosine: bool,
    /// Gradient clipping on; off means `g_max = ∞`.
    pub clip: bool,
    pub loss: LossKind,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            rounds: 5,
            total_steps: 400,
            learning_rate: 0.05,
            penalty_coeff: 0.1,
            threshold_db: 30.0,
            clip_norm: 5.0,
            seed: 42,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            cosine: true,
            clip: true,
            loss: LossKind::Hinge,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptError> {
        let bad = |m: &str| Err(OptError::Config(m.to_string()));
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.total_steps == 0 || self.total_steps % self.rounds != 0 {
            return bad("total_steps must be a positive multiple of rounds");
        }
        let positive = [self.learning_rate, self.penalty_coeff, self.clip_norm, self.adam_eps];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return bad("learning_rate, penalty_coeff, clip_norm and adam_eps must be positive");
        }
        if !self.threshold_db.is_finite() {
            return bad("threshold_db must be finite");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn steps_per_round(&self) -> usize {
        self.total_steps / self.rounds
    }
}
