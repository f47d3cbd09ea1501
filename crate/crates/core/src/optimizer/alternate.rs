use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{clip_gradient, cosine_lr, loss_gradient, site_powers, Adam, OptError, OptimizerConfig, Precoder, ScanStack};
use crate::channel::ChannelTensor;
use crate::constraints::ConstraintSet;
use crate::to_db;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub round: usize,
    pub lr: f64,
    pub loss: f64,
    pub max_dark_db: Option<f64>,
    pub mean_bright_db: f64,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    /// One entry per round plus the final scan.
    pub phase_a_s: Vec<f64>,
    /// One entry per round.
    pub phase_b_s: Vec<f64>,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub site_index: usize,
    pub precoder: Precoder,
    pub bright_sites: Vec<u32>,
    pub bright_powers_db: Vec<f64>,
    pub dark_sites: Vec<u32>,
    pub dark_powers_db: Vec<f64>,
    /// Arithmetic mean of the per-site bright powers in dB.
    pub bright_mean_db: f64,
    pub max_dark_db: Option<f64>,
    pub loss_trace: Vec<TraceRow>,
    pub phase_timings: PhaseTimings,
    /// Candidate chosen by each round's scan, then by the final scan.
    pub rounds_log: Vec<usize>,
}

pub(crate) fn mean_db(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn max_db(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

impl OptResult {
    /// Copy with every timing field zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> OptResult {
        OptResult { phase_timings: PhaseTimings::default(), ..self.clone() }
    }

    pub fn contrast_db(&self) -> Option<f64> {
        self.max_dark_db.map(|d| self.bright_mean_db - d)
    }

    /// `step,round,lr,loss,max_dark_db,mean_bright_db`
    pub fn trace_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "round", "lr", "loss", "max_dark_db", "mean_bright_db"]).unwrap();
        for r in &self.loss_trace {
            let dark = r.max_dark_db.map(|d| d.to_string()).unwrap_or_default();
            w.write_record([
                r.step.to_string(),
                r.round.to_string(),
                r.lr.to_string(),
                r.loss.to_string(),
                dark,
                r.mean_bright_db.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Alternate a discrete site scan with Adam steps on the precoder.
///
/// One Adam state and one cosine schedule span all rounds. Each round scans the
/// feasible candidates with the current precoder, then takes
/// `total_steps / rounds` gradient steps at the chosen candidate. A final scan
/// with the converged precoder fixes the reported site.
pub fn alternate_optimize(tensor: &ChannelTensor, cs: &ConstraintSet, cfg: &OptimizerConfig) -> Result<OptResult, OptError> {
    cfg.validate()?;
    if cs.bright.is_empty() {
        return Err(OptError::Coverage("an empty bright set".into()));
    }
    let start = Instant::now();
    let stack = ScanStack::new(tensor, cs)?;
    let n = tensor.n;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, (1.0 / n as f64).sqrt()).expect("valid std dev");
    let init: Vec<f64> = (0..2 * n).map(|_| normal.sample(&mut rng)).collect();
    let mut v = Precoder::from_stacked(&init).normalized()?.stacked();

    let mut adam = Adam::new(2 * n, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut timings = PhaseTimings::default();
    let mut trace = Vec::with_capacity(cfg.total_steps);
    let mut rounds_log = Vec::with_capacity(cfg.rounds + 1);
    let mut step = 0;

    for round in 0..cfg.rounds {
        let t0 = Instant::now();
        let m = stack.scan(&Precoder::from_stacked(&v).normalized()?, cfg).best;
        timings.phase_a_s.push(t0.elapsed().as_secs_f64());
        rounds_log.push(m);

        let t1 = Instant::now();
        let ch = stack.channels(m).expect("scan returns a stacked candidate");
        for _ in 0..cfg.steps_per_round() {
            let lr = if cfg.cosine { cosine_lr(step, cfg.total_steps, cfg.learning_rate) } else { cfg.learning_rate };
            let w_raw = Precoder::from_stacked(&v);
            let (loss, mut grad) = loss_gradient(&ch, &w_raw, cfg)?;
            let (bp, dp) = site_powers(&ch, &w_raw.normalized()?);
            let bdb: Vec<f64> = bp.iter().map(|&p| to_db(p)).collect();
            let ddb: Vec<f64> = dp.iter().map(|&p| to_db(p)).collect();
            trace.push(TraceRow { step, round, lr, loss, max_dark_db: max_db(&ddb), mean_bright_db: mean_db(&bdb) });
            if cfg.clip {
                clip_gradient(&mut grad, cfg.clip_norm);
            }
            adam.step(&mut v, &grad, lr);
            step += 1;
        }
        timings.phase_b_s.push(t1.elapsed().as_secs_f64());
    }

    let w = Precoder::from_stacked(&v).normalized()?;
    let t2 = Instant::now();
    let m = stack.scan(&w, cfg).best;
    timings.phase_a_s.push(t2.elapsed().as_secs_f64());
    rounds_log.push(m);

    let ch = stack.channels(m).expect("scan returns a stacked candidate");
    let (bp, dp) = site_powers(&ch, &w);
    let bright_powers_db: Vec<f64> = bp.iter().map(|&p| to_db(p)).collect();
    let dark_powers_db: Vec<f64> = dp.iter().map(|&p| to_db(p)).collect();
    timings.total_s = start.elapsed().as_secs_f64();
    Ok(OptResult {
        site_index: m,
        precoder: w,
        bright_sites: cs.bright.clone(),
        bright_mean_db: mean_db(&bright_powers_db),
        max_dark_db: max_db(&dark_powers_db),
        bright_powers_db,
        dark_sites: cs.dark.clone(),
        dark_powers_db,
        loss_trace: trace,
        phase_timings: timings,
        rounds_log,
    })
}
