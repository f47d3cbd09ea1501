use super::{LossKind, OptError, OptimizerConfig, Precoder};
use crate::channel::{ChannelTensor, ComplexMatrix};
use crate::constraints::ConstraintSet;
use crate::POWER_FLOOR;

/// `‖(H_r W_r − H_i W_i)‖² + ‖(H_r W_i + H_i W_r)‖²` on raw slices, writing
/// `H W` into `y_re`/`y_im`.
#[inline]
pub(crate) fn power_into(
    n: usize,
    h_re: &[f64],
    h_im: &[f64],
    w_re: &[f64],
    w_im: &[f64],
    y_re: &mut [f64],
    y_im: &mut [f64],
) -> f64 {
    let cols = w_re.len();
    let mut p = 0.0;
    for i in 0..n {
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..cols {
            let (hr, hi) = (h_re[i * cols + k], h_im[i * cols + k]);
            a += hr * w_re[k] - hi * w_im[k];
            b += hr * w_im[k] + hi * w_re[k];
        }
        y_re[i] = a;
        y_im[i] = b;
        p += a * a + b * b;
    }
    p
}

#[inline]
pub(crate) fn power_slices(n: usize, h_re: &[f64], h_im: &[f64], w_re: &[f64], w_im: &[f64]) -> f64 {
    let mut y_re = [0.0; 16];
    let mut y_im = [0.0; 16];
    if n <= 16 {
        power_into(n, h_re, h_im, w_re, w_im, &mut y_re[..n], &mut y_im[..n])
    } else {
        power_into(n, h_re, h_im, w_re, w_im, &mut vec![0.0; n], &mut vec![0.0; n])
    }
}

/// Received power `‖H W‖²` for a stored (already transposed) channel.
pub fn received_power(h: &ComplexMatrix, w: &Precoder) -> Result<f64, OptError> {
    if h.n_cols != w.len() {
        return Err(OptError::Dimension(format!("{}x{} channel, precoder of {}", h.n_rows, h.n_cols, w.len())));
    }
    Ok(power_slices(h.n_rows, &h.re, &h.im, &w.re, &w.im))
}

fn db(p: f64) -> f64 {
    10.0 * p.max(POWER_FLOOR).log10()
}

/// `−(1/|B|) Σ ln P_b + (λ/|D|) Σ [max(0, 10 log10 P_d − T)]²`.
pub fn penalty_loss(bright: &[f64], dark: &[f64], cfg: &OptimizerConfig) -> f64 {
    let mut l = -bright.iter().map(|p| p.max(POWER_FLOOR).ln()).sum::<f64>() / bright.len() as f64;
    if !dark.is_empty() {
        let pen: f64 = dark.iter().map(|&p| (db(p) - cfg.threshold_db).max(0.0).powi(2)).sum();
        l += cfg.penalty_coeff * pen / dark.len() as f64;
    }
    l
}

/// Threshold-free log trade-off `−mean ln P_B + λ·mean ln P_D`.
pub fn tradeoff_loss(bright: &[f64], dark: &[f64], cfg: &OptimizerConfig) -> f64 {
    let mut l = -bright.iter().map(|p| p.max(POWER_FLOOR).ln()).sum::<f64>() / bright.len() as f64;
    if !dark.is_empty() {
        l += cfg.penalty_coeff * dark.iter().map(|p| p.max(POWER_FLOOR).ln()).sum::<f64>() / dark.len() as f64;
    }
    l
}

/// The loss selected by `cfg.loss`.
pub fn objective(bright: &[f64], dark: &[f64], cfg: &OptimizerConfig) -> f64 {
    match cfg.loss {
        LossKind::Hinge => penalty_loss(bright, dark, cfg),
        LossKind::Tradeoff => tradeoff_loss(bright, dark, cfg),
    }
}

/// Bright and dark channels of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteChannels {
    pub bright: Vec<ComplexMatrix>,
    pub dark: Vec<ComplexMatrix>,
}

impl SiteChannels {
    pub fn at(tensor: &ChannelTensor, cs: &ConstraintSet, m: usize) -> Result<Self, OptError> {
        let c = tensor.candidate_pos(m).ok_or_else(|| OptError::Coverage(format!("candidate {m}")))?;
        let gather = |ids: &[u32]| {
            ids.iter()
                .map(|&id| {
                    let s = tensor.site_pos(id).ok_or_else(|| OptError::Coverage(format!("site {id}")))?;
                    Ok(tensor.matrix(c, s))
                })
                .collect::<Result<Vec<_>, OptError>>()
        };
        Ok(SiteChannels { bright: gather(&cs.bright)?, dark: gather(&cs.dark)? })
    }

    pub fn n(&self) -> usize {
        self.bright.first().or(self.dark.first()).map_or(0, |h| h.n_cols)
    }
}

/// Linear bright and dark powers for precoder `w` (used as given, no normalization).
pub fn site_powers(ch: &SiteChannels, w: &Precoder) -> (Vec<f64>, Vec<f64>) {
    let p = |h: &ComplexMatrix| power_slices(h.n_rows, &h.re, &h.im, &w.re, &w.im);
    (ch.bright.iter().map(p).collect(), ch.dark.iter().map(p).collect())
}

/// Loss of `normalize(w_raw)` and its gradient with respect to the raw stacked
/// `[re..., im...]` parameters.
pub fn loss_gradient(ch: &SiteChannels, w_raw: &Precoder, cfg: &OptimizerConfig) -> Result<(f64, Vec<f64>), OptError> {
    let n = w_raw.len();
    if ch.n() != n {
        return Err(OptError::Dimension(format!("channels are {}-wide, precoder has {n}", ch.n())));
    }
    if ch.bright.is_empty() {
        return Err(OptError::Dimension("no bright channel".into()));
    }
    let norm = w_raw.norm();
    if !(norm >= 1e-12) {
        return Err(OptError::ZeroPrecoder);
    }
    let w = w_raw.scaled(1.0 / norm);
    let mut g_unit = vec![0.0; 2 * n];
    let mut y_re = vec![0.0; n];
    let mut y_im = vec![0.0; n];

    // Accumulates coeff · ∂P/∂[re, im] where ∂P/∂re = 2 Re(Hᴴ H w), ∂P/∂im = 2 Im(Hᴴ H w).
    let mut accumulate = |h: &ComplexMatrix, coeff: f64, y_re: &[f64], y_im: &[f64]| {
        if coeff == 0.0 {
            return;
        }
        for j in 0..n {
            let (mut zr, mut zi) = (0.0, 0.0);
            for i in 0..h.n_rows {
                let (hr, hi) = (h.re[i * n + j], h.im[i * n + j]);
                zr += hr * y_re[i] + hi * y_im[i];
                zi += hr * y_im[i] - hi * y_re[i];
            }
            g_unit[j] += 2.0 * coeff * zr;
            g_unit[n + j] += 2.0 * coeff * zi;
        }
    };

    let nb = ch.bright.len() as f64;
    let mut bright = Vec::with_capacity(ch.bright.len());
    for h in &ch.bright {
        let p = power_into(h.n_rows, &h.re, &h.im, &w.re, &w.im, &mut y_re, &mut y_im);
        bright.push(p);
        let coeff = if p > POWER_FLOOR { -1.0 / (nb * p) } else { 0.0 };
        accumulate(h, coeff, &y_re, &y_im);
    }
    let nd = ch.dark.len() as f64;
    let mut dark = Vec::with_capacity(ch.dark.len());
    for h in &ch.dark {
        let p = power_into(h.n_rows, &h.re, &h.im, &w.re, &w.im, &mut y_re, &mut y_im);
        dark.push(p);
        let coeff = if p <= POWER_FLOOR {
            0.0
        } else {
            match cfg.loss {
                LossKind::Hinge => {
                    let excess = db(p) - cfg.threshold_db;
                    if excess > 0.0 {
                        cfg.penalty_coeff / nd * 2.0 * excess * 10.0 / (std::f64::consts::LN_10 * p)
                    } else {
                        0.0
                    }
                }
                LossKind::Tradeoff => cfg.penalty_coeff / (nd * p),
            }
        };
        accumulate(h, coeff, &y_re, &y_im);
    }
    let loss = objective(&bright, &dark, cfg);

    // Chain through v̂ = v/‖v‖: J = (I − v̂v̂ᵀ)/‖v‖.
    let v_hat = w.stacked();
    let dot: f64 = v_hat.iter().zip(&g_unit).map(|(a, b)| a * b).sum();
    let grad = g_unit.iter().zip(&v_hat).map(|(g, v)| (g - v * dot) / norm).collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::default()
    }

    #[test]
    fn all_ones_channel() {
        let h = ComplexMatrix::from_fn(4, 4, |_, _| Complex64::new(1.0, 0.0));
        let w = Precoder::new(vec![0.5; 4], vec![0.0; 4]);
        let p = received_power(&h, &w).unwrap();
        assert!((p - 16.0).abs() < 1e-12);
        assert!((db(p) - 12.041199826559248).abs() < 1e-9);
    }

    #[test]
    fn identity_channel() {
        let w = Precoder::new(vec![0.1, -0.3, 0.2, 0.5], vec![0.4, 0.0, -0.6, 0.2]).normalized().unwrap();
        assert!((received_power(&ComplexMatrix::identity(4), &w).unwrap() - 1.0).abs() < 1e-12);
        assert!(received_power(&ComplexMatrix::identity(3), &w).is_err());
    }

    #[test]
    fn penalty_examples() {
        let c = cfg();
        let at_t = 10f64.powf(c.threshold_db / 10.0);
        assert!((penalty_loss(&[std::f64::consts::E], &[at_t], &c) + 1.0).abs() < 1e-12);
        let over = 10f64.powf((c.threshold_db + 2.0) / 10.0);
        assert!((penalty_loss(&[1.0], &[over], &c) - 0.4).abs() < 1e-12);
        let under = 10f64.powf((c.threshold_db - 10.0) / 10.0);
        assert_eq!(penalty_loss(&[1.0], &[under], &c), 0.0);
        assert_eq!(penalty_loss(&[1.0], &[], &c), 0.0);
    }

    #[test]
    fn identity_bright_has_zero_gradient() {
        let ch = SiteChannels { bright: vec![ComplexMatrix::identity(4)], dark: vec![] };
        let w = Precoder::new(vec![0.3, 1.2, -0.4, 0.1], vec![0.7, -0.2, 0.0, 0.9]);
        let (l, g) = loss_gradient(&ch, &w, &cfg()).unwrap();
        assert!(l.abs() < 1e-12);
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn zero_raw_precoder() {
        let ch = SiteChannels { bright: vec![ComplexMatrix::identity(2)], dark: vec![] };
        let w = Precoder::new(vec![0.0; 2], vec![0.0; 2]);
        assert_eq!(loss_gradient(&ch, &w, &cfg()), Err(OptError::ZeroPrecoder));
    }
}
