use serde::{Deserialize, Serialize};

/// Adam with bias-corrected moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(dim: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam { beta1, beta2, eps, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(params.len(), grad.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// `η·(1 + cos(π·t/T_max))/2`, clamped at the end of the schedule.
pub fn cosine_lr(step: usize, total_steps: usize, eta0: f64) -> f64 {
    let t = step.min(total_steps) as f64 / total_steps.max(1) as f64;
    eta0 * (1.0 + (std::f64::consts::PI * t).cos()) / 2.0
}

/// Rescale `grad` in place to norm `g_max` when it is longer.
pub fn clip_gradient(grad: &mut [f64], g_max: f64) {
    let n = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if n > g_max {
        let s = g_max / n;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_lr(0, 400, 0.05), 0.05);
        assert!(cosine_lr(400, 400, 0.05).abs() < 1e-18);
        assert!((cosine_lr(200, 400, 0.05) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn clipping() {
        let mut g = vec![6.0, 8.0];
        clip_gradient(&mut g, 5.0);
        assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] - 4.0).abs() < 1e-12);
        let mut h = vec![0.3, 0.4];
        clip_gradient(&mut h, 5.0);
        assert_eq!(h, vec![0.3, 0.4]);
    }

    #[test]
    fn first_adam_step_moves_by_lr() {
        // bias correction makes the first step ±lr per coordinate
        let mut a = Adam::new(2, 0.9, 0.999, 1e-8);
        let mut p = vec![1.0, -1.0];
        a.step(&mut p, &[0.5, -2.0], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-7);
        assert!((p[1] + 0.9).abs() < 1e-7);
    }
}
