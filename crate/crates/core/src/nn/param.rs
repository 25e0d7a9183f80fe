use serde::{Deserialize, Serialize};

use super::Matrix;

/// A trainable tensor with its gradient and Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub value: Matrix,
    pub grad: Matrix,
    pub adam_m: Matrix,
    pub adam_v: Matrix,
    pub step_count: u64,
}

impl Parameter {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = value.shape();
        Self {
            value,
            grad: Matrix::zeros(r, c),
            adam_m: Matrix::zeros(r, c),
            adam_v: Matrix::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam descent step on every parameter. Gradients are
/// left in place; the caller zeroes them.
pub fn adam_step<'a>(params: impl IntoIterator<Item = &'a mut Parameter>, cfg: &AdamConfig) {
    for p in params {
        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let values = p.value.data_mut().iter_mut();
        let moments = p.adam_m.data_mut().iter_mut().zip(p.adam_v.data_mut());
        for ((w, g), (m, v)) in values.zip(p.grad.data()).zip(moments) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Parameter {
        Parameter::new(Matrix::from_vec(1, 1, vec![v]).unwrap())
    }

    /// Textbook scalar Adam, written out independently.
    fn scalar_adam(mut x: f64, grads: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut m, mut v) = (0.0, 0.0);
        for (i, g) in grads.iter().enumerate() {
            let t = (i + 1) as f64;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powf(t));
            let vh = v / (1.0 - b2.powf(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        x
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = Parameter::new(Matrix::from_rows(&[[0.5, -2.0]]).unwrap());
        let before = p.value.clone();
        adam_step([&mut p], &AdamConfig::default());
        assert_eq!(p.value, before);
        assert_eq!(p.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar(0.0);
        p.grad.set(0, 0, 1.0);
        adam_step([&mut p], &AdamConfig::with_lr(0.0005));
        // Δ = -lr · 1 / (1 + eps)
        let expected = -0.0005 / (1.0 + 1e-8);
        assert!((p.value.get(0, 0) - expected).abs() < 1e-15);
        assert_eq!(p.grad.get(0, 0), 1.0, "grad must be untouched");
    }

    #[test]
    fn two_steps_match_scalar_oracle() {
        let mut p = scalar(0.3);
        let cfg = AdamConfig::with_lr(0.0005);
        for _ in 0..2 {
            p.grad.set(0, 0, 1.0);
            adam_step([&mut p], &cfg);
        }
        let oracle = scalar_adam(0.3, &[1.0, 1.0], 0.0005);
        assert!((p.value.get(0, 0) - oracle).abs() <= 1e-12);
        assert_eq!(p.step_count, 2);
    }

    #[test]
    fn varying_gradients_match_scalar_oracle() {
        let grads = [0.7, -1.3, 2.2, 0.01, -0.4];
        let mut p = scalar(-1.0);
        let cfg = AdamConfig::with_lr(0.01);
        for g in grads {
            p.grad.set(0, 0, g);
            adam_step([&mut p], &cfg);
        }
        assert!((p.value.get(0, 0) - scalar_adam(-1.0, &grads, 0.01)).abs() <= 1e-12);
    }
}
