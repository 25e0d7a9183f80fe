use serde::{Deserialize, Serialize};

use super::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
    /// Row-wise softmax. Only valid on the final layer.
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
            Activation::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            "linear" => Some(Activation::Linear),
            "softmax" => Some(Activation::Softmax),
            _ => None,
        }
    }

    pub(crate) fn apply(self, pre: &Matrix) -> Matrix {
        match self {
            Activation::Linear => pre.clone(),
            Activation::Tanh => map(pre, f64::tanh),
            Activation::Relu => map(pre, |z| z.max(0.0)),
            Activation::Softmax => softmax(pre),
        }
    }

    /// Maps `d out` to `d pre` given the cached pre- and post-activation.
    pub(crate) fn backprop(self, pre: &Matrix, out: &Matrix, grad_out: &Matrix) -> Matrix {
        match self {
            Activation::Linear => grad_out.clone(),
            Activation::Tanh => {
                let mut g = grad_out.clone();
                for (g, y) in g.data_mut().iter_mut().zip(out.data()) {
                    *g *= 1.0 - y * y;
                }
                g
            }
            Activation::Relu => {
                let mut g = grad_out.clone();
                for (g, z) in g.data_mut().iter_mut().zip(pre.data()) {
                    if *z <= 0.0 {
                        *g = 0.0;
                    }
                }
                g
            }
            Activation::Softmax => {
                // dz_j = y_j (g_j - Σ_i g_i y_i)
                let mut g = grad_out.clone();
                for r in 0..g.rows() {
                    let y = out.row(r);
                    let dot: f64 = g.row(r).iter().zip(y).map(|(a, b)| a * b).sum();
                    for (gj, yj) in g.row_mut(r).iter_mut().zip(y) {
                        *gj = yj * (*gj - dot);
                    }
                }
                g
            }
        }
    }
}

fn map(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let mut out = m.clone();
    out.data_mut().iter_mut().for_each(|v| *v = f(*v));
    out
}

/// Numerically stable softmax of one row of logits.
pub fn softmax_row(logits: &[f64], out: &mut [f64]) {
    debug_assert_eq!(logits.len(), out.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Row-wise softmax; every row of the result lies on the probability simplex.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        softmax_row(logits.row(r), out.row_mut(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_give_uniform_probabilities() {
        let p = softmax(&Matrix::row_vector(&[0.0, 0.0, 0.0]).unwrap());
        for &v in p.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_high_precision_reference() {
        // exp-normalize of (1, 2, 3) evaluated at 30 digits with mpmath
        let expected = [0.0900305731703805, 0.244728471054798, 0.665240955774822];
        let p = softmax(&Matrix::row_vector(&[1.0, 2.0, 3.0]).unwrap());
        for (a, b) in p.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn large_shift_does_not_overflow() {
        let base = softmax(&Matrix::row_vector(&[0.3, -1.2, 2.5]).unwrap());
        let shifted = softmax(&Matrix::row_vector(&[1000.3, 998.8, 1002.5]).unwrap());
        assert!(shifted.is_finite());
        assert!(base.max_abs_diff(&shifted) < 1e-12);
    }

    proptest! {
        #[test]
        fn rows_sum_to_one_and_are_shift_invariant(
            logits in prop::collection::vec(-50.0f64..50.0, 1..8),
            shift in -500.0f64..500.0,
        ) {
            let m = Matrix::row_vector(&logits).unwrap();
            let p = softmax(&m);
            let sum: f64 = p.data().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(p.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
            let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            let q = softmax(&Matrix::row_vector(&shifted).unwrap());
            prop_assert!(p.max_abs_diff(&q) <= 1e-12);
        }
    }
}
