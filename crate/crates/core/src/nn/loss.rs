use super::Matrix;
use crate::error::{Error, Result};

/// Mean squared error over all entries, with its gradient
/// `2 (pred - target) / batch` with respect to `pred`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::Dimension(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let n = pred.len() as f64;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut loss = 0.0;
    for ((g, p), t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_inputs_have_zero_loss() {
        let m = Matrix::from_rows(&[[1.5], [-2.0]]).unwrap();
        let (loss, grad) = mse_loss(&m, &m).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn unit_error() {
        let (loss, grad) = mse_loss(
            &Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            &Matrix::from_vec(1, 1, vec![0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(grad.data(), &[2.0]);
    }

    #[test]
    fn random_batch_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Vec<f64> = (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let t: Vec<f64> = (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (loss, grad) = mse_loss(
            &Matrix::from_vec(8, 1, p.clone()).unwrap(),
            &Matrix::from_vec(8, 1, t.clone()).unwrap(),
        )
        .unwrap();
        let direct: f64 = p.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 8.0;
        assert!((loss - direct).abs() <= 1e-12);
        for i in 0..8 {
            assert!((grad.get(i, 0) - (p[i] - t[i]) / 4.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        let e = Matrix::zeros(0, 1);
        assert!(matches!(mse_loss(&e, &e), Err(Error::InvalidArgument(_))));
        let a = Matrix::zeros(2, 1);
        let b = Matrix::zeros(3, 1);
        assert!(matches!(mse_loss(&a, &b), Err(Error::Dimension(_))));
    }
}
