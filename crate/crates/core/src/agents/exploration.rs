use rand::Rng;

use super::Hyperparams;
use crate::replay::ProbabilityVector;

/// Linear decay from `epsilon_start` to `epsilon_end` over
/// `epsilon_horizon` steps, constant afterwards.
pub fn epsilon_at(hp: &Hyperparams, step: u64) -> f64 {
    let horizon = hp.epsilon_horizon as u64;
    if step >= horizon {
        return hp.epsilon_end;
    }
    let frac = step as f64 / horizon as f64;
    hp.epsilon_start + (hp.epsilon_end - hp.epsilon_start) * frac
}

/// Categorical draw from `p`.
pub fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // rounding left `acc` just below 1
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}

/// With probability `epsilon` a uniform action, otherwise a draw from `p`.
pub fn sample_action<R: Rng + ?Sized>(p: &ProbabilityVector, epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..p.len())
    } else {
        sample_categorical(p.as_slice(), rng)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
