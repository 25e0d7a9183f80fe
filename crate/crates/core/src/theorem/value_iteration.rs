use super::{SimplexGrid, TabularMdp};
use crate::error::{Error, Result};

/// Safety net for value iteration; with γ < 1 convergence to any
/// representable tolerance needs far fewer sweeps.
const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    /// Greedy action per state. For a surrogate MDP this indexes grid points.
    pub greedy: Vec<usize>,
    /// Sup-norm change of the last sweep.
    pub residual: f64,
    pub sweeps: usize,
}

/// `Q(s, a) = R(s, a) + γ Σ_s' P(s'|s, a) V(s')`; absorbing rows are zero.
pub fn q_values(mdp: &TabularMdp, values: &[f64]) -> Vec<Vec<f64>> {
    (0..mdp.n_states())
        .map(|s| {
            (0..mdp.n_actions())
                .map(|a| {
                    if mdp.is_absorbing(s) {
                        0.0
                    } else {
                        backup(mdp, values, s, a)
                    }
                })
                .collect()
        })
        .collect()
}

#[inline]
fn backup(mdp: &TabularMdp, values: &[f64], s: usize, a: usize) -> f64 {
    let expected: f64 = mdp
        .transition_row(s, a)
        .iter()
        .zip(values)
        .map(|(p, v)| p * v)
        .sum();
    mdp.reward(s, a) + mdp.gamma() * expected
}

/// First index of the maximum (ties go to the lowest index).
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Synchronous value iteration on the Bellman optimality operator until the
/// sup-norm change of a sweep is at most `tol`.
pub fn task_value_iteration(mdp: &TabularMdp, tol: f64) -> Result<ValueFunction> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = mdp.n_states();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut q = vec![0.0; mdp.n_actions()];
    let mut greedy = vec![0; n];
    for sweep in 1..=MAX_SWEEPS {
        let mut residual: f64 = 0.0;
        for s in 0..n {
            if mdp.is_absorbing(s) {
                next[s] = 0.0;
                greedy[s] = 0;
                continue;
            }
            for (a, qa) in q.iter_mut().enumerate() {
                *qa = backup(mdp, &values, s, a);
            }
            greedy[s] = argmax(&q);
            next[s] = q[greedy[s]];
            residual = residual.max((next[s] - values[s]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        if residual <= tol {
            // greedy w.r.t. the returned values
            let q = q_values(mdp, &values);
            let greedy = q.iter().map(|row| argmax(row)).collect();
            return Ok(ValueFunction {
                values,
                greedy,
                residual,
                sweeps: sweep,
            });
        }
    }
    Err(Error::Divergence(format!(
        "value iteration did not reach tolerance {tol} in {MAX_SWEEPS} sweeps"
    )))
}

/// The probability-surrogate MDP: its actions are the grid points and
/// `R̃(s, p) = Σ_a p_a R(s, a)`, `P̃(s'|s, p) = Σ_a p_a P(s'|s, a)`.
pub fn surrogate_mdp(mdp: &TabularMdp, grid: &SimplexGrid) -> Result<TabularMdp> {
    if grid.n_actions() != mdp.n_actions() {
        return Err(Error::InvalidArgument(format!(
            "grid has {} actions, MDP has {}",
            grid.n_actions(),
            mdp.n_actions()
        )));
    }
    let ns = mdp.n_states();
    let mut transitions = Vec::with_capacity(ns);
    let mut rewards = Vec::with_capacity(ns);
    for s in 0..ns {
        let mut rows = Vec::with_capacity(grid.len());
        let mut r = Vec::with_capacity(grid.len());
        for p in grid.points() {
            let mut row = vec![0.0; ns];
            let mut reward = 0.0;
            for (a, &pa) in p.as_slice().iter().enumerate() {
                reward += pa * mdp.reward(s, a);
                for (dst, &prob) in row.iter_mut().zip(mdp.transition_row(s, a)) {
                    *dst += pa * prob;
                }
            }
            rows.push(row);
            r.push(reward);
        }
        transitions.push(rows);
        rewards.push(r);
    }
    TabularMdp::new(transitions, rewards, mdp.gamma())?
        .with_absorbing(mdp.absorbing().iter().copied())?
        .with_start_state(mdp.start_state())
}

/// Value iteration over the surrogate MDP whose action set is `grid`.
pub fn surrogate_value_iteration(
    mdp: &TabularMdp,
    grid: &SimplexGrid,
    tol: f64,
) -> Result<ValueFunction> {
    task_value_iteration(&surrogate_mdp(mdp, grid)?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theorem::enumerate_simplex_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    /// Optimal values by evaluating every deterministic policy exactly.
    fn enumerate_policies(mdp: &TabularMdp) -> Vec<f64> {
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        let mut best = vec![f64::NEG_INFINITY; ns];
        for code in 0..na.pow(ns as u32) {
            let policy: Vec<usize> = (0..ns).map(|s| code / na.pow(s as u32) % na).collect();
            let a: Vec<Vec<f64>> = (0..ns)
                .map(|s| {
                    (0..ns)
                        .map(|t| {
                            let id = if s == t { 1.0 } else { 0.0 };
                            id - mdp.gamma() * mdp.transition_row(s, policy[s])[t]
                        })
                        .collect()
                })
                .collect();
            let b: Vec<f64> = (0..ns).map(|s| mdp.reward(s, policy[s])).collect();
            for (bs, v) in best.iter_mut().zip(solve(a, b)) {
                *bs = bs.max(v);
            }
        }
        best
    }

    #[test]
    fn single_state_geometric_series() {
        let mdp = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]], 0.5).unwrap();
        let vf = task_value_iteration(&mdp, 1e-13).unwrap();
        assert!((vf.values[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_discount_takes_best_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = TabularMdp::random(3, 4, 0.5, &mut rng).unwrap();
        let mdp = TabularMdp::parse(&base.to_text().replace("gamma 0.5", "gamma 0.0")).unwrap();
        let vf = task_value_iteration(&mdp, 1e-12).unwrap();
        for s in 0..3 {
            let best = (0..4).map(|a| mdp.reward(s, a)).fold(f64::MIN, f64::max);
            assert_eq!(vf.values[s], best);
        }
    }

    #[test]
    fn matches_exhaustive_policy_enumeration() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mdp = TabularMdp::random(4, 3, 0.9, &mut rng).unwrap();
            let vf = task_value_iteration(&mdp, 1e-12).unwrap();
            let oracle = enumerate_policies(&mdp);
            for (v, o) in vf.values.iter().zip(&oracle) {
                assert!((v - o).abs() <= 1e-8, "seed {seed}: {v} vs {o}");
            }
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        let mdp = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]], 0.5).unwrap();
        assert!(task_value_iteration(&mdp, 0.0).is_err());
        assert!(task_value_iteration(&mdp, f64::NAN).is_err());
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let mdp = TabularMdp::new(
            vec![vec![vec![1.0], vec![1.0]]],
            vec![vec![1.0, 1.0]],
            0.5,
        )
        .unwrap();
        assert_eq!(task_value_iteration(&mdp, 1e-12).unwrap().greedy, vec![0]);
    }

    #[test]
    fn vertex_grid_reproduces_task_iteration_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mdp = TabularMdp::random(5, 3, 0.9, &mut rng).unwrap();
        let grid = enumerate_simplex_grid(3, 1).unwrap();
        let task = task_value_iteration(&mdp, 1e-12).unwrap();
        let surrogate = surrogate_value_iteration(&mdp, &grid, 1e-12).unwrap();
        assert_eq!(task, surrogate);
    }

    #[test]
    fn single_action_grid_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mdp = TabularMdp::random(3, 1, 0.9, &mut rng).unwrap();
        for k in [1, 3, 10] {
            let grid = enumerate_simplex_grid(1, k).unwrap();
            assert_eq!(grid.len(), 1);
            let sv = surrogate_value_iteration(&mdp, &grid, 1e-12).unwrap();
            let tv = task_value_iteration(&mdp, 1e-12).unwrap();
            assert_eq!(sv.values, tv.values);
        }
    }

    #[test]
    fn fine_grid_attains_the_task_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mdp = TabularMdp::random(3, 2, 0.9, &mut rng).unwrap();
        let grid = enumerate_simplex_grid(2, 64).unwrap();
        let task = task_value_iteration(&mdp, 1e-13).unwrap();
        let sur = surrogate_value_iteration(&mdp, &grid, 1e-13).unwrap();
        for (a, b) in task.values.iter().zip(&sur.values) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn absorbing_states_are_worth_zero() {
        let mdp = TabularMdp::new(
            vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]],
            vec![vec![2.0], vec![5.0]],
            0.9,
        )
        .unwrap()
        .with_absorbing([1])
        .unwrap();
        let vf = task_value_iteration(&mdp, 1e-12).unwrap();
        assert_eq!(vf.values, vec![2.0, 0.0]);
    }
}
