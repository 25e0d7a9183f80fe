use std::fmt::Write as _;

use super::value_iteration::{q_values, surrogate_mdp, task_value_iteration};
use super::{SimplexGrid, TabularMdp};
use crate::error::Result;

/// Tolerance for calling a grid point or action optimal.
pub const OPTIMALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateReport {
    pub state: usize,
    pub v_task: f64,
    pub v_surrogate: f64,
    pub value_gap: f64,
    /// Grid point chosen as the surrogate optimum, preferring vertices among
    /// points within [`OPTIMALITY_TOL`] of the best.
    pub chosen_point: usize,
    pub chosen_vertex: Option<usize>,
    pub argmax_is_vertex: bool,
    /// The chosen vertex is the one-hot of an action that is greedy for the
    /// task MDP.
    pub vertex_matches_task_greedy: bool,
    /// Every grid point whose surrogate Q-value is within
    /// [`OPTIMALITY_TOL`] of the best.
    pub optimal_points: Vec<usize>,
    /// Task actions whose Q-value is within [`OPTIMALITY_TOL`] of `V*`.
    pub task_greedy_actions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub resolution: usize,
    pub states: Vec<StateReport>,
}

impl TheoremReport {
    pub fn max_gap(&self) -> f64 {
        self.states.iter().map(|s| s.value_gap).fold(0.0, f64::max)
    }

    /// True when every state has zero gap (within `gap_tol`) and an optimal
    /// vertex that is task-greedy.
    pub fn holds(&self, gap_tol: f64) -> bool {
        self.states.iter().all(|s| {
            s.value_gap <= gap_tol && s.argmax_is_vertex && s.vertex_matches_task_greedy
        })
    }

    pub fn to_csv(&self, grid: &SimplexGrid) -> String {
        let mut out = String::from(
            "state,v_task,v_surrogate,gap,chosen_point,chosen_vertex,argmax_is_vertex,vertex_matches_task_greedy,optimal_points\n",
        );
        for s in &self.states {
            let point: Vec<String> = grid.points()[s.chosen_point]
                .as_slice()
                .iter()
                .map(|p| format!("{p}"))
                .collect();
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:e},{},{},{},{},{}",
                s.state,
                s.v_task,
                s.v_surrogate,
                s.value_gap,
                point.join(" "),
                s.chosen_vertex.map_or_else(|| "-".to_string(), |a| a.to_string()),
                s.argmax_is_vertex,
                s.vertex_matches_task_greedy,
                s.optimal_points.len()
            );
        }
        out
    }

    pub fn to_table(&self, grid: &SimplexGrid) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>5}  {:>14}  {:>14}  {:>10}  {:>7}  {:>6}  {:<}",
            "state", "V*", "V~*", "gap", "vertex", "greedy", "chosen p"
        );
        for s in &self.states {
            let point: Vec<String> = grid.points()[s.chosen_point]
                .as_slice()
                .iter()
                .map(|p| format!("{p:.3}"))
                .collect();
            let _ = writeln!(
                out,
                "{:>5}  {:>14.9}  {:>14.9}  {:>10.2e}  {:>7}  {:>6}  ({})",
                s.state,
                s.v_task,
                s.v_surrogate,
                s.value_gap,
                s.chosen_vertex.map_or_else(|| "-".to_string(), |a| a.to_string()),
                if s.vertex_matches_task_greedy { "yes" } else { "no" },
                point.join(", ")
            );
        }
        let _ = writeln!(out, "grid k = {}, {} points, max gap {:.3e}", self.resolution, grid.len(), self.max_gap());
        out
    }
}

/// Solves the task MDP and its probability-surrogate MDP over `grid` and
/// compares optimal values and policies state by state.
pub fn verify_theorem1(mdp: &TabularMdp, grid: &SimplexGrid, tol: f64) -> Result<TheoremReport> {
    let task = task_value_iteration(mdp, tol)?;
    let sur_mdp = surrogate_mdp(mdp, grid)?;
    let sur = task_value_iteration(&sur_mdp, tol)?;

    let task_q = q_values(mdp, &task.values);
    let sur_q = q_values(&sur_mdp, &sur.values);

    let states = (0..mdp.n_states())
        .map(|s| {
            let best = sur_q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let optimal_points: Vec<usize> = (0..grid.len())
                .filter(|&i| sur_q[s][i] >= best - OPTIMALITY_TOL)
                .collect();
            let chosen_point = optimal_points
                .iter()
                .copied()
                .find(|&i| grid.vertex_action(i).is_some())
                .unwrap_or(optimal_points[0]);
            let chosen_vertex = grid.vertex_action(chosen_point);
            let task_greedy_actions: Vec<usize> = (0..mdp.n_actions())
                .filter(|&a| task_q[s][a] >= task.values[s] - OPTIMALITY_TOL)
                .collect();
            StateReport {
                state: s,
                v_task: task.values[s],
                v_surrogate: sur.values[s],
                value_gap: (sur.values[s] - task.values[s]).abs(),
                chosen_point,
                chosen_vertex,
                argmax_is_vertex: chosen_vertex.is_some(),
                vertex_matches_task_greedy: chosen_vertex
                    .is_some_and(|a| task_greedy_actions.contains(&a)),
                optimal_points,
                task_greedy_actions,
            }
        })
        .collect();

    Ok(TheoremReport {
        resolution: grid.resolution(),
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theorem::enumerate_simplex_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vertex_grid_has_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mdp = TabularMdp::random(4, 3, 0.9, &mut rng).unwrap();
        let grid = enumerate_simplex_grid(3, 1).unwrap();
        let report = verify_theorem1(&mdp, &grid, 1e-12).unwrap();
        assert_eq!(report.max_gap(), 0.0);
        assert!(report.holds(0.0));
    }

    #[test]
    fn random_mdps_at_resolution_eight() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let ns = rng.gen_range(1..=5);
            let na = rng.gen_range(1..=4);
            let mdp = TabularMdp::random(ns, na, 0.9, &mut rng).unwrap();
            let grid = enumerate_simplex_grid(na, 8).unwrap();
            let report = verify_theorem1(&mdp, &grid, 1e-12).unwrap();
            assert!(report.max_gap() <= 1e-8, "gap {}", report.max_gap());
            assert!(report.holds(1e-8));
        }
    }

    #[test]
    fn tied_actions_make_their_edge_optimal() {
        // Both actions in state 0 lead to the same place with the same reward.
        let mdp = TabularMdp::new(
            vec![
                vec![vec![0.2, 0.8], vec![0.2, 0.8], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0]; 3],
            ],
            vec![vec![1.0, 1.0, 0.0], vec![0.5, 0.5, 0.5]],
            0.9,
        )
        .unwrap();
        let grid = enumerate_simplex_grid(3, 8).unwrap();
        let report = verify_theorem1(&mdp, &grid, 1e-13).unwrap();
        let s0 = &report.states[0];
        let edge: Vec<usize> = (0..grid.len())
            .filter(|&i| grid.points()[i].as_slice()[2] == 0.0)
            .collect();
        assert_eq!(edge.len(), 9);
        for i in &edge {
            assert!(s0.optimal_points.contains(i), "edge point {i} not optimal");
        }
        assert_eq!(s0.optimal_points.len(), 9);
        assert_eq!(s0.task_greedy_actions, vec![0, 1]);
        assert!(report.holds(1e-9));

        let csv = report.to_csv(&grid);
        assert_eq!(csv.lines().count(), 3);
        assert!(report.to_table(&grid).contains("max gap"));
    }
}
