use crate::error::{Error, Result};
use crate::replay::ProbabilityVector;

/// Every probability vector over `n_actions` whose entries are multiples
/// of `1/resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    n_actions: usize,
    resolution: usize,
    points: Vec<ProbabilityVector>,
    /// `vertex_of[i]` is `Some(a)` when point `i` is the one-hot of action `a`.
    vertex_of: Vec<Option<usize>>,
}

impl SimplexGrid {
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn points(&self) -> &[ProbabilityVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn vertex_action(&self, point: usize) -> Option<usize> {
        self.vertex_of[point]
    }

    /// Grid index of the one-hot of `action`.
    pub fn vertex_index(&self, action: usize) -> Option<usize> {
        self.vertex_of.iter().position(|v| *v == Some(action))
    }
}

/// Compositions of `k` into `n_actions` non-negative parts, scaled by `1/k`,
/// in lexicographic order of the parts from largest first coordinate down:
/// `n = 2, k = 2` gives `(1, 0), (0.5, 0.5), (0, 1)`.
pub fn enumerate_simplex_grid(n_actions: usize, k: usize) -> Result<SimplexGrid> {
    if n_actions == 0 || k == 0 {
        return Err(Error::InvalidArgument(
            "simplex grid needs n_actions >= 1 and k >= 1".into(),
        ));
    }
    let mut compositions = Vec::new();
    let mut current = vec![0usize; n_actions];
    compose(k, 0, &mut current, &mut compositions);

    let scale = k as f64;
    let mut points = Vec::with_capacity(compositions.len());
    let mut vertex_of = Vec::with_capacity(compositions.len());
    for parts in compositions {
        vertex_of.push(parts.iter().position(|&c| c == k));
        let entries = parts.iter().map(|&c| c as f64 / scale).collect();
        points.push(ProbabilityVector::new(entries)?);
    }
    Ok(SimplexGrid {
        n_actions,
        resolution: k,
        points,
        vertex_of,
    })
}

fn compose(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for c in (0..=remaining).rev() {
        current[pos] = c;
        compose(remaining - c, pos + 1, current, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn two_actions_resolution_two() {
        let g = enumerate_simplex_grid(2, 2).unwrap();
        let pts: Vec<&[f64]> = g.points().iter().map(|p| p.as_slice()).collect();
        assert_eq!(pts, vec![&[1.0, 0.0][..], &[0.5, 0.5], &[0.0, 1.0]]);
    }

    #[test]
    fn resolution_one_is_the_vertices() {
        let g = enumerate_simplex_grid(3, 1).unwrap();
        assert_eq!(g.len(), 3);
        for a in 0..3 {
            assert_eq!(g.vertex_action(a), Some(a));
            assert!(g.points()[a].is_one_hot());
        }
    }

    #[test]
    fn stars_and_bars_count() {
        assert_eq!(enumerate_simplex_grid(3, 4).unwrap().len(), 15);
        assert!(enumerate_simplex_grid(0, 4).is_err());
        assert!(enumerate_simplex_grid(3, 0).is_err());
    }

    proptest! {
        #[test]
        fn grid_invariants(n in 1usize..5, k in 1usize..9) {
            let g = enumerate_simplex_grid(n, k).unwrap();
            prop_assert_eq!(g.len(), binomial(k + n - 1, n - 1));
            for a in 0..n {
                let idx = g.vertex_index(a);
                prop_assert!(idx.is_some());
                prop_assert_eq!(g.points()[idx.unwrap()].hot_index(), Some(a));
            }
            for p in g.points() {
                for &x in p.as_slice() {
                    let scaled = x * k as f64;
                    prop_assert!((scaled - scaled.round()).abs() < 1e-12);
                }
            }
            // strictly decreasing lexicographic order
            for w in g.points().windows(2) {
                let ord = w[0].as_slice().iter().zip(w[1].as_slice())
                    .map(|(a, b)| b.partial_cmp(a).unwrap())
                    .find(|o| o.is_ne());
                prop_assert_eq!(ord, Some(std::cmp::Ordering::Less));
            }
        }
    }
}
