//! Fixed-capacity experience replay holding one-hot surrogate actions.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-6;

/// A point on the action simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("probability vector is empty".into()));
        }
        if let Some(bad) = entries.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!(
                "probability {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self(entries))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("no actions".into()));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The index of the single `1.0` entry if every other entry is `0.0`.
    pub fn hot_index(&self) -> Option<usize> {
        let mut hot = None;
        for (i, &p) in self.0.iter().enumerate() {
            if p == 1.0 && hot.is_none() {
                hot = Some(i);
            } else if p != 0.0 {
                return None;
            }
        }
        hot
    }

    pub fn is_one_hot(&self) -> bool {
        self.hot_index().is_some()
    }
}

/// The unit vector `p̂` with `p̂[action] = 1`.
pub fn one_hot(action: usize, n: usize) -> Result<ProbabilityVector> {
    if action >= n {
        return Err(Error::InvalidArgument(format!(
            "action {action} out of range for {n} actions"
        )));
    }
    let mut v = vec![0.0; n];
    v[action] = 1.0;
    Ok(ProbabilityVector(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub surrogate_action: ProbabilityVector,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// True termination. Truncated steps are stored with `done = false`.
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_count: usize,
    storage: Vec<Transition>,
    write_index: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_count: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            obs_dim,
            action_count,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            write_index: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.state.len() != self.obs_dim || t.next_state.len() != self.obs_dim {
            return Err(Error::InvalidArgument(format!(
                "transition states have lengths {}/{}, expected {}",
                t.state.len(),
                t.next_state.len(),
                self.obs_dim
            )));
        }
        if t.surrogate_action.len() != self.action_count {
            return Err(Error::InvalidArgument(format!(
                "surrogate action has {} entries, expected {}",
                t.surrogate_action.len(),
                self.action_count
            )));
        }
        if !t.reward.is_finite() {
            return Err(Error::InvalidArgument("non-finite reward".into()));
        }
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.write_index] = t;
        }
        self.write_index = (self.write_index + 1) % self.capacity;
        Ok(())
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.storage.len() < self.capacity {
            0
        } else {
            self.write_index
        };
        self.storage[split..].iter().chain(&self.storage[..split])
    }

    /// `n` distinct transitions drawn uniformly, or `None` while the buffer
    /// holds fewer than `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if self.storage.len() < n {
            return None;
        }
        let picks = rand::seq::index::sample(rng, self.storage.len(), n);
        Some(picks.into_iter().map(|i| &self.storage[i]).collect())
    }

    /// Writes a debug snapshot: a `# replay obs_dim=.. action_count=..` line,
    /// a CSV header, then one row per transition, oldest first.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# replay obs_dim={} action_count={}",
            self.obs_dim, self.action_count
        );
        let mut header: Vec<String> = (0..self.obs_dim).map(|i| format!("s{i}")).collect();
        header.extend((0..self.action_count).map(|i| format!("p{i}")));
        header.push("reward".into());
        header.extend((0..self.obs_dim).map(|i| format!("next_s{i}")));
        header.push("done".into());
        let _ = writeln!(out, "{}", header.join(","));
        for t in self.iter() {
            let mut row: Vec<String> = t.state.iter().map(|v| format!("{v:?}")).collect();
            row.extend(t.surrogate_action.as_slice().iter().map(|v| format!("{v:?}")));
            row.push(format!("{:?}", t.reward));
            row.extend(t.next_state.iter().map(|v| format!("{v:?}")));
            row.push(u8::from(t.done).to_string());
            let _ = writeln!(out, "{}", row.join(","));
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads a snapshot back into a buffer of the given capacity.
    pub fn read_snapshot(path: &Path, capacity: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse {
            line: line + 1,
            message,
        };

        let (_, first) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty snapshot".into()))?;
        let first = first.map_err(|e| Error::io(path, e))?;
        let mut obs_dim = None;
        let mut action_count = None;
        for field in first.trim_start_matches("# replay").split_whitespace() {
            match field.split_once('=') {
                Some(("obs_dim", v)) => obs_dim = v.parse().ok(),
                Some(("action_count", v)) => action_count = v.parse().ok(),
                _ => return Err(parse_err(0, format!("unexpected header field `{field}`"))),
            }
        }
        let (obs_dim, action_count) = obs_dim
            .zip(action_count)
            .ok_or_else(|| parse_err(0, "missing obs_dim or action_count".into()))?;
        let mut buffer = Self::new(capacity, obs_dim, action_count)?;

        lines.next();
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(idx, e.to_string()))?;
            if values.len() != 2 * obs_dim + action_count + 2 {
                return Err(parse_err(idx, format!("expected {} columns", 2 * obs_dim + action_count + 2)));
            }
            let (state, rest) = values.split_at(obs_dim);
            let (probs, rest) = rest.split_at(action_count);
            let (reward, rest) = rest.split_at(1);
            let (next_state, done) = rest.split_at(obs_dim);
            buffer.push(Transition {
                state: state.to_vec(),
                surrogate_action: ProbabilityVector::new(probs.to_vec())
                    .map_err(|e| parse_err(idx, e.to_string()))?,
                reward: reward[0],
                next_state: next_state.to_vec(),
                done: done[0] != 0.0,
            })?;
        }
        Ok(buffer)
    }
}
