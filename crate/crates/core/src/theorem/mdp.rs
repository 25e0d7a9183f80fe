use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// A finite MDP `(S, A, P, R, γ)`.
///
/// Transition probabilities are stored flat as `P[s][a][s']`. States in
/// `absorbing` end an episode on arrival and are valued at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    gamma: f64,
    absorbing: BTreeSet<usize>,
    start_state: usize,
}

impl TabularMdp {
    /// `transitions[s][a][s']` and `rewards[s][a]`.
    pub fn new(
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
        gamma: f64,
    ) -> Result<Self> {
        let n_states = transitions.len();
        let n_actions = transitions.first().map_or(0, Vec::len);
        if rewards.len() != n_states || rewards.iter().any(|r| r.len() != n_actions) {
            return Err(Error::InvalidArgument(format!(
                "reward table must be {n_states}x{n_actions}"
            )));
        }
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, per_action) in transitions.iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(Error::InvalidArgument(format!(
                    "state {s} has {} actions, expected {n_actions}",
                    per_action.len()
                )));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::InvalidArgument(format!(
                        "P[{s}][{a}] has {} entries, expected {n_states}",
                        row.len()
                    )));
                }
                flat.extend_from_slice(row);
            }
        }
        let mdp = Self {
            n_states,
            n_actions,
            transitions: flat,
            rewards: rewards.concat(),
            gamma,
            absorbing: BTreeSet::new(),
            start_state: 0,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn with_absorbing(mut self, states: impl IntoIterator<Item = usize>) -> Result<Self> {
        self.absorbing = states.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    pub fn with_start_state(mut self, s: usize) -> Result<Self> {
        self.start_state = s;
        self.validate()?;
        Ok(self)
    }

    /// Random MDP with Dirichlet-like transition rows and rewards in `[-1, 1)`.
    pub fn random<R: Rng + ?Sized>(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut transitions = Vec::with_capacity(n_states);
        let mut rewards = Vec::with_capacity(n_states);
        for _ in 0..n_states {
            let mut per_action = Vec::with_capacity(n_actions);
            for _ in 0..n_actions {
                let raw: Vec<f64> = (0..n_states).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
                let sum: f64 = raw.iter().sum();
                per_action.push(raw.iter().map(|x| x / sum).collect());
            }
            transitions.push(per_action);
            rewards.push((0..n_actions).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        Self::new(transitions, rewards, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::InvalidArgument("MDP needs at least one state and action".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if self.start_state >= self.n_states {
            return Err(Error::InvalidArgument("start state out of range".into()));
        }
        if let Some(s) = self.absorbing.iter().find(|&&s| s >= self.n_states) {
            return Err(Error::InvalidArgument(format!("absorbing state {s} out of range")));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("rewards must be finite".into()));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.transition_row(s, a);
                if row.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::InvalidArgument(format!("P[{s}][{a}] has a negative entry")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "P[{s}][{a}] sums to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    pub fn absorbing(&self) -> &BTreeSet<usize> {
        &self.absorbing
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing.contains(&s)
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    /// `P(· | s, a)`.
    #[inline]
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    /// Parses the plain-text MDP format:
    ///
    /// ```text
    /// # comment
    /// states 2
    /// actions 2
    /// gamma 0.9
    /// absorbing 1        (optional, zero or more indices)
    /// start 0            (optional, default 0)
    /// rewards
    /// <one line per state: n_actions rewards>
    /// transition <s> <a>
    /// <n_states probabilities>
    /// ... one `transition` block for every (s, a)
    /// ```
    ///
    /// Tokens are whitespace separated; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders the MDP in the format accepted by [`TabularMdp::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states {}", self.n_states);
        let _ = writeln!(out, "actions {}", self.n_actions);
        let _ = writeln!(out, "gamma {:?}", self.gamma);
        if !self.absorbing.is_empty() {
            let list: Vec<String> = self.absorbing.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "absorbing {}", list.join(" "));
        }
        let _ = writeln!(out, "start {}", self.start_state);
        let _ = writeln!(out, "rewards");
        for s in 0..self.n_states {
            let row: Vec<String> = (0..self.n_actions)
                .map(|a| format!("{:?}", self.reward(s, a)))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let _ = writeln!(out, "transition {s} {a}");
                let row: Vec<String> = self
                    .transition_row(s, a)
                    .iter()
                    .map(|p| format!("{p:?}"))
                    .collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }
}

struct Parser<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        Self { lines, pos: 0 }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let l = self.lines.get(self.pos).cloned();
        self.pos += 1;
        l
    }

    fn numbers(&self, line: usize, toks: &[&str], expected: usize) -> Result<Vec<f64>> {
        if toks.len() != expected {
            return Err(self.err(line, format!("expected {expected} numbers, found {}", toks.len())));
        }
        toks.iter()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(line, format!("`{t}` is not a number"))))
            .collect()
    }

    fn index(&self, line: usize, tok: &str) -> Result<usize> {
        tok.parse()
            .map_err(|_| self.err(line, format!("`{tok}` is not a non-negative integer")))
    }

    fn parse(mut self) -> Result<TabularMdp> {
        let mut n_states = None;
        let mut n_actions = None;
        let mut gamma = None;
        let mut absorbing = Vec::new();
        let mut start = 0;
        let mut rewards: Option<Vec<Vec<f64>>> = None;
        let mut transitions: Option<Vec<Vec<Option<Vec<f64>>>>> = None;
        let mut last_line = 0;

        while let Some((line, toks)) = self.next_line() {
            last_line = line;
            match toks[0] {
                "states" | "actions" | "start" => {
                    if toks.len() != 2 {
                        return Err(self.err(line, format!("`{}` takes one value", toks[0])));
                    }
                    let v = self.index(line, toks[1])?;
                    match toks[0] {
                        "states" => n_states = Some(v),
                        "actions" => n_actions = Some(v),
                        _ => start = v,
                    }
                }
                "gamma" => gamma = Some(self.numbers(line, &toks[1..], 1)?[0]),
                "absorbing" => {
                    for t in &toks[1..] {
                        absorbing.push(self.index(line, t)?);
                    }
                }
                "rewards" => {
                    let (ns, na) = n_states
                        .zip(n_actions)
                        .ok_or_else(|| self.err(line, "`states` and `actions` must precede `rewards`"))?;
                    let mut table = Vec::with_capacity(ns);
                    for _ in 0..ns {
                        let (l, row) = self
                            .next_line()
                            .ok_or_else(|| self.err(line, "unexpected end of reward table"))?;
                        table.push(self.numbers(l, &row, na)?);
                    }
                    rewards = Some(table);
                }
                "transition" => {
                    let (ns, na) = n_states
                        .zip(n_actions)
                        .ok_or_else(|| self.err(line, "`states` and `actions` must precede `transition`"))?;
                    if toks.len() != 3 {
                        return Err(self.err(line, "expected `transition <s> <a>`"));
                    }
                    let s = self.index(line, toks[1])?;
                    let a = self.index(line, toks[2])?;
                    if s >= ns || a >= na {
                        return Err(self.err(line, format!("transition ({s}, {a}) out of range")));
                    }
                    let (l, row) = self
                        .next_line()
                        .ok_or_else(|| self.err(line, "missing transition probabilities"))?;
                    let probs = self.numbers(l, &row, ns)?;
                    let table = transitions.get_or_insert_with(|| vec![vec![None; na]; ns]);
                    if table[s][a].replace(probs).is_some() {
                        return Err(self.err(line, format!("duplicate transition ({s}, {a})")));
                    }
                }
                other => return Err(self.err(line, format!("unknown directive `{other}`"))),
            }
        }

        let end = last_line.max(1);
        let gamma = gamma.ok_or_else(|| self.err(end, "missing `gamma`"))?;
        let rewards = rewards.ok_or_else(|| self.err(end, "missing `rewards` table"))?;
        let table = transitions.ok_or_else(|| self.err(end, "missing `transition` blocks"))?;
        let mut full = Vec::with_capacity(table.len());
        for (s, per_action) in table.into_iter().enumerate() {
            let mut rows = Vec::with_capacity(per_action.len());
            for (a, row) in per_action.into_iter().enumerate() {
                rows.push(row.ok_or_else(|| self.err(end, format!("missing transition ({s}, {a})")))?);
            }
            full.push(rows);
        }
        TabularMdp::new(full, rewards, gamma)?
            .with_absorbing(absorbing)?
            .with_start_state(start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CHAIN: &str = "\
# two-state chain
states 2
actions 2
gamma 0.9
absorbing 1
rewards
1.0 0.5
0 0
transition 0 0
0 1
transition 0 1
0 1
transition 1 0
0 1
transition 1 1
0 1
";

    #[test]
    fn parses_the_documented_format() {
        let mdp = TabularMdp::parse(CHAIN).unwrap();
        assert_eq!(mdp.n_states(), 2);
        assert_eq!(mdp.n_actions(), 2);
        assert_eq!(mdp.reward(0, 1), 0.5);
        assert_eq!(mdp.transition_row(0, 0), &[0.0, 1.0]);
        assert!(mdp.is_absorbing(1));
        assert_eq!(mdp.start_state(), 0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mdp = TabularMdp::random(4, 3, 0.9, &mut rng)
            .unwrap()
            .with_absorbing([2])
            .unwrap();
        assert_eq!(TabularMdp::parse(&mdp.to_text()).unwrap(), mdp);
    }

    #[test]
    fn reports_line_of_malformed_value() {
        let bad = CHAIN.replace("1.0 0.5", "1.0 x");
        match TabularMdp::parse(&bad) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("`x`"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let missing = CHAIN.replace("transition 1 1\n0 1\n", "");
        assert!(TabularMdp::parse(&missing).is_err());
    }

    #[test]
    fn validation() {
        let p = vec![vec![vec![1.0]]];
        assert!(TabularMdp::new(p.clone(), vec![vec![1.0]], 1.0).is_err());
        assert!(TabularMdp::new(vec![vec![vec![0.6]]], vec![vec![1.0]], 0.5).is_err());
        assert!(TabularMdp::new(p, vec![vec![1.0]], 0.5).is_ok());
    }
}
