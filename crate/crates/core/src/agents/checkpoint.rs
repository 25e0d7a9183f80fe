use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentKind, Hyperparams};
use crate::error::{Error, Result};
use crate::nn::{Matrix, Network, NetworkSpec, Parameter};

/// First line of every checkpoint file.
pub const CHECKPOINT_MAGIC: &str = "psadpg-checkpoint v1";

/// Network weights of one agent.
///
/// On disk: the magic line, one line of JSON describing the agent and every
/// network, then all parameter values as little-endian `f64`, network by
/// network in `w0, b0, w1, b1, …` order, each matrix row-major. Optimizer
/// state is not saved.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub agent: AgentKind,
    pub obs_dim: usize,
    pub action_count: usize,
    pub hyperparams: Hyperparams,
    pub networks: Vec<(String, Network)>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    agent: AgentKind,
    obs_dim: usize,
    action_count: usize,
    hyperparams: Hyperparams,
    networks: Vec<NetworkHeader>,
}

#[derive(Serialize, Deserialize)]
struct NetworkHeader {
    name: String,
    spec: NetworkSpec,
    /// `(rows, cols)` of every parameter, in storage order.
    shapes: Vec<(usize, usize)>,
}

fn bad(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        message: message.into(),
    }
}

impl Checkpoint {
    pub fn new(
        agent: AgentKind,
        obs_dim: usize,
        action_count: usize,
        hyperparams: Hyperparams,
        networks: Vec<(String, Network)>,
    ) -> Self {
        Self {
            agent,
            obs_dim,
            action_count,
            hyperparams,
            networks,
        }
    }

    pub fn network(&self, name: &str) -> Result<&Network> {
        self.networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, net)| net)
            .ok_or_else(|| bad(format!("checkpoint has no network `{name}`")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            agent: self.agent,
            obs_dim: self.obs_dim,
            action_count: self.action_count,
            hyperparams: self.hyperparams.clone(),
            networks: self
                .networks
                .iter()
                .map(|(name, net)| NetworkHeader {
                    name: name.clone(),
                    spec: net.spec().clone(),
                    shapes: net.params().map(Parameter::shape).collect(),
                })
                .collect(),
        };
        let mut out = format!(
            "{CHECKPOINT_MAGIC}\n{}\n",
            serde_json::to_string(&header).expect("header serializes")
        )
        .into_bytes();
        for (_, net) in &self.networks {
            for p in net.params() {
                for v in p.value.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut lines = bytes.splitn(3, |&b| b == b'\n');
        let magic = lines.next().unwrap_or_default();
        if magic != CHECKPOINT_MAGIC.as_bytes() {
            return Err(Error::Parse {
                line: 1,
                message: "not a checkpoint file".into(),
            });
        }
        let header = lines.next().ok_or_else(|| bad("missing checkpoint header"))?;
        let header: Header = serde_json::from_slice(header).map_err(|e| Error::Parse {
            line: 2,
            message: e.to_string(),
        })?;
        let mut data = lines.next().unwrap_or_default().chunks_exact(8);
        if !data.remainder().is_empty() {
            return Err(bad("weight section is not a whole number of f64 values"));
        }
        let mut next = || -> Result<f64> {
            let chunk = data.next().ok_or_else(|| bad("weight section is truncated"))?;
            Ok(f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")))
        };

        let mut networks = Vec::with_capacity(header.networks.len());
        for nh in header.networks {
            let mut net = Network::zeros(nh.spec)?;
            let expected: Vec<_> = net.params().map(Parameter::shape).collect();
            if expected != nh.shapes {
                return Err(bad(format!("network `{}` shapes do not match its spec", nh.name)));
            }
            for p in net.params_mut() {
                let (r, c) = p.shape();
                let values = (0..r * c).map(|_| next()).collect::<Result<Vec<f64>>>()?;
                *p = Parameter::new(Matrix::from_vec(r, c, values)?);
            }
            networks.push((nh.name, net));
        }
        if data.next().is_some() {
            return Err(bad("trailing bytes after the last network"));
        }
        Ok(Self {
            agent: header.agent,
            obs_dim: header.obs_dim,
            action_count: header.action_count,
            hyperparams: header.hyperparams,
            networks,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Agent, PsadpgAgent};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn psadpg() -> PsadpgAgent {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut c = ChaCha8Rng::seed_from_u64(2);
        let mut agent = PsadpgAgent::new(6, 3, Hyperparams::default(), &mut a, &mut c).unwrap();
        // make the actor's zeroed layer interesting
        for (i, v) in agent.actor.weights[1].value.data_mut().iter_mut().enumerate() {
            *v = (i as f64).sin() / 3.0;
        }
        agent
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let agent = psadpg();
        let ckpt = agent.checkpoint();
        let back = Checkpoint::from_bytes(&ckpt.to_bytes()).unwrap();
        assert_eq!(back, ckpt);
        let restored = PsadpgAgent::from_checkpoint(&back).unwrap();
        for (a, b) in restored.actor.params().zip(agent.actor.params()) {
            let bits = |m: &Matrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.value), bits(&b.value));
        }
        assert_eq!(back.to_bytes(), ckpt.to_bytes());
    }

    #[test]
    fn dqn_round_trip_through_a_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let agent = Agent::new(
            AgentKind::Dqn,
            4,
            2,
            Hyperparams::default(),
            &mut rng.clone(),
            &mut rng,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dqn.ckpt");
        agent.checkpoint().save(&path).unwrap();
        let back = Agent::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
        assert_eq!(back.kind(), AgentKind::Dqn);
        assert_eq!(back.checkpoint(), agent.checkpoint());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = psadpg().checkpoint().to_bytes();
        assert!(Checkpoint::from_bytes(b"hello\n{}\n").is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut longer = bytes.clone();
        longer.extend_from_slice(&0f64.to_le_bytes());
        assert!(Checkpoint::from_bytes(&longer).is_err());
        let ckpt = psadpg().checkpoint();
        assert!(crate::agents::DqnAgent::from_checkpoint(&ckpt).is_err());
    }
}
