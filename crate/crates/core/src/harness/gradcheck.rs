use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::agents::{Critic, DqnAgent, Hyperparams, PsadpgAgent};
use crate::error::Result;
use crate::nn::gradcheck::{
    central_difference, check_network_gradients, param_grad, sample_coordinates, GradCheckConfig,
    GradCheckReport,
};
use crate::nn::{softmax, Matrix, Network};

/// Gradient checks of one network (or network pair) in the suite.
#[derive(Debug, Clone)]
pub struct GradCheckRow {
    pub name: &'static str,
    pub report: GradCheckReport,
}

fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Matrix> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Checks `Σ Q(s, p) ⊙ w` with respect to the parameters of one critic part.
fn check_critic<R: Rng + ?Sized>(
    critic: &mut Critic,
    states: &Matrix,
    probs: &Matrix,
    embed_part: bool,
    cfg: &GradCheckConfig,
    rng: &mut R,
) -> Result<GradCheckReport> {
    let (q, cache) = critic.forward(states, probs)?;
    let w = random_matrix(q.rows(), 1, rng)?;
    critic.zero_grad();
    critic.backward(&cache, &w)?;
    let project = |q: Matrix| -> f64 { q.data().iter().zip(w.data()).map(|(a, b)| a * b).sum() };

    let mut report = GradCheckReport::new();
    if embed_part {
        let head = critic.head.clone();
        for c in sample_coordinates(&critic.embed, cfg.coordinates, rng) {
            let numeric = central_difference(&mut critic.embed, c, cfg.step, |embed| {
                Ok(project(head.predict(&embed.predict(states)?.hcat(probs)?)?))
            })?;
            report.record(c, param_grad(&critic.embed, c), numeric);
        }
    } else {
        let joined = critic.embed.predict(states)?.hcat(probs)?;
        for c in sample_coordinates(&critic.head, cfg.coordinates, rng) {
            let numeric = central_difference(&mut critic.head, c, cfg.step, |head| Ok(project(head.predict(&joined)?)))?;
            report.record(c, param_grad(&critic.head, c), numeric);
        }
    }
    critic.zero_grad();
    Ok(report)
}

/// Reverse-mode gradients against central differences for every network an
/// agent with these hyperparameters builds: the actor, both critic parts,
/// the actor objective `mean Q(s, μ(s))` through the critic, and the DQN
/// Q-network. The actor's final layer is randomized rather than zeroed.
pub fn gradcheck_suite<R: Rng + ?Sized>(
    obs_dim: usize,
    action_count: usize,
    hp: &Hyperparams,
    cfg: &GradCheckConfig,
    batch: usize,
    rng: &mut R,
) -> Result<Vec<GradCheckRow>> {
    let mut actor_rng = ChaCha20Rng::seed_from_u64(rng.gen());
    let mut critic_rng = ChaCha20Rng::seed_from_u64(rng.gen());
    let mut agent = PsadpgAgent::new(obs_dim, action_count, hp.clone(), &mut actor_rng, &mut critic_rng)?;
    agent.actor = Network::new(agent.actor.spec().clone(), &mut actor_rng)?;
    let states = random_matrix(batch, obs_dim, rng)?;
    let mut logits = random_matrix(batch, action_count, rng)?;
    logits.data_mut().iter_mut().for_each(|v| *v *= 3.0);
    let probs = softmax(&logits);

    let mut rows = Vec::new();
    rows.push(GradCheckRow {
        name: "actor",
        report: check_network_gradients(&mut agent.actor, &states, cfg, rng)?,
    });
    rows.push(GradCheckRow {
        name: "critic_embed",
        report: check_critic(&mut agent.critic, &states, &probs, true, cfg, rng)?,
    });
    rows.push(GradCheckRow {
        name: "critic_head",
        report: check_critic(&mut agent.critic, &states, &probs, false, cfg, rng)?,
    });

    agent.actor_objective_gradient(&states, 1.0)?;
    let critic = agent.critic.clone();
    let mut report = GradCheckReport::new();
    for c in sample_coordinates(&agent.actor, cfg.coordinates, rng) {
        let numeric = central_difference(&mut agent.actor, c, cfg.step, |actor| {
            let q = critic.predict(&states, &actor.predict(&states)?)?;
            Ok(q.data().iter().sum::<f64>() / q.rows() as f64)
        })?;
        report.record(c, param_grad(&agent.actor, c), numeric);
    }
    rows.push(GradCheckRow {
        name: "actor_objective",
        report,
    });

    let mut dqn = DqnAgent::new(obs_dim, action_count, hp.clone(), rng)?;
    rows.push(GradCheckRow {
        name: "dqn",
        report: check_network_gradients(&mut dqn.q_net, &states, cfg, rng)?,
    });
    Ok(rows)
}

pub fn gradcheck_csv(rows: &[GradCheckRow]) -> String {
    let mut out = String::from("network,coordinates,max_rel_error\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:e}", r.name, r.report.checked, r.report.max_rel_error);
    }
    out
}
