//! Two-link underactuated pendulum with the classic-control `Acrobot-v1`
//! conventions: unit masses and lengths, torque on the elbow only, one RK4
//! step of 0.2 s per action, and termination once the tip rises one link
//! length above the pivot.

use std::f64::consts::PI;

use rand::Rng;

use super::{Environment, StepResult};
use crate::error::{Error, Result};

const DT: f64 = 0.2;
const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_POS_1: f64 = 0.5;
const LINK_COM_POS_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const GRAVITY: f64 = 9.8;
const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;
const AVAIL_TORQUE: [f64; 3] = [-1.0, 0.0, 1.0];

pub const ACROBOT_MAX_STEPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcrobotState {
    pub theta1: f64,
    pub theta2: f64,
    pub dtheta1: f64,
    pub dtheta2: f64,
    pub step_index: usize,
}

impl AcrobotState {
    pub fn at_rest() -> Self {
        Self::from_array([0.0; 4])
    }

    pub fn from_array(s: [f64; 4]) -> Self {
        Self {
            theta1: s[0],
            theta2: s[1],
            dtheta1: s[2],
            dtheta2: s[3],
            step_index: 0,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.theta1, self.theta2, self.dtheta1, self.dtheta2]
    }

    /// `(cos θ1, sin θ1, cos θ2, sin θ2, θ̇1, θ̇2)`.
    pub fn observation(&self) -> Vec<f64> {
        vec![
            self.theta1.cos(),
            self.theta1.sin(),
            self.theta2.cos(),
            self.theta2.sin(),
            self.dtheta1,
            self.dtheta2,
        ]
    }

    /// Tip height above the pivot exceeds one link length.
    pub fn is_terminal(&self) -> bool {
        -self.theta1.cos() - (self.theta1 + self.theta2).cos() > 1.0
    }

    /// Kinetic plus potential energy, with zero potential at the pivot.
    pub fn mechanical_energy(&self) -> f64 {
        let (m1, m2, l1) = (LINK_MASS_1, LINK_MASS_2, LINK_LENGTH_1);
        let (lc1, lc2, i1, i2) = (LINK_COM_POS_1, LINK_COM_POS_2, LINK_MOI, LINK_MOI);
        let (t1, t2, w1, w2) = (self.theta1, self.theta2, self.dtheta1, self.dtheta2);
        let d11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * t2.cos()) + i1 + i2;
        let d12 = m2 * (lc2 * lc2 + l1 * lc2 * t2.cos()) + i2;
        let d22 = m2 * lc2 * lc2 + i2;
        let kinetic = 0.5 * d11 * w1 * w1 + d12 * w1 * w2 + 0.5 * d22 * w2 * w2;
        let potential = -m1 * GRAVITY * lc1 * t1.cos() - m2 * GRAVITY * (l1 * t1.cos() + lc2 * (t1 + t2).cos());
        kinetic + potential
    }
}

/// Time derivative of `(θ1, θ2, θ̇1, θ̇2)` under elbow torque `a`.
fn dsdt(s: [f64; 4], a: f64) -> [f64; 4] {
    let (m1, m2, l1) = (LINK_MASS_1, LINK_MASS_2, LINK_LENGTH_1);
    let (lc1, lc2, i1, i2) = (LINK_COM_POS_1, LINK_COM_POS_2, LINK_MOI, LINK_MOI);
    let g = GRAVITY;
    let [theta1, theta2, dtheta1, dtheta2] = s;
    let d1 = m1 * lc1.powi(2)
        + m2 * (l1.powi(2) + lc2.powi(2) + 2.0 * l1 * lc2 * theta2.cos())
        + i1
        + i2;
    let d2 = m2 * (lc2.powi(2) + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2.powi(2) * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1.powi(2) * theta2.sin() - phi2)
        / (m2 * lc2.powi(2) + i2 - d2.powi(2) / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4(s: [f64; 4], a: f64, dt: f64) -> [f64; 4] {
    let offset = |base: [f64; 4], k: [f64; 4], h: f64| -> [f64; 4] {
        std::array::from_fn(|i| base[i] + h * k[i])
    };
    let k1 = dsdt(s, a);
    let k2 = dsdt(offset(s, k1, dt / 2.0), a);
    let k3 = dsdt(offset(s, k2, dt / 2.0), a);
    let k4 = dsdt(offset(s, k3, dt), a);
    std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Wraps an angle into `[-π, π)`.
fn wrap(x: f64) -> f64 {
    let span = 2.0 * PI;
    let wrapped = x - span * ((x + PI) / span).floor();
    if wrapped >= PI {
        wrapped - span
    } else {
        wrapped
    }
}

/// One macro-step of the dynamics: integrate, wrap angles, clamp speeds.
pub(crate) fn advance(s: [f64; 4], torque: f64) -> [f64; 4] {
    let ns = rk4(s, torque, DT);
    [
        wrap(ns[0]),
        wrap(ns[1]),
        ns[2].clamp(-MAX_VEL_1, MAX_VEL_1),
        ns[3].clamp(-MAX_VEL_2, MAX_VEL_2),
    ]
}

#[derive(Debug, Clone)]
pub struct Acrobot<R> {
    state: AcrobotState,
    rng: R,
    finished: bool,
}

impl<R: Rng> Acrobot<R> {
    pub fn new(rng: R) -> Self {
        Self {
            state: AcrobotState::at_rest(),
            rng,
            finished: true,
        }
    }

    pub fn state(&self) -> AcrobotState {
        self.state
    }

    /// Places the pendulum in `state` and starts a fresh episode from it.
    pub fn set_state(&mut self, state: AcrobotState) {
        self.state = state;
        self.finished = false;
    }
}

impl<R: Rng> Environment for Acrobot<R> {
    fn name(&self) -> &str {
        "acrobot"
    }

    fn obs_dim(&self) -> usize {
        6
    }

    fn action_count(&self) -> usize {
        AVAIL_TORQUE.len()
    }

    fn max_episode_steps(&self) -> usize {
        ACROBOT_MAX_STEPS
    }

    fn reset(&mut self) -> Vec<f64> {
        let s: [f64; 4] = std::array::from_fn(|_| self.rng.gen_range(-0.1..=0.1));
        self.set_state(AcrobotState::from_array(s));
        self.state.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let torque = *AVAIL_TORQUE.get(action).ok_or_else(|| {
            Error::InvalidArgument(format!("acrobot action {action} not in 0..3"))
        })?;
        if self.finished {
            return Err(Error::State("acrobot episode is over; call reset".into()));
        }
        let next = advance(self.state.as_array(), torque);
        self.state = AcrobotState {
            step_index: self.state.step_index + 1,
            ..AcrobotState::from_array(next)
        };
        let done = self.state.is_terminal();
        let truncated = !done && self.state.step_index >= ACROBOT_MAX_STEPS;
        self.finished = done || truncated;
        Ok(StepResult {
            observation: self.state.observation(),
            reward: if done { 0.0 } else { -1.0 },
            done,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(seed: u64) -> Acrobot<ChaCha8Rng> {
        Acrobot::new(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Acrobot ODE from the Lagrangian: solve `M(q) q̈ = τ - h(q, q̇) - G(q)`
    /// by Cramer's rule, then a textbook RK4 step.
    mod oracle {
        pub fn accel(s: [f64; 4], tau: f64) -> [f64; 4] {
            let [q1, q2, w1, w2] = s;
            let (m1, m2, l1, lc1, lc2, i1, i2, g) = (1.0, 1.0, 1.0, 0.5, 0.5, 1.0, 1.0, 9.8f64);
            let m11 = m1 * lc1 * lc1 + i1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * q2.cos()) + i2;
            let m12 = m2 * (lc2 * lc2 + l1 * lc2 * q2.cos()) + i2;
            let m22 = m2 * lc2 * lc2 + i2;
            let h = m2 * l1 * lc2 * q2.sin();
            let c1 = -h * w2 * w2 - 2.0 * h * w1 * w2;
            let c2 = h * w1 * w1;
            let g1 = (m1 * lc1 + m2 * l1) * g * q1.sin() + m2 * lc2 * g * (q1 + q2).sin();
            let g2 = m2 * lc2 * g * (q1 + q2).sin();
            let r1 = -c1 - g1;
            let r2 = tau - c2 - g2;
            let det = m11 * m22 - m12 * m12;
            [w1, w2, (r1 * m22 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det]
        }

        pub fn rk4(s: [f64; 4], tau: f64, dt: f64) -> [f64; 4] {
            let add = |a: [f64; 4], b: [f64; 4], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]];
            let k1 = accel(s, tau);
            let k2 = accel(add(s, k1, dt / 2.0), tau);
            let k3 = accel(add(s, k2, dt / 2.0), tau);
            let k4 = accel(add(s, k3, dt), tau);
            let mut out = s;
            for i in 0..4 {
                out[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
            }
            out
        }
    }

    #[test]
    fn observation_at_rest() {
        assert_eq!(
            AcrobotState::at_rest().observation(),
            vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn resets_are_uniform_in_small_box() {
        let mut e = env(7);
        let n = 10_000;
        let mut sums = [0.0; 4];
        for _ in 0..n {
            e.reset();
            let s = e.state().as_array();
            assert_eq!(e.state().step_index, 0);
            for (acc, v) in sums.iter_mut().zip(s) {
                assert!((-0.1..=0.1).contains(&v));
                *acc += v;
            }
        }
        for acc in sums {
            // sd of the mean is 0.1/√3/√n ≈ 5.8e-4
            assert!((acc / n as f64).abs() < 0.01);
        }
    }

    #[test]
    fn reset_is_seed_deterministic() {
        assert_eq!(env(3).reset(), env(3).reset());
        assert_ne!(env(3).reset(), env(4).reset());
    }

    #[test]
    fn hanging_rest_is_a_fixed_point() {
        let mut e = env(0);
        e.set_state(AcrobotState::at_rest());
        let r = e.step(1).unwrap();
        assert!(!r.done && !r.truncated);
        assert_eq!(r.reward, -1.0);
        for v in e.state().as_array() {
            assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn inverted_pose_is_terminal() {
        for (w1, w2) in [(0.0, 0.0), (3.0, -7.0), (-12.0, 20.0)] {
            let s = AcrobotState::from_array([PI, 0.0, w1, w2]);
            assert!(s.is_terminal());
        }
        assert!(!AcrobotState::at_rest().is_terminal());
    }

    #[test]
    fn torque_step_matches_lagrangian_oracle() {
        let starts = [[0.0; 4], [0.05, -0.08, 0.03, 0.02], [1.0, -2.0, 3.0, -5.0]];
        for s in starts {
            for (action, tau) in AVAIL_TORQUE.iter().enumerate() {
                let got = rk4(s, *tau, DT);
                let want = oracle::rk4(s, *tau, DT);
                for i in 0..4 {
                    assert!((got[i] - want[i]).abs() <= 1e-8, "start {s:?} action {action}");
                }
            }
        }
    }

    // Reference states from gymnasium 1.4.0 `Acrobot-v1` (book dynamics,
    // no torque noise), written with full f64 precision.
    #[test]
    fn matches_reference_trajectories() {
        let cases: &[([f64; 4], &[usize], &[[f64; 4]])] = &[
            (
                [0.0; 4],
                &[2],
                &[[-0.013262967177227795, 0.03428722934738544, -0.12866185280996106, 0.33450108998660194]],
            ),
            (
                [0.05, -0.08, 0.03, 0.02],
                &[2, 0, 1, 2, 2],
                &[
                    [0.03498702378549439, -0.028861987217204857, -0.1752703218171978, 0.4798422410344345],
                    [0.010478452916049923, 0.034533989543593074, -0.06305939734951495, 0.13977500084153827],
                    [-0.0020700093282506136, 0.058513310026071325, -0.05916051686850912, 0.09400652599510634],
                    [-0.02521248288521441, 0.10431259802272087, -0.16594126044810648, 0.35211183312146116],
                    [-0.06479454448464556, 0.19229111071021987, -0.21894201461158713, 0.5060766290443371],
                ],
            ),
            (
                [1.0, -2.0, 3.0, -5.0],
                &[0, 0, 2, 2, 1, 1, 0, 2, 2, 2],
                &[
                    [1.4873452462461167, -2.820537884554022, 1.8550677469428787, -3.31069861556914],
                    [1.7397542036174942, 2.9370446629657883, 0.6767150851825614, -1.9644881422664715],
                    [1.749336563101716, 2.715616499504929, -0.5817663296302447, -0.24796429138869924],
                    [1.5035168850243361, 2.8355203914157685, -1.8855733049195904, 1.4313842411430024],
                    [1.0032666485058677, -3.021395611843336, -3.0750704753206817, 2.82797578765817],
                    [0.31214662280573435, -2.3075460061406803, -3.7019235351240085, 4.3552362997463625],
                    [-0.42051383817264176, -1.289929581130397, -3.554799236313201, 5.787443925129929],
                    [-1.1067715373436064, 0.0012775971273040199, -3.166465125688213, 6.748794609734804],
                    [-1.6017146805973312, 1.2198596742374164, -1.658940050604616, 5.235675291013301],
                    [-1.7556876044794003, 2.1041472967444412, 0.12138795924412671, 3.6457137231836603],
                ],
            ),
        ];
        for (start, actions, expected) in cases {
            let mut e = env(0);
            e.set_state(AcrobotState::from_array(*start));
            for (a, want) in actions.iter().zip(expected.iter()) {
                let r = e.step(*a).unwrap();
                assert!(!r.done);
                for (got, want) in e.state().as_array().iter().zip(want) {
                    assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn terminating_step_pays_zero_and_blocks_further_steps() {
        let mut e = env(0);
        e.set_state(AcrobotState::from_array([2.5, 0.3, 1.0, 0.5]));
        let r = e.step(2).unwrap();
        assert!(r.done && !r.truncated);
        assert_eq!(r.reward, 0.0);
        let want = [2.6166963211273764, 0.5106768404293754, 0.19020338635777378, 1.616544984088126];
        for (got, want) in e.state().as_array().iter().zip(want) {
            assert!((got - want).abs() <= 1e-8);
        }
        assert!(matches!(e.step(0), Err(Error::State(_))));
    }

    #[test]
    fn rejects_out_of_range_action() {
        let mut e = env(0);
        e.reset();
        assert!(matches!(e.step(3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn step_before_reset_is_a_state_error() {
        assert!(matches!(env(0).step(0), Err(Error::State(_))));
    }

    #[test]
    fn truncates_at_step_limit() {
        let mut e = env(1);
        e.set_state(AcrobotState::at_rest());
        for i in 1..=ACROBOT_MAX_STEPS {
            let r = e.step(1).unwrap();
            assert_eq!(r.truncated, i == ACROBOT_MAX_STEPS);
            assert!(!r.done);
        }
        assert!(e.step(1).is_err());
    }

    #[test]
    fn angles_wrap_and_speeds_clamp() {
        let mut e = env(9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            e.reset();
            loop {
                let r = e.step(rng.gen_range(0..3)).unwrap();
                let s = e.state();
                assert!((-PI..PI).contains(&s.theta1) && (-PI..PI).contains(&s.theta2));
                assert!(s.dtheta1.abs() <= MAX_VEL_1 && s.dtheta2.abs() <= MAX_VEL_2);
                if r.episode_over() {
                    break;
                }
            }
        }
        assert_eq!(wrap(PI), -PI);
        assert_eq!(wrap(-PI), -PI);
        assert!((wrap(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn energy_is_conserved_at_rest() {
        let mut e = env(0);
        e.set_state(AcrobotState::at_rest());
        let e0 = e.state().mechanical_energy();
        for _ in 0..50 {
            e.step(1).unwrap();
            assert!((e.state().mechanical_energy() - e0).abs() <= 1e-9);
        }
    }

    #[test]
    fn identical_seed_and_actions_give_identical_streams() {
        let run = || {
            let mut e = env(17);
            let mut out = e.reset();
            for t in 0..200 {
                let r = e.step(t % 3).unwrap();
                out.extend(&r.observation);
                out.push(r.reward);
                if r.episode_over() {
                    out.extend(e.reset());
                }
            }
            out
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
