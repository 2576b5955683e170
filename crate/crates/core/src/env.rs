//! Reconfiguration as an episodic decision process.
//!
//! An episode starts from the fully meshed network (every branch closed) and
//! opens one branch per step until `T` branches are open, where `T` is the number
//! of tie branches. Intermediate steps earn nothing; the terminal step checks the
//! traversal constraint, then radiality, and pays `-ACP / scale` for a feasible
//! configuration or `-penalty` otherwise. Already-open branches are masked out.

use serde::{Deserialize, Serialize};

use crate::error::{ConstraintError, Error};
use crate::grid::{base_configuration, BranchId, Configuration, Network};
use crate::reliability::{AcpEvaluator, ReliabilityModel};
use crate::scalar::Scalar;
use crate::topology;

/// Default penalty for an infeasible terminal configuration, in reward units.
pub const DEFAULT_PENALTY: f64 = 100.0;

/// Default target for the base configuration's reward magnitude; the reward scale
/// is `ACP(base) / DEFAULT_BASE_REWARD`.
pub const DEFAULT_BASE_REWARD: f64 = 50.0;

/// Switch status vector (`true` = closed) and the number of steps taken.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvState {
    status: Vec<bool>,
    step_index: usize,
}

impl EnvState {
    pub fn status(&self) -> &[bool] {
        &self.status
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn open_edges(&self) -> Vec<BranchId> {
        self.status
            .iter()
            .enumerate()
            .filter(|(_, &closed)| !closed)
            .map(|(i, _)| BranchId::from_index(i))
            .collect()
    }

    /// Network input: 1 for closed, 0 for open.
    pub fn encode<S: Scalar>(&self) -> Vec<S> {
        self.status
            .iter()
            .map(|&c| if c { S::one() } else { S::zero() })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Violation {
    None,
    Traversal,
    Radiality,
}

impl From<ConstraintError> for Violation {
    fn from(e: ConstraintError) -> Self {
        match e {
            ConstraintError::Traversal => Violation::Traversal,
            ConstraintError::Radiality => Violation::Radiality,
        }
    }
}

/// Reward for a complete configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardOutcome<S> {
    pub reward: S,
    pub feasible: bool,
    /// MWh/yr; present iff feasible.
    pub acp: Option<S>,
    pub violated: Violation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step<S> {
    pub state: EnvState,
    /// Immediate reward: zero before the terminal step.
    pub reward: S,
    /// Terminal evaluation; `None` on intermediate steps.
    pub outcome: Option<RewardOutcome<S>>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct Environment<'a, S> {
    net: &'a Network,
    horizon: usize,
    penalty: S,
    scale: S,
    evaluator: AcpEvaluator<'a, S>,
}

impl<'a, S: Scalar> Environment<'a, S> {
    /// `scale = None` picks `ACP(base configuration) / 50`.
    pub fn new(
        net: &'a Network,
        model: &ReliabilityModel<S>,
        penalty: S,
        scale: Option<S>,
    ) -> Result<Self, Error> {
        if !(penalty.is_finite() && penalty > S::zero()) {
            return Err(Error::Parameter(format!(
                "penalty must be > 0, got {penalty}"
            )));
        }
        let mut evaluator = AcpEvaluator::new(net, model);
        let scale = match scale {
            Some(s) => s,
            None => {
                let base = base_configuration(net).closed_mask(net);
                topology::check_constraints(net, &base)?;
                let acp = evaluator.evaluate(&base);
                if acp > S::zero() {
                    acp / S::of(DEFAULT_BASE_REWARD)
                } else {
                    S::one()
                }
            }
        };
        if !(scale.is_finite() && scale > S::zero()) {
            return Err(Error::Parameter(format!(
                "reward scale must be > 0, got {scale}"
            )));
        }
        Ok(Environment {
            net,
            horizon: net.tie_count(),
            penalty,
            scale,
            evaluator,
        })
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    /// Steps per episode.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn penalty(&self) -> S {
        self.penalty
    }

    pub fn scale(&self) -> S {
        self.scale
    }

    pub fn action_count(&self) -> usize {
        self.net.branch_count()
    }

    /// The all-closed mesh.
    pub fn reset(&self) -> EnvState {
        EnvState {
            status: vec![true; self.net.branch_count()],
            step_index: 0,
        }
    }

    pub fn is_terminal(&self, state: &EnvState) -> bool {
        state.step_index >= self.horizon
    }

    /// Currently closed branches, ascending.
    pub fn valid_actions(&self, state: &EnvState) -> Vec<BranchId> {
        state
            .status
            .iter()
            .enumerate()
            .filter(|(_, &closed)| closed)
            .map(|(i, _)| BranchId::from_index(i))
            .collect()
    }

    pub fn step(&mut self, state: &EnvState, action: BranchId) -> Result<Step<S>, Error> {
        if self.is_terminal(state) {
            return Err(Error::Parameter("episode already finished".into()));
        }
        match state.status.get(action.index()) {
            Some(true) => {}
            Some(false) => return Err(Error::InvalidAction(action)),
            None => return Err(Error::Parameter(format!("unknown branch {action}"))),
        }
        let mut next = state.clone();
        next.status[action.index()] = false;
        next.step_index += 1;
        if next.step_index < self.horizon {
            return Ok(Step {
                state: next,
                reward: S::zero(),
                outcome: None,
                terminal: false,
            });
        }
        let outcome = self.evaluate_closed(&next.status);
        Ok(Step {
            state: next,
            reward: outcome.reward,
            outcome: Some(outcome),
            terminal: true,
        })
    }

    pub fn terminal_reward(&mut self, cfg: &Configuration) -> RewardOutcome<S> {
        self.evaluate_closed(&cfg.closed_mask(self.net))
    }

    fn evaluate_closed(&mut self, closed: &[bool]) -> RewardOutcome<S> {
        match topology::check_constraints(self.net, closed) {
            Ok(()) => {
                let acp = self.evaluator.evaluate(closed);
                RewardOutcome {
                    reward: -acp / self.scale,
                    feasible: true,
                    acp: Some(acp),
                    violated: Violation::None,
                }
            }
            Err(e) => RewardOutcome {
                reward: -self.penalty,
                feasible: false,
                acp: None,
                violated: e.into(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::bundled_network;
    use crate::reliability::{assign_failure_rates, average_curtailed_power, ReliabilityParams};

    fn setup(name: &str) -> (Network, ReliabilityModel<f64>) {
        let net = bundled_network(name);
        let model = assign_failure_rates(&net, &ReliabilityParams::default()).unwrap();
        (net, model)
    }

    fn run(env: &mut Environment<'_, f64>, actions: &[u32]) -> Vec<Step<f64>> {
        let mut state = env.reset();
        let mut steps = Vec::new();
        for &a in actions {
            let step = env.step(&state, BranchId(a)).unwrap();
            state = step.state.clone();
            steps.push(step);
        }
        steps
    }

    #[test]
    fn reset_is_all_closed() {
        for (name, e) in [("33", 37), ("69", 73)] {
            let (net, model) = setup(name);
            let env = Environment::new(&net, &model, 100.0, None).unwrap();
            let s = env.reset();
            assert_eq!(s.status().len(), e);
            assert!(s.status().iter().all(|&c| c));
            assert_eq!(s.step_index(), 0);
            assert_eq!(s, env.reset());
            assert_eq!(env.valid_actions(&s).len(), e);
        }
    }

    #[test]
    fn reported_optimum_is_feasible_in_any_order() {
        let (net, model) = setup("33");
        let mut env = Environment::new(&net, &model, 100.0, None).unwrap();
        let cfg = Configuration::from_ids(&net, [7, 14, 26, 33, 34]).unwrap();
        let expected = average_curtailed_power(&net, &model, &cfg).unwrap();
        for order in [[7, 14, 26, 33, 34], [34, 26, 7, 33, 14]] {
            let steps = run(&mut env, &order);
            for s in &steps[..4] {
                assert!(!s.terminal);
                assert_eq!(s.reward, 0.0);
                assert!(s.outcome.is_none());
            }
            let last = steps.last().unwrap();
            assert!(last.terminal);
            let out = last.outcome.unwrap();
            assert!(out.feasible);
            assert_eq!(out.violated, Violation::None);
            assert_eq!(out.acp, Some(expected));
            assert_eq!(out.reward, -expected / env.scale());
        }
    }

    #[test]
    fn opening_feeder_head_is_penalised() {
        let (net, model) = setup("33");
        let mut env = Environment::new(&net, &model, 100.0, None).unwrap();
        let out = run(&mut env, &[1, 2, 3, 4, 5])
            .last()
            .unwrap()
            .outcome
            .unwrap();
        assert!(!out.feasible);
        assert_eq!(out.violated, Violation::Traversal);
        assert_eq!(out.reward, -100.0);
        assert_eq!(out.acp, None);
    }

    #[test]
    fn masking_and_invalid_actions() {
        let (net, model) = setup("33");
        let mut env = Environment::new(&net, &model, 100.0, None).unwrap();
        let s0 = env.reset();
        let s1 = env.step(&s0, BranchId(7)).unwrap().state;
        let valid = env.valid_actions(&s1);
        assert_eq!(valid.len(), 36);
        assert!(!valid.contains(&BranchId(7)));
        assert_eq!(
            env.step(&s1, BranchId(7)),
            Err(Error::InvalidAction(BranchId(7)))
        );

        let steps = run(&mut env, &[7, 14, 26, 33, 34]);
        let terminal = &steps.last().unwrap().state;
        assert_eq!(env.valid_actions(terminal).len(), 32);
        assert!(env.step(terminal, BranchId(1)).is_err());
    }

    #[test]
    fn reward_orders_like_acp() {
        let (net, model) = setup("33");
        let mut env = Environment::new(&net, &model, 100.0, Some(1.0)).unwrap();
        let a = env.terminal_reward(&Configuration::from_ids(&net, [7, 14, 26, 33, 34]).unwrap());
        let b = env.terminal_reward(&base_configuration(&net));
        assert!(a.acp.unwrap() < b.acp.unwrap());
        assert!(a.reward > b.reward);
        assert_eq!(a.reward, -a.acp.unwrap());
    }

    #[test]
    fn default_scale_puts_base_at_fifty() {
        let (net, model) = setup("33");
        let mut env = Environment::new(&net, &model, 100.0, None).unwrap();
        let base = env.terminal_reward(&base_configuration(&net));
        assert!((base.reward + 50.0).abs() < 1e-9);
    }
}
