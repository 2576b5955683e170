use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, QFunction};
use super::policy::{bellman_target, greedy_action, select_action, EpsilonSchedule, TargetSign};
use crate::env::{Environment, RewardOutcome, DEFAULT_PENALTY};
use crate::error::{Error, NumericError};
use crate::grid::{base_configuration, BranchId, Network};
use crate::reliability::ReliabilityModel;
use crate::scalar::Scalar;

/// Training hyper-parameters. Every field has a default, so a config file only
/// needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_min: f64,
    /// Hidden layer widths; `None` means two layers of width `2·|branches|`.
    pub hidden: Option<Vec<usize>>,
    pub activation: Activation,
    /// Episodes between copies of the online network into the target network.
    pub sync_interval: usize,
    pub seed: u64,
    pub penalty: f64,
    /// `None` derives the scale from the base configuration (see [`Environment::new`]).
    pub reward_scale: Option<f64>,
    pub target_sign: TargetSign,
    /// Bound on `|Q - y|` in the backward pass; `None` disables it.
    pub error_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 10_000,
            learning_rate: 1e-4,
            gamma: 0.9,
            epsilon_min: 0.01,
            hidden: None,
            activation: Activation::Relu,
            sync_interval: 50,
            seed: 0,
            penalty: DEFAULT_PENALTY,
            reward_scale: None,
            target_sign: TargetSign::Plus,
            error_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if self.episodes == 0 {
            return bad("episodes must be >= 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_min) {
            return bad("epsilon_min must lie in [0, 1]");
        }
        if self.sync_interval == 0 {
            return bad("sync_interval must be >= 1");
        }
        if self.hidden.as_ref().is_some_and(|h| h.contains(&0)) {
            return bad("hidden layer widths must be positive");
        }
        if let Some(c) = self.error_clip {
            if !(c.is_finite() && c > 0.0) {
                return bad("error_clip must be > 0");
            }
        }
        Ok(())
    }

    /// Full layer sizes for a network with `actions` branches.
    pub fn layer_sizes(&self, actions: usize) -> Vec<usize> {
        let hidden = self.hidden.clone().unwrap_or_else(|| vec![2 * actions; 2]);
        std::iter::once(actions)
            .chain(hidden)
            .chain(std::iter::once(actions))
            .collect()
    }
}

/// State encoding, action taken and regression target for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub state: Vec<S>,
    pub action: BranchId,
    pub target: S,
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<S> {
    pub episode: usize,
    /// Sum of rewards; equals the terminal reward since intermediate rewards are zero.
    pub reward: S,
    /// Mean squared error over the episode's transitions.
    pub mse_loss: S,
    /// Curtailed power in MWh/yr, `None` if the final configuration was infeasible.
    pub acp: Option<S>,
    pub open_set: Vec<BranchId>,
    /// Exploration rate used during the episode.
    pub epsilon: S,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub q: QFunction<S>,
    /// Target network as of the last synchronisation.
    pub target: QFunction<S>,
    pub records: Vec<EpisodeRecord<S>>,
    /// Evaluation of the normally-open configuration, the run's reference point.
    pub reference: RewardOutcome<S>,
}

/// Online gradient descent over one episode's transitions, in step order.
///
/// Returns the mean squared error measured before each update.
pub fn backprop_update<S: Scalar>(
    q: &mut QFunction<S>,
    transitions: &[Transition<S>],
    alpha: S,
    error_clip: Option<S>,
    episode: usize,
) -> Result<S, Error> {
    if alpha.is_nan() || alpha <= S::zero() {
        return Err(Error::Parameter("learning rate must be > 0".into()));
    }
    let mut total = S::zero();
    for t in transitions {
        let (loss, grads) = q.loss_gradient(&t.state, t.action.index(), t.target, error_clip)?;
        if !grads.is_finite() {
            return Err(NumericError::NonFiniteGradient { episode }.into());
        }
        q.apply_gradients(&grads, alpha);
        q.check_finite()?;
        total += loss;
    }
    Ok(if transitions.is_empty() {
        S::zero()
    } else {
        total / S::from_usize(transitions.len()).expect("transition count fits the scalar")
    })
}

pub fn train<S: Scalar>(
    net: &Network,
    model: &ReliabilityModel<S>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<S>, Error> {
    train_with(net, model, cfg, |_| {})
}

/// Runs `cfg.episodes` episodes, handing each record to `on_episode` as soon as
/// it exists so that callers can stream the log.
pub fn train_with<S: Scalar, F: FnMut(&EpisodeRecord<S>)>(
    net: &Network,
    model: &ReliabilityModel<S>,
    cfg: &TrainConfig,
    mut on_episode: F,
) -> Result<TrainOutcome<S>, Error> {
    cfg.validate()?;
    let mut env = Environment::new(net, model, S::of(cfg.penalty), cfg.reward_scale.map(S::of))?;
    let reference = env.terminal_reward(&base_configuration(net));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes = cfg.layer_sizes(env.action_count());
    let mut online = QFunction::<S>::random(&sizes, cfg.activation, &mut rng);
    let mut target = online.clone();
    let mut eps = EpsilonSchedule::new(S::of(cfg.epsilon_min), cfg.episodes);
    let (alpha, gamma) = (S::of(cfg.learning_rate), S::of(cfg.gamma));
    let clip = cfg.error_clip.map(S::of);

    let mut records = Vec::with_capacity(cfg.episodes);
    let mut transitions = Vec::with_capacity(env.horizon());
    for episode in 0..cfg.episodes {
        transitions.clear();
        let mut state = env.reset();
        let outcome = loop {
            let x = state.encode::<S>();
            let qvals = online.forward(&x)?;
            let mask = env.valid_actions(&state);
            let action = select_action(&qvals, &mask, eps.epsilon(), &mut rng)?;
            let step = env.step(&state, action)?;
            let y = if step.terminal {
                bellman_target(step.reward, None, gamma, cfg.target_sign)
            } else {
                let q_next = target.forward(&step.state.encode::<S>())?;
                let next_mask = env.valid_actions(&step.state);
                bellman_target(
                    step.reward,
                    Some((&q_next, &next_mask)),
                    gamma,
                    cfg.target_sign,
                )
            };
            transitions.push(Transition {
                state: x,
                action,
                target: y,
            });
            if step.terminal {
                state = step.state;
                break step.outcome.expect("terminal step is evaluated");
            }
            state = step.state;
        };

        let loss = backprop_update(&mut online, &transitions, alpha, clip, episode)?;
        let record = EpisodeRecord {
            episode,
            reward: outcome.reward,
            mse_loss: loss,
            acp: outcome.acp,
            open_set: state.open_edges(),
            epsilon: eps.epsilon(),
        };
        on_episode(&record);
        records.push(record);

        eps.update();
        if (episode + 1) % cfg.sync_interval == 0 {
            target = online.clone();
        }
    }

    Ok(TrainOutcome {
        q: online,
        target,
        records,
        reference,
    })
}

/// Follows the greedy policy (ε = 0) from the mesh to a complete configuration.
pub fn greedy_rollout<S: Scalar>(
    q: &QFunction<S>,
    env: &mut Environment<'_, S>,
) -> Result<(Vec<BranchId>, RewardOutcome<S>), Error> {
    let mut state = env.reset();
    loop {
        let qvals = q.forward(&state.encode::<S>())?;
        let mask = env.valid_actions(&state);
        let action = greedy_action(&qvals, &mask).ok_or(Error::EmptyMask)?;
        let step = env.step(&state, action)?;
        if step.terminal {
            let outcome = step.outcome.expect("terminal step is evaluated");
            return Ok((step.state.open_edges(), outcome));
        }
        state = step.state;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestConfiguration<S> {
    pub episode: usize,
    pub open_set: Vec<BranchId>,
    pub acp: S,
}

/// Feasible episode with the lowest curtailed power; the latest one wins ties.
pub fn best_configuration<S: Scalar>(
    records: &[EpisodeRecord<S>],
) -> Result<BestConfiguration<S>, Error> {
    let mut best: Option<&EpisodeRecord<S>> = None;
    for r in records {
        let Some(acp) = r.acp else { continue };
        if best.is_none_or(|b| acp <= b.acp.expect("best is feasible")) {
            best = Some(r);
        }
    }
    let r = best.ok_or(Error::NoFeasibleEpisode)?;
    Ok(BestConfiguration {
        episode: r.episode,
        open_set: r.open_set.clone(),
        acp: r.acp.expect("best is feasible"),
    })
}

/// Trailing mean over at most `window` values ending at each index.
pub fn running_mean<S: Scalar>(values: &[S], window: usize) -> Vec<S> {
    assert!(window > 0);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = S::zero();
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        let n = (i + 1).min(window);
        out.push(sum / S::from_usize(n).expect("window fits the scalar"));
    }
    out
}

/// Trailing mean over the present values in each window; `None` if the window has none.
pub fn running_mean_sparse<S: Scalar>(values: &[Option<S>], window: usize) -> Vec<Option<S>> {
    assert!(window > 0);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let (sum, n) = values[lo..=i]
                .iter()
                .flatten()
                .fold((S::zero(), 0usize), |(s, n), &v| (s + v, n + 1));
            (n > 0).then(|| sum / S::from_usize(n).expect("window fits the scalar"))
        })
        .collect()
}
