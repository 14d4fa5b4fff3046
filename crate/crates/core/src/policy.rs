//! Arm-selection policies.
//!
//! Every policy plays each arm once during rounds `1..=m`, then picks arms
//! from its unscaled mean estimates. The threshold and soft variants use the
//! multiplier `G(t)` to decide how greedy to be; the smart baselines ignore it
//! apart from learning from discounted (unscaled) rewards.
//!
//! Ties between equal indices always resolve to the lowest arm.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{argmax_lowest, ArmSet, EstimatorState, GameTrace};
use crate::error::{Error, Result};
use crate::greed::{psi_with_min, warn_if_below_one, GreedSchedule};
use crate::rng::{Purpose, TrialStreams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    EpsThreshold,
    EpsSoft,
    UcbThreshold,
    UcbSoft,
    EpsSmart,
    UcbSmart,
    /// Always plays the best arm. A reference point for comparisons.
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::EpsThreshold,
        PolicyKind::EpsSoft,
        PolicyKind::UcbThreshold,
        PolicyKind::UcbSoft,
        PolicyKind::EpsSmart,
        PolicyKind::UcbSmart,
        PolicyKind::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::EpsThreshold => "eps-threshold",
            PolicyKind::EpsSoft => "eps-soft",
            PolicyKind::UcbThreshold => "ucb-threshold",
            PolicyKind::UcbSoft => "ucb-soft",
            PolicyKind::EpsSmart => "eps-smart",
            PolicyKind::UcbSmart => "ucb-smart",
            PolicyKind::Oracle => "oracle",
        }
    }

    pub fn uses_threshold(self) -> bool {
        matches!(self, PolicyKind::EpsThreshold | PolicyKind::UcbThreshold)
    }

    pub fn is_epsilon_family(self) -> bool {
        matches!(
            self,
            PolicyKind::EpsThreshold | PolicyKind::EpsSoft | PolicyKind::EpsSmart
        )
    }

    pub fn is_ucb_family(self) -> bool {
        matches!(
            self,
            PolicyKind::UcbThreshold | PolicyKind::UcbSoft | PolicyKind::UcbSmart
        )
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("policy", format!("unknown policy kind `{s}`")))
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(kind: PolicyKind) -> Self {
        kind.as_str().to_owned()
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of one policy.
///
/// * `threshold` (`z`) for the threshold kinds,
/// * `k` for eps-threshold and eps-soft,
/// * `c` (used as the exploration constant) and `d` for eps-smart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            label: None,
            threshold: None,
            k: None,
            c: None,
            d: None,
        }
    }

    pub fn with_threshold(mut self, z: f64) -> Self {
        self.threshold = Some(z);
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_smart_constants(mut self, c: f64, d: f64) -> Self {
        self.c = Some(c);
        self.d = Some(d);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.kind.as_str().to_owned())
    }

    /// Checks the constants each kind needs against the arm gaps.
    pub fn validate(&self, arms: &ArmSet) -> Result<()> {
        let min_gap = arms.min_gap();
        match self.kind {
            PolicyKind::EpsThreshold | PolicyKind::EpsSoft => {
                let k = self
                    .k
                    .ok_or_else(|| Error::config("k", "required for this policy"))?;
                check_exploration_constant(k, min_gap)?;
            }
            PolicyKind::EpsSmart => {
                let c = self
                    .c
                    .ok_or_else(|| Error::config("c", "required for eps-smart"))?;
                let d = self
                    .d
                    .ok_or_else(|| Error::config("d", "required for eps-smart"))?;
                if !(d > 0.0 && d < 1.0) || min_gap.is_some_and(|g| d >= g) {
                    return Err(Error::config(
                        "d",
                        format!(
                            "requires d < min_j Δ_j and 0 < d < 1 (got d = {d}, min Δ = {})",
                            fmt_gap(min_gap)
                        ),
                    ));
                }
                if !(c > 10.0 && c > 4.0 / (d * d)) {
                    return Err(Error::config(
                        "c",
                        format!("requires c > 10 and c > 4/d² (got c = {c}, d = {d})"),
                    ));
                }
            }
            PolicyKind::UcbSoft | PolicyKind::UcbSmart | PolicyKind::Oracle => {}
            PolicyKind::UcbThreshold => {}
        }
        if self.kind.uses_threshold() {
            match self.threshold {
                Some(z) if z.is_finite() && z > 0.0 => {}
                Some(z) => {
                    return Err(Error::config(
                        "threshold",
                        format!("must be finite and > 0 (got {z})"),
                    ))
                }
                None => {
                    return Err(Error::config(
                        "threshold",
                        "required for threshold policies",
                    ))
                }
            }
        }
        Ok(())
    }

    /// Exploration constant driving `ε_t` for the ε-greedy kinds.
    fn exploration_constant(&self) -> f64 {
        match self.kind {
            PolicyKind::EpsSmart => self.c.expect("validated"),
            _ => self.k.expect("validated"),
        }
    }
}

/// Validates `k > 10` and `k > 4 / min_j Δ_j`.
pub fn check_exploration_constant(k: f64, min_gap: Option<f64>) -> Result<()> {
    let ok = k > 10.0 && min_gap.is_none_or(|g| k > 4.0 / g);
    if ok {
        Ok(())
    } else {
        Err(Error::config(
            "k",
            format!(
                "requires a constant k>10, such that k > 4/min_j Δ_j (got k = {k}, min Δ = {})",
                fmt_gap(min_gap)
            ),
        ))
    }
}

fn fmt_gap(gap: Option<f64>) -> String {
    gap.map_or_else(|| "none".to_owned(), |g| g.to_string())
}

/// Smallest valid exploration constant rounded up: `max(10, 4 / min Δ) + 1`.
pub fn default_k(arms: &ArmSet) -> f64 {
    let floor = arms.min_gap().map_or(10.0, |g| (4.0 / g).max(10.0));
    floor.floor() + 1.0
}

/// Default eps-smart constants: `d = 0.9 · min(min Δ, 1)` and the smallest
/// integer `c ≥ k` with `c > 10` and `c > 4 / d²`.
pub fn default_smart_constants(arms: &ArmSet, k: f64) -> (f64, f64) {
    let d = 0.9 * arms.min_gap().unwrap_or(1.0).min(1.0);
    let c = k.max((4.0 / (d * d)).max(10.0).floor() + 1.0);
    (c, d)
}

/// Estimator plus the counters the policies keep between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub estimator: EstimatorState,
    /// `t̃`: rounds so far (initialization included) with `G(t) < z`.
    /// Only eps-threshold advances it.
    pub below_threshold: u64,
    /// Last round selected for.
    pub round: usize,
}

impl PolicyState {
    pub fn new(m: usize) -> Self {
        Self {
            estimator: EstimatorState::new(m),
            below_threshold: 0,
            round: 0,
        }
    }

    fn arms(&self) -> usize {
        self.estimator.arms()
    }
}

/// `X̂_j + sqrt(2 · log_term / T_j)`.
pub fn ucb_index(estimator: &EstimatorState, arm: usize, log_term: f64) -> f64 {
    let mean = estimator
        .estimate(arm)
        .expect("arm played during initialization");
    mean + confidence_radius(log_term, estimator.count(arm))
}

pub fn confidence_radius(log_term: f64, plays: u64) -> f64 {
    (2.0 * log_term / plays as f64).sqrt()
}

fn ucb_argmax(estimator: &EstimatorState, log_term: f64) -> usize {
    argmax_lowest((0..estimator.arms()).map(|j| ucb_index(estimator, j, log_term)))
}

fn epsilon_greedy(
    state: &PolicyState,
    t: usize,
    epsilon: f64,
    streams: &mut TrialStreams,
) -> usize {
    let explore = epsilon >= 1.0
        || (epsilon > 0.0 && streams.at(Purpose::ExplorationCoins, t).random::<f64>() < epsilon);
    if explore {
        streams
            .at(Purpose::UniformArmPicks, t)
            .random_range(0..state.arms())
    } else {
        state.estimator.greedy_arm()
    }
}

/// ε-greedy with a hard threshold: below `z` explore with
/// `ε_t = min{1, k m / t̃}`; at or above `z` play the greedy arm.
pub fn select_eps_threshold(
    state: &mut PolicyState,
    t: usize,
    schedule: &GreedSchedule,
    k: f64,
    z: f64,
    streams: &mut TrialStreams,
) -> usize {
    if schedule.at(t) < z {
        state.below_threshold += 1;
        let m = state.arms() as f64;
        let epsilon = (k * m / state.below_threshold as f64).min(1.0);
        epsilon_greedy(state, t, epsilon, streams)
    } else {
        state.estimator.greedy_arm()
    }
}

/// Soft ε-greedy: `ε_t = min{ψ(t), k m / t}`. `min_multiplier` is the
/// smallest `G(s)` over the post-initialization rounds.
pub fn select_eps_soft(
    state: &PolicyState,
    t: usize,
    schedule: &GreedSchedule,
    k: f64,
    min_multiplier: f64,
    streams: &mut TrialStreams,
) -> usize {
    let m = state.arms() as f64;
    let psi = psi_with_min(schedule.at(t), min_multiplier);
    let epsilon = psi.min(k * m / t as f64);
    epsilon_greedy(state, t, epsilon, streams)
}

/// UCB1 below `z`, greedy at or above it.
pub fn select_ucb_threshold(
    state: &PolicyState,
    t: usize,
    schedule: &GreedSchedule,
    z: f64,
) -> usize {
    if schedule.at(t) < z {
        ucb_argmax(&state.estimator, (t as f64).ln())
    } else {
        state.estimator.greedy_arm()
    }
}

/// UCB with `log ξ(t) = log(1 + t / G(t))` in place of `log t`.
pub fn select_ucb_soft(state: &PolicyState, t: usize, schedule: &GreedSchedule) -> usize {
    let log_xi = (t as f64 / schedule.at(t)).ln_1p();
    ucb_argmax(&state.estimator, log_xi)
}

/// Classic ε-greedy on discounted rewards, `ε_t = min{1, c m / t}`.
pub fn select_eps_smart(
    state: &PolicyState,
    t: usize,
    c: f64,
    streams: &mut TrialStreams,
) -> usize {
    let m = state.arms() as f64;
    let epsilon = (c * m / t as f64).min(1.0);
    epsilon_greedy(state, t, epsilon, streams)
}

/// Classic UCB1 on discounted rewards.
pub fn select_ucb_smart(state: &PolicyState, t: usize) -> usize {
    ucb_argmax(&state.estimator, (t as f64).ln())
}

/// A configured policy bound to one game.
#[derive(Debug, Clone)]
pub struct Policy {
    config: PolicyConfig,
    state: PolicyState,
    best_arm: usize,
    min_multiplier: f64,
}

impl Policy {
    pub fn new(config: PolicyConfig, arms: &ArmSet, schedule: &GreedSchedule) -> Result<Self> {
        config.validate(arms)?;
        let m = arms.len();
        let min_multiplier = schedule.min_from(m + 1).unwrap_or(1.0);
        if config.kind == PolicyKind::EpsSoft {
            warn_if_below_one(min_multiplier);
        }
        Ok(Self {
            config,
            state: PolicyState::new(m),
            best_arm: arms.best_index(),
            min_multiplier,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    /// Chooses the arm for round `t`. Rounds `1..=m` play arm `t - 1`.
    pub fn select(
        &mut self,
        t: usize,
        schedule: &GreedSchedule,
        streams: &mut TrialStreams,
    ) -> usize {
        self.state.round = t;
        let m = self.state.arms();
        let kind = self.config.kind;
        if kind == PolicyKind::Oracle {
            return self.best_arm;
        }
        if t <= m {
            if kind == PolicyKind::EpsThreshold && schedule.at(t) < self.threshold() {
                self.state.below_threshold += 1;
            }
            return t - 1;
        }
        match kind {
            PolicyKind::EpsThreshold => {
                let (k, z) = (self.config.exploration_constant(), self.threshold());
                select_eps_threshold(&mut self.state, t, schedule, k, z, streams)
            }
            PolicyKind::EpsSoft => select_eps_soft(
                &self.state,
                t,
                schedule,
                self.config.exploration_constant(),
                self.min_multiplier,
                streams,
            ),
            PolicyKind::UcbThreshold => {
                select_ucb_threshold(&self.state, t, schedule, self.threshold())
            }
            PolicyKind::UcbSoft => select_ucb_soft(&self.state, t, schedule),
            PolicyKind::EpsSmart => {
                select_eps_smart(&self.state, t, self.config.exploration_constant(), streams)
            }
            PolicyKind::UcbSmart => select_ucb_smart(&self.state, t),
            PolicyKind::Oracle => unreachable!("handled above"),
        }
    }

    /// Feeds back the unscaled draw. Receiving `G(t) · X` and dividing by
    /// the known `G(t)` yields the same value; passing `X` avoids the
    /// round trip through floating point.
    pub fn observe(&mut self, arm: usize, unscaled: f64) {
        self.state.estimator.update(arm, unscaled);
    }

    fn threshold(&self) -> f64 {
        self.config.threshold.expect("validated")
    }
}

/// Plays round `t`: select, draw, record, update. Returns the chosen arm.
pub fn run_policy_round(
    policy: &mut Policy,
    t: usize,
    schedule: &GreedSchedule,
    arms: &ArmSet,
    streams: &mut TrialStreams,
    trace: &mut GameTrace,
) -> Result<usize> {
    let arm = policy.select(t, schedule, streams);
    let x = arms
        .arm(arm)
        .draw_unscaled(streams.at(Purpose::RewardDraws, t));
    trace.record_round(t, arm, x, schedule, arms)?;
    policy.observe(arm, x);
    Ok(arm)
}
