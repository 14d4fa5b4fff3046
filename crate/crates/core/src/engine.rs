//! Seeded games, multi-trial batches and cross-policy comparisons.
//!
//! A batch is a pure function of its [`ExperimentSpec`]: trial `i` always
//! uses the random streams of `(seed, i)`, every policy sees the same reward
//! draws for a given trial, and per-round statistics are folded in trial
//! order whether the trials ran serially or on the rayon pool.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bandit::{ArmSet, GameTrace};
use crate::error::{Error, Result};
use crate::greed::GreedSchedule;
use crate::policy::{run_policy_round, Policy, PolicyConfig, PolicyKind};
use crate::rng::TrialStreams;

/// Trials folded per parallel chunk.
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub schedule: GreedSchedule,
    pub arms: ArmSet,
    pub policies: Vec<PolicyConfig>,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn rounds(&self) -> usize {
        self.schedule.horizon()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "need at least one trial"));
        }
        if self.rounds() < self.arms.len() {
            return Err(Error::config(
                "rounds",
                format!(
                    "{} rounds cannot initialize {} arms",
                    self.rounds(),
                    self.arms.len()
                ),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::config("policies", "no policy configured"));
        }
        for policy in &self.policies {
            policy.validate(&self.arms)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

/// Plays one full game of `policy` for trial `trial`.
pub fn run_game(spec: &ExperimentSpec, policy: &PolicyConfig, trial: usize) -> Result<GameTrace> {
    let schedule = &spec.schedule;
    let mut player = Policy::new(policy.clone(), &spec.arms, schedule)?;
    let mut streams = TrialStreams::new(spec.seed, trial as u64);
    let mut trace = GameTrace::with_capacity(schedule.horizon());
    for t in 1..=schedule.horizon() {
        run_policy_round(
            &mut player,
            t,
            schedule,
            &spec.arms,
            &mut streams,
            &mut trace,
        )?;
    }
    Ok(trace)
}

/// Per-round running mean and variance (Welford).
#[derive(Debug, Clone)]
struct RoundStats {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RoundStats {
    fn new(n: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; n],
            m2: vec![0.0; n],
        }
    }

    fn push(&mut self, values: impl Iterator<Item = f64>) {
        self.count += 1;
        let count = self.count as f64;
        for ((mean, m2), x) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let delta = x - *mean;
            *mean += delta / count;
            *m2 += delta * (x - *mean);
        }
    }

    fn stderr(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count as f64;
        self.m2
            .iter()
            .map(|m2| (m2.max(0.0) / (n - 1.0)).sqrt() / n.sqrt())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalSummary {
    pub mean_reward: f64,
    pub reward_stderr: f64,
    pub mean_regret: f64,
    pub regret_stderr: f64,
}

/// Trial-averaged curves of one policy; index `i` holds round `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCurves {
    pub label: String,
    pub kind: PolicyKind,
    pub mean_reward: Vec<f64>,
    pub reward_stderr: Vec<f64>,
    pub mean_regret: Vec<f64>,
    pub regret_stderr: Vec<f64>,
}

impl PolicyCurves {
    pub fn final_summary(&self) -> FinalSummary {
        let last = self.mean_reward.len() - 1;
        FinalSummary {
            mean_reward: self.mean_reward[last],
            reward_stderr: self.reward_stderr[last],
            mean_regret: self.mean_regret[last],
            regret_stderr: self.regret_stderr[last],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub rounds: usize,
    pub trials: usize,
    pub policies: Vec<PolicyCurves>,
}

fn unique_labels(policies: &[PolicyConfig]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::with_capacity(policies.len());
    for policy in policies {
        let base = policy.label();
        let mut label = base.clone();
        let mut n = 2;
        while labels.contains(&label) {
            label = format!("{base}#{n}");
            n += 1;
        }
        labels.push(label);
    }
    labels
}

fn trial_curves(
    spec: &ExperimentSpec,
    policy: &PolicyConfig,
    trial: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let trace = run_game(spec, policy, trial)?;
    Ok(trace
        .rows()
        .iter()
        .map(|r| (r.cum_reward, r.cum_regret))
        .unzip())
}

pub fn run_batch(spec: &ExperimentSpec, execution: Execution) -> Result<BatchResult> {
    spec.validate()?;
    let n = spec.rounds();
    let labels = unique_labels(&spec.policies);
    let mut policies = Vec::with_capacity(spec.policies.len());
    for (policy, label) in spec.policies.iter().zip(labels) {
        let mut reward = RoundStats::new(n);
        let mut regret = RoundStats::new(n);
        let trials: Vec<usize> = (0..spec.trials).collect();
        for chunk in trials.chunks(CHUNK) {
            let curves: Vec<(Vec<f64>, Vec<f64>)> = match execution {
                Execution::Serial => chunk
                    .iter()
                    .map(|&trial| trial_curves(spec, policy, trial))
                    .collect::<Result<_>>()?,
                Execution::Parallel => chunk
                    .par_iter()
                    .map(|&trial| trial_curves(spec, policy, trial))
                    .collect::<Result<_>>()?,
            };
            for (cum_reward, cum_regret) in curves {
                reward.push(cum_reward.into_iter());
                regret.push(cum_regret.into_iter());
            }
        }
        policies.push(PolicyCurves {
            label,
            kind: policy.kind,
            reward_stderr: reward.stderr(),
            mean_reward: reward.mean,
            regret_stderr: regret.stderr(),
            mean_regret: regret.mean,
        });
    }
    Ok(BatchResult {
        rounds: n,
        trials: spec.trials,
        policies,
    })
}

impl BatchResult {
    pub fn policy(&self, label: &str) -> Option<&PolicyCurves> {
        self.policies.iter().find(|p| p.label == label)
    }

    /// Long format `round,policy,metric,value` for the policies `keep` selects.
    pub fn write_curves_csv<W: Write>(
        &self,
        writer: W,
        keep: impl Fn(&PolicyCurves) -> bool,
    ) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["round", "policy", "metric", "value"])?;
        let selected: Vec<&PolicyCurves> = self.policies.iter().filter(|p| keep(p)).collect();
        for i in 0..self.rounds {
            let round = (i + 1).to_string();
            for p in &selected {
                for (metric, series) in [
                    ("mean_reward", &p.mean_reward),
                    ("reward_stderr", &p.reward_stderr),
                    ("mean_regret", &p.mean_regret),
                    ("regret_stderr", &p.regret_stderr),
                ] {
                    out.write_record([round.as_str(), &p.label, metric, &series[i].to_string()])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Final-round summary, one row per policy, ranked by mean reward.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let comparison = compare(self);
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "rank",
            "policy",
            "kind",
            "final_mean_reward",
            "reward_stderr",
            "final_mean_regret",
            "regret_stderr",
        ])?;
        for row in &comparison.ranking {
            out.write_record([
                row.rank.to_string(),
                row.label.clone(),
                row.kind.to_string(),
                row.summary.mean_reward.to_string(),
                row.summary.reward_stderr.to_string(),
                row.summary.mean_regret.to_string(),
                row.summary.regret_stderr.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPolicy {
    pub rank: usize,
    pub label: String,
    pub kind: PolicyKind,
    pub summary: FinalSummary,
}

/// Two-sample z test on final mean cumulative scaled reward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseTest {
    pub first: String,
    pub second: String,
    /// `first − second`.
    pub difference: f64,
    pub stderr: f64,
    pub z: f64,
    /// Two-sided.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub ranking: Vec<RankedPolicy>,
    pub pairwise: Vec<PairwiseTest>,
}

impl Comparison {
    pub fn pair(&self, first: &str, second: &str) -> Option<&PairwiseTest> {
        self.pairwise
            .iter()
            .find(|p| p.first == first && p.second == second)
    }
}

pub fn z_test(first: FinalSummary, second: FinalSummary) -> (f64, f64, f64, f64) {
    let difference = first.mean_reward - second.mean_reward;
    let stderr = first.reward_stderr.hypot(second.reward_stderr);
    let z = if stderr > 0.0 {
        difference / stderr
    } else if difference == 0.0 {
        0.0
    } else {
        difference.signum() * f64::INFINITY
    };
    let normal = Normal::standard();
    let p_value = 2.0 * normal.sf(z.abs());
    (difference, stderr, z, p_value)
}

pub fn compare(batch: &BatchResult) -> Comparison {
    let mut ranking: Vec<RankedPolicy> = batch
        .policies
        .iter()
        .map(|p| RankedPolicy {
            rank: 0,
            label: p.label.clone(),
            kind: p.kind,
            summary: p.final_summary(),
        })
        .collect();
    // stable: equal rewards keep configuration order
    ranking.sort_by(|a, b| b.summary.mean_reward.total_cmp(&a.summary.mean_reward));
    for (i, row) in ranking.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    let mut pairwise = Vec::new();
    for (i, a) in batch.policies.iter().enumerate() {
        for b in &batch.policies[i + 1..] {
            let (difference, stderr, z, p_value) = z_test(a.final_summary(), b.final_summary());
            pairwise.push(PairwiseTest {
                first: a.label.clone(),
                second: b.label.clone(),
                difference,
                stderr,
                z,
                p_value,
            });
        }
    }
    Comparison { ranking, pairwise }
}

/// Runs the batch and compares its policies. Needs at least two.
pub fn compare_policies(
    spec: &ExperimentSpec,
    execution: Execution,
) -> Result<(BatchResult, Comparison)> {
    if spec.policies.len() < 2 {
        return Err(Error::config(
            "policies",
            "comparison needs at least two policies",
        ));
    }
    let batch = run_batch(spec, execution)?;
    let comparison = compare(&batch);
    Ok((batch, comparison))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{ArmModel, RewardDist};

    fn spec(policies: Vec<PolicyConfig>, trials: usize) -> ExperimentSpec {
        ExperimentSpec {
            schedule: GreedSchedule::wave(300).unwrap(),
            arms: ArmSet::paper(5, RewardDist::Normal, false).unwrap(),
            policies,
            trials,
            seed: 11,
        }
    }

    #[test]
    fn single_trial_curves_equal_the_trace() {
        let s = spec(vec![PolicyConfig::new(PolicyKind::UcbSoft)], 1);
        let batch = run_batch(&s, Execution::Serial).unwrap();
        let trace = run_game(&s, &s.policies[0], 0).unwrap();
        let curves = &batch.policies[0];
        for (i, row) in trace.rows().iter().enumerate() {
            assert_eq!(curves.mean_reward[i], row.cum_reward);
            assert_eq!(curves.mean_regret[i], row.cum_regret);
            assert_eq!(curves.regret_stderr[i], 0.0);
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let s = spec(
            vec![
                PolicyConfig::new(PolicyKind::EpsThreshold)
                    .with_k(30.0)
                    .with_threshold(21.0),
                PolicyConfig::new(PolicyKind::UcbSmart),
            ],
            150,
        );
        assert_eq!(
            run_batch(&s, Execution::Serial).unwrap(),
            run_batch(&s, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn mean_curve_matches_per_trial_average() {
        let s = spec(vec![PolicyConfig::new(PolicyKind::UcbSmart)], 7);
        let batch = run_batch(&s, Execution::Parallel).unwrap();
        let finals: Vec<f64> = (0..7)
            .map(|trial| run_game(&s, &s.policies[0], trial).unwrap().final_regret())
            .collect();
        let mean = finals.iter().sum::<f64>() / 7.0;
        let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 6.0;
        let summary = batch.policies[0].final_summary();
        approx::assert_relative_eq!(summary.mean_regret, mean, max_relative = 1e-12);
        approx::assert_relative_eq!(
            summary.regret_stderr,
            (var / 7.0).sqrt(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn identical_policies_do_not_differ() {
        let p = PolicyConfig::new(PolicyKind::UcbSmart);
        let s = spec(vec![p.clone(), p], 20);
        let (batch, cmp) = compare_policies(&s, Execution::Parallel).unwrap();
        assert_eq!(batch.policies[1].label, "ucb-smart#2");
        let pair = cmp.pair("ucb-smart", "ucb-smart#2").unwrap();
        assert_eq!(pair.difference, 0.0);
        assert_eq!(pair.z, 0.0);
        assert!((pair.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_ranks_first() {
        let s = spec(
            vec![
                PolicyConfig::new(PolicyKind::UcbSoft),
                PolicyConfig::new(PolicyKind::Oracle),
                PolicyConfig::new(PolicyKind::UcbSmart),
            ],
            30,
        );
        let (batch, cmp) = compare_policies(&s, Execution::Parallel).unwrap();
        assert_eq!(cmp.ranking[0].label, "oracle");
        assert_eq!(
            batch.policy("oracle").unwrap().final_summary().mean_regret,
            0.0
        );
    }

    #[test]
    fn comparison_needs_two_policies() {
        let s = spec(vec![PolicyConfig::new(PolicyKind::UcbSoft)], 2);
        assert!(compare_policies(&s, Execution::Serial).is_err());
    }

    #[test]
    fn separable_arms_settle_on_the_best() {
        let arms = ArmSet::new(vec![
            ArmModel::bernoulli(1.0).unwrap(),
            ArmModel::bernoulli(0.0).unwrap(),
        ])
        .unwrap();
        let s = ExperimentSpec {
            schedule: GreedSchedule::constant(2000, 1.0).unwrap(),
            arms,
            policies: vec![
                PolicyConfig::new(PolicyKind::UcbThreshold).with_threshold(0.5),
                PolicyConfig::new(PolicyKind::EpsThreshold)
                    .with_k(11.0)
                    .with_threshold(0.5),
            ],
            trials: 1,
            seed: 3,
        };
        for policy in &s.policies {
            let trace = run_game(&s, policy, 0).unwrap();
            // initialization costs one play of the bad arm, then pure exploitation
            assert_eq!(trace.final_regret(), 1.0);
        }
    }

    #[test]
    fn invalid_spec_is_a_config_error() {
        let mut s = spec(vec![PolicyConfig::new(PolicyKind::EpsSoft).with_k(3.0)], 1);
        assert!(matches!(
            run_batch(&s, Execution::Serial),
            Err(Error::Config { .. })
        ));
        s.policies = vec![PolicyConfig::new(PolicyKind::UcbSoft)];
        s.trials = 0;
        assert!(matches!(
            run_batch(&s, Execution::Serial),
            Err(Error::Config { .. })
        ));
    }
}
