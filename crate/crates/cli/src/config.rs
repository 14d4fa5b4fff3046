//! Run configuration: a TOML file whose keys mirror the experiment fields,
//! overridden by command-line flags, resolved into an [`ExperimentSpec`].

use std::fs;
use std::path::Path;

use greed_core::bandit::{ArmModel, ArmSet, RewardDist, PAPER_SIGMA};
use greed_core::policy::{default_k, default_smart_constants};
use greed_core::{ExperimentSpec, GreedSchedule, PolicyConfig, PolicyKind, ScheduleSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const DEFAULT_ROUNDS: usize = 2000;
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 1;
pub const DESK_ARMS: usize = 50;
pub const FULL_ARMS: usize = 500;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Threshold applied to every threshold policy that sets none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Exploration constant for every eps-threshold / eps-soft policy that sets none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default)]
    pub arms: ArmsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<PolicyConfig>>,
    /// Written into manifests; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<ToolInfo>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<RewardDist>,
    /// Explicit means; when absent the standard spread for `count` arms is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Clamp Bernoulli success probabilities into [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
    pub manifest_sha256: String,
}

/// Flag values; each one that is set wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub arms: Option<usize>,
    pub rounds: Option<usize>,
    pub policies: Option<Vec<String>>,
    pub greed: Option<String>,
    pub dist: Option<String>,
    pub threshold: Option<f64>,
    pub k: Option<f64>,
    pub full: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().trim().to_owned();
            let key = message
                .split('`')
                .nth(1)
                .filter(|_| message.starts_with("unknown field"))
                .unwrap_or("config")
                .to_owned();
            CliError::config(key, message)
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if o.full {
            self.arms.count = Some(FULL_ARMS);
            self.rounds = Some(DEFAULT_ROUNDS);
        }
        if let Some(seed) = o.seed {
            self.seed = Some(seed);
        }
        if let Some(trials) = o.trials {
            self.trials = Some(trials);
        }
        if let Some(m) = o.arms {
            self.arms.count = Some(m);
        }
        if let Some(n) = o.rounds {
            self.rounds = Some(n);
        }
        if let Some(greed) = &o.greed {
            let spec = greed
                .parse()
                .map_err(|e: greed_core::Error| CliError::config("schedule", e.to_string()))?;
            self.schedule = Some(spec);
        }
        if let Some(dist) = &o.dist {
            self.arms.dist = Some(dist.parse()?);
        }
        if let Some(kinds) = &o.policies {
            self.policies = Some(parse_kinds(kinds)?);
        }
        if let Some(z) = o.threshold {
            self.threshold = Some(z);
            for p in self.policies.iter_mut().flatten() {
                p.threshold = None;
            }
        }
        if let Some(k) = o.k {
            self.k = Some(k);
            for p in self.policies.iter_mut().flatten() {
                p.k = None;
            }
        }
        Ok(())
    }

    pub fn build_arms(&self) -> Result<ArmSet> {
        let dist = self.arms.dist.unwrap_or(RewardDist::Normal);
        let clamp = self.arms.clamp.unwrap_or(false);
        let sigma = self.arms.sigma.unwrap_or(PAPER_SIGMA);
        let arms = match &self.arms.means {
            Some(means) => {
                if let Some(count) = self.arms.count.filter(|&c| c != means.len()) {
                    return Err(CliError::config(
                        "arms.count",
                        format!("{count} arms but {} means given", means.len()),
                    ));
                }
                let models = means
                    .iter()
                    .map(|&mu| match dist {
                        RewardDist::Normal => ArmModel::normal(mu, sigma),
                        RewardDist::Bernoulli if clamp => ArmModel::bernoulli(mu.clamp(0.0, 1.0)),
                        RewardDist::Bernoulli => ArmModel::bernoulli(mu),
                    })
                    .collect::<greed_core::Result<Vec<_>>>()?;
                let set = ArmSet::new(models)?;
                set.log_diagnostics();
                set
            }
            None => {
                let m = self.arms.count.unwrap_or(DESK_ARMS);
                if dist == RewardDist::Normal && sigma != PAPER_SIGMA {
                    let models = (1..=m)
                        .map(|j| ArmModel::normal(greed_core::bandit::paper_mean(m, j), sigma))
                        .collect::<greed_core::Result<Vec<_>>>()?;
                    ArmSet::new(models)?
                } else {
                    ArmSet::paper(m, dist, clamp)?
                }
            }
        };
        Ok(arms)
    }

    /// Fills every default and builds the experiment. The returned config
    /// is fully explicit, so writing it out and reading it back reproduces
    /// the same experiment.
    pub fn resolve(&self) -> Result<(RunConfig, ExperimentSpec)> {
        let schedule_spec = self.schedule.clone().unwrap_or(ScheduleSpec::Christmas);
        let rounds = self.rounds.unwrap_or(DEFAULT_ROUNDS);
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let arms = self.build_arms()?;
        let schedule = schedule_spec.materialize(rounds)?;

        let mut resolved = self.clone();
        resolved.tool = None;
        resolved.schedule = Some(schedule_spec.clone());
        resolved.rounds = Some(rounds);
        resolved.trials = Some(trials);
        resolved.seed = Some(seed);
        resolved.arms.dist = Some(self.arms.dist.unwrap_or(RewardDist::Normal));
        if self.arms.means.is_none() {
            resolved.arms.count = Some(arms.len());
        }
        if resolved.arms.dist == Some(RewardDist::Normal) {
            resolved.arms.sigma = Some(self.arms.sigma.unwrap_or(PAPER_SIGMA));
        } else {
            resolved.arms.clamp = Some(self.arms.clamp.unwrap_or(false));
        }

        let policies = match &self.policies {
            Some(p) => p.clone(),
            None => PolicyKind::ALL
                .into_iter()
                .filter(|k| *k != PolicyKind::Oracle)
                .map(PolicyConfig::new)
                .collect(),
        };
        let threshold = self
            .threshold
            .unwrap_or_else(|| default_threshold(&schedule_spec, &schedule, arms.len()));
        let k = self.k.unwrap_or_else(|| default_k(&arms));
        let policies: Vec<PolicyConfig> = policies
            .into_iter()
            .map(|p| fill_policy(p, threshold, k, &arms))
            .collect();
        resolved.policies = Some(policies.clone());
        resolved.threshold = None;
        resolved.k = None;

        let spec = ExperimentSpec {
            schedule,
            arms,
            policies,
            trials,
            seed,
        };
        spec.validate()?;
        Ok((resolved, spec))
    }
}

fn parse_kinds(kinds: &[String]) -> Result<Vec<PolicyConfig>> {
    kinds
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.parse::<PolicyKind>().map(PolicyConfig::new).map_err(|_| {
                CliError::config("policy", format!("unknown policy kind `{}`", s.trim()))
            })
        })
        .collect()
}

/// Thresholds for the built-in schedules sit between their low and high
/// levels; other schedules use the midpoint of their post-initialization range.
pub fn default_threshold(spec: &ScheduleSpec, schedule: &GreedSchedule, m: usize) -> f64 {
    match spec {
        ScheduleSpec::Wave => 21.0,
        ScheduleSpec::Christmas => 500.0,
        ScheduleSpec::Step => 300.0,
        _ => {
            let from = (m + 1).min(schedule.horizon());
            let lo = schedule.min_from(from).unwrap_or(1.0);
            let hi = schedule.max_from(from).unwrap_or(1.0);
            0.5 * (lo + hi)
        }
    }
}

fn fill_policy(mut p: PolicyConfig, threshold: f64, k: f64, arms: &ArmSet) -> PolicyConfig {
    let kind = p.kind;
    if kind.uses_threshold() {
        p.threshold.get_or_insert(threshold);
    }
    if matches!(kind, PolicyKind::EpsThreshold | PolicyKind::EpsSoft) {
        p.k.get_or_insert(k);
    }
    if kind == PolicyKind::EpsSmart {
        let (c, d) = default_smart_constants(arms, k);
        p.c.get_or_insert(c);
        p.d.get_or_insert(d);
    }
    p
}

/// Manifest text and its hash. The hash covers the resolved configuration,
/// the tool version and the materialized multiplier values, so a CSV-backed
/// schedule changes the hash when the file contents change.
pub fn manifest(
    resolved: &RunConfig,
    schedule: Option<&GreedSchedule>,
) -> Result<(String, String)> {
    let mut body_config = resolved.clone();
    body_config.tool = None;
    let body =
        toml::to_string(&body_config).map_err(|e| CliError::config("config", e.to_string()))?;
    let version = env!("CARGO_PKG_VERSION");
    let mut hasher = Sha256::new();
    hasher.update(body.as_bytes());
    hasher.update(version.as_bytes());
    if let Some(schedule) = schedule {
        for v in schedule.values() {
            hasher.update(v.to_le_bytes());
        }
    }
    let hash = hex::encode(hasher.finalize());
    let mut with_tool = body_config;
    with_tool.tool = Some(ToolInfo {
        name: env!("CARGO_PKG_NAME").to_owned(),
        version: version.to_owned(),
        manifest_sha256: hash.clone(),
    });
    let text =
        toml::to_string(&with_tool).map_err(|e| CliError::config("config", e.to_string()))?;
    Ok((text, hash))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_config_round_trips() {
        let mut config =
            RunConfig::parse("schedule = \"wave\"\nrounds = 100\n[arms]\ncount = 4\n").unwrap();
        config.apply(&Overrides::default()).unwrap();
        let (resolved, spec) = config.resolve().unwrap();
        let (text, hash) = manifest(&resolved, Some(&spec.schedule)).unwrap();
        let again = RunConfig::parse(&text).unwrap();
        let (resolved2, spec2) = again.resolve().unwrap();
        assert_eq!(resolved, resolved2);
        assert_eq!(spec, spec2);
        assert_eq!(hash, manifest(&resolved2, Some(&spec2.schedule)).unwrap().1);
    }

    #[test]
    fn flags_win_over_file() {
        let mut config = RunConfig::parse("trials = 3\nthreshold = 7.0\n").unwrap();
        config
            .apply(&Overrides {
                trials: Some(9),
                threshold: Some(30.0),
                policies: Some(vec!["ucb-threshold".into()]),
                ..Overrides::default()
            })
            .unwrap();
        let (resolved, _) = config.resolve().unwrap();
        assert_eq!(resolved.trials, Some(9));
        assert_eq!(resolved.policies.unwrap()[0].threshold, Some(30.0));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("trails = 3\n").unwrap_err();
        assert!(
            matches!(&err, CliError::Config { key, .. } if key == "trails"),
            "{err}"
        );
    }

    #[test]
    fn defaults_for_paper_arms() {
        let (resolved, spec) = RunConfig::default().resolve().unwrap();
        assert_eq!(spec.arms.len(), DESK_ARMS);
        assert_eq!(spec.rounds(), DEFAULT_ROUNDS);
        let policies = resolved.policies.unwrap();
        assert_eq!(policies.len(), 6);
        assert_eq!(policies[0].threshold, Some(500.0));
        let k = policies[0].k.unwrap();
        assert!(k > 4.0 / spec.arms.min_gap().unwrap() && k.fract() == 0.0);
    }
}
