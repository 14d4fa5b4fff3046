//! Arm reward models, the unscaled-mean estimator and the regret ledger.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greed::GreedSchedule;

/// Common standard deviation of the normally distributed reference arms.
pub const PAPER_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArmKind {
    Normal {
        mean: f64,
        sd: f64,
    },
    Bernoulli {
        p: f64,
    },
    /// Draws uniformly from a fixed table of empirical values.
    Table {
        values: Vec<f64>,
    },
}

/// Which family of reward distributions to build arms from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardDist {
    Normal,
    Bernoulli,
}

impl FromStr for RewardDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(RewardDist::Normal),
            "bernoulli" => Ok(RewardDist::Bernoulli),
            other => Err(Error::config(
                "dist",
                format!("unknown distribution `{other}` (expected normal or bernoulli)"),
            )),
        }
    }
}

impl fmt::Display for RewardDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardDist::Normal => "normal",
            RewardDist::Bernoulli => "bernoulli",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    kind: ArmKind,
    true_mean: f64,
}

impl ArmModel {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd.is_finite() && sd >= 0.0) {
            return Err(Error::InvalidArms(format!("normal({mean}, {sd})")));
        }
        Ok(Self {
            kind: ArmKind::Normal { mean, sd },
            true_mean: mean,
        })
    }

    /// A Bernoulli arm. Success probabilities outside `[0, 1]` are accepted
    /// and reported by [`ArmSet::diagnostics`]; draws then saturate at 0 or 1
    /// while the stated mean stays `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::InvalidArms(format!("bernoulli({p})")));
        }
        Ok(Self {
            kind: ArmKind::Bernoulli { p },
            true_mean: p,
        })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArms("table arms need finite values".into()));
        }
        let true_mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self {
            kind: ArmKind::Table { values },
            true_mean,
        })
    }

    pub fn kind(&self) -> &ArmKind {
        &self.kind
    }

    pub fn true_mean(&self) -> f64 {
        self.true_mean
    }

    /// One unscaled reward `X_j(t)`. The law never depends on the round.
    pub fn draw_unscaled<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            ArmKind::Normal { mean, sd } => {
                if *sd == 0.0 {
                    *mean
                } else {
                    Normal::new(*mean, *sd).expect("validated").sample(rng)
                }
            }
            ArmKind::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmKind::Table { values } => values[rng.random_range(0..values.len())],
        }
    }
}

/// The `m` arms of a game with their gaps `Δ_j = μ_* − μ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ArmModel>", into = "Vec<ArmModel>")]
pub struct ArmSet {
    arms: Vec<ArmModel>,
    best: usize,
    gaps: Vec<f64>,
}

impl ArmSet {
    pub fn new(arms: Vec<ArmModel>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::InvalidArms(format!(
                "need at least 2 arms, got {}",
                arms.len()
            )));
        }
        let best = argmax_lowest(arms.iter().map(ArmModel::true_mean));
        let best_mean = arms[best].true_mean;
        let gaps = arms.iter().map(|a| best_mean - a.true_mean).collect();
        Ok(Self { arms, best, gaps })
    }

    /// The reference arm set: `μ_j = 0.1 + (200 + 1.5 (m − j + 1)) / (1.5 m)`
    /// for `j = 1..=m`. Normal arms share `σ = 0.05`; Bernoulli arms use the
    /// same value as their success probability, clamped to `[0, 1]` only
    /// when `clamp` is set.
    pub fn paper(m: usize, dist: RewardDist, clamp: bool) -> Result<Self> {
        let arms = (1..=m)
            .map(|j| {
                let mu = paper_mean(m, j);
                match dist {
                    RewardDist::Normal => ArmModel::normal(mu, PAPER_SIGMA),
                    RewardDist::Bernoulli if clamp => ArmModel::bernoulli(mu.clamp(0.0, 1.0)),
                    RewardDist::Bernoulli => ArmModel::bernoulli(mu),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let set = Self::new(arms)?;
        set.log_diagnostics();
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn arm(&self, j: usize) -> &ArmModel {
        &self.arms[j]
    }

    pub fn best_index(&self) -> usize {
        self.best
    }

    pub fn best_mean(&self) -> f64 {
        self.arms[self.best].true_mean
    }

    pub fn gap(&self, j: usize) -> f64 {
        self.gaps[j]
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Gaps of the strictly suboptimal arms.
    pub fn suboptimal_gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.gaps.iter().copied().filter(|&d| d > 0.0)
    }

    /// Smallest positive gap, or `None` when every arm is optimal.
    pub fn min_gap(&self) -> Option<f64> {
        self.suboptimal_gaps().reduce(f64::min)
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    /// Human-readable notes about arms whose parameters leave their nominal
    /// range (Bernoulli success probabilities outside `[0, 1]`).
    pub fn diagnostics(&self) -> Vec<String> {
        self.arms
            .iter()
            .enumerate()
            .filter_map(|(j, arm)| match arm.kind {
                ArmKind::Bernoulli { p } if !(0.0..=1.0).contains(&p) => Some(format!(
                    "arm {}: bernoulli success probability {p} is outside [0, 1]; draws saturate",
                    j + 1
                )),
                _ => None,
            })
            .collect()
    }

    /// Logs [`diagnostics`](Self::diagnostics) as a single warning.
    pub fn log_diagnostics(&self) {
        let notes = self.diagnostics();
        match notes.len() {
            0 => {}
            1 => log::warn!("{}", notes[0]),
            n => log::warn!(
                "{n} of {} arms are out of range, first {}",
                self.len(),
                notes[0]
            ),
        }
    }
}

impl TryFrom<Vec<ArmModel>> for ArmSet {
    type Error = Error;

    fn try_from(arms: Vec<ArmModel>) -> Result<Self> {
        Self::new(arms)
    }
}

impl From<ArmSet> for Vec<ArmModel> {
    fn from(set: ArmSet) -> Self {
        set.arms
    }
}

pub fn paper_mean(m: usize, j: usize) -> f64 {
    let m = m as f64;
    0.1 + (200.0 + 1.5 * (m - j as f64 + 1.0)) / (1.5 * m)
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Per-arm play counts and running sums of unscaled rewards.
///
/// The estimate is kept as `(sum, count)` so that `X̂_j` is exactly the
/// arithmetic mean of the recorded draws.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimatorState {
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl EstimatorState {
    pub fn new(m: usize) -> Self {
        Self {
            counts: vec![0; m],
            sums: vec![0.0; m],
        }
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn update(&mut self, arm: usize, unscaled: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += unscaled;
    }

    /// `T_j`, the number of times `arm` has been played.
    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `X̂_j`, defined once the arm has been played.
    pub fn estimate(&self, arm: usize) -> Option<f64> {
        match self.counts[arm] {
            0 => None,
            n => Some(self.sums[arm] / n as f64),
        }
    }

    pub fn total_plays(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Arm with the highest estimate, lowest index on ties. Unplayed arms
    /// are never preferred over played ones.
    pub fn greedy_arm(&self) -> usize {
        argmax_lowest((0..self.arms()).map(|j| self.estimate(j).unwrap_or(f64::NEG_INFINITY)))
    }
}

/// One round of a game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    /// 0-indexed arm.
    pub arm: usize,
    /// Unscaled draw `X`.
    pub x: f64,
    /// Multiplier `G(t)`.
    pub g: f64,
    pub scaled_reward: f64,
    /// `Δ_arm · G(t)`.
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub cum_reward: f64,
}

/// Per-round record of a game with running regret `R_t = Σ_s Δ_{I_s} G(s)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GameTrace {
    rows: Vec<TraceRow>,
}

impl GameTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            rows: Vec::with_capacity(n),
        }
    }

    pub fn record_round(
        &mut self,
        t: usize,
        arm: usize,
        x: f64,
        schedule: &GreedSchedule,
        arms: &ArmSet,
    ) -> Result<&TraceRow> {
        let expected = self.rows.len() + 1;
        if t != expected {
            return Err(Error::Sequencing { expected, got: t });
        }
        let g = schedule.get(t).ok_or_else(|| {
            Error::domain("record_round", format!("round {t} beyond the schedule"))
        })?;
        if arm >= arms.len() {
            return Err(Error::domain(
                "record_round",
                format!("arm {arm} out of range"),
            ));
        }
        let scaled_reward = g * x;
        let inst_regret = arms.gap(arm) * g;
        let (cum_regret, cum_reward) = self
            .rows
            .last()
            .map_or((0.0, 0.0), |r| (r.cum_regret, r.cum_reward));
        self.rows.push(TraceRow {
            t,
            arm,
            x,
            g,
            scaled_reward,
            inst_regret,
            cum_regret: cum_regret + inst_regret,
            cum_reward: cum_reward + scaled_reward,
        });
        Ok(self.rows.last().expect("just pushed"))
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn final_reward(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_reward)
    }

    pub fn arm_sequence(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.arm).collect()
    }

    /// Writes `t,arm,x,g,scaled_reward,inst_regret,cum_regret,cum_reward`
    /// with 1-indexed arms.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "t",
            "arm",
            "x",
            "g",
            "scaled_reward",
            "inst_regret",
            "cum_regret",
            "cum_reward",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.t.to_string(),
                (r.arm + 1).to_string(),
                r.x.to_string(),
                r.g.to_string(),
                r.scaled_reward.to_string(),
                r.inst_regret.to_string(),
                r.cum_regret.to_string(),
                r.cum_reward.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn paper_means() {
        assert_relative_eq!(paper_mean(500, 500), 0.1 + 201.5 / 750.0, epsilon = 1e-15);
        assert_relative_eq!(paper_mean(500, 500), 0.368666666666, epsilon = 1e-9);
        assert_relative_eq!(paper_mean(500, 1), 1.366666666666, epsilon = 1e-9);
        let set = ArmSet::paper(500, RewardDist::Normal, false).unwrap();
        assert_eq!(set.best_index(), 0);
        assert_eq!(set.gap(0), 0.0);
        for w in set.arms().windows(2) {
            assert!(w[0].true_mean() > w[1].true_mean());
        }
    }

    #[test]
    fn paper_bernoulli_reports_out_of_range() {
        let set = ArmSet::paper(500, RewardDist::Bernoulli, false).unwrap();
        let notes = set.diagnostics();
        assert!(!notes.is_empty());
        assert!(notes[0].starts_with("arm 1:"));
        assert_relative_eq!(set.arm(0).true_mean(), 1.366666666666, epsilon = 1e-9);

        let clamped = ArmSet::paper(500, RewardDist::Bernoulli, true).unwrap();
        assert!(clamped.diagnostics().is_empty());
        assert_eq!(clamped.arm(0).true_mean(), 1.0);
    }

    #[test]
    fn armset_needs_two_arms() {
        let one = vec![ArmModel::bernoulli(0.5).unwrap()];
        assert!(ArmSet::new(one).is_err());
    }

    #[test]
    fn degenerate_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(
                ArmModel::bernoulli(1.0).unwrap().draw_unscaled(&mut rng),
                1.0
            );
            assert_eq!(
                ArmModel::bernoulli(0.0).unwrap().draw_unscaled(&mut rng),
                0.0
            );
            assert_eq!(
                ArmModel::normal(0.37, 0.0).unwrap().draw_unscaled(&mut rng),
                0.37
            );
        }
        let table = ArmModel::table(vec![2.0, 4.0]).unwrap();
        assert_eq!(table.true_mean(), 3.0);
        let x = table.draw_unscaled(&mut rng);
        assert!(x == 2.0 || x == 4.0);
    }

    #[test]
    fn estimator_means() {
        let mut est = EstimatorState::new(3);
        assert_eq!(est.estimate(1), None);
        est.update(1, 0.7);
        assert_eq!(est.estimate(1), Some(0.7));
        assert_eq!(est.count(1), 1);

        let mut est = EstimatorState::new(2);
        est.update(0, 0.2);
        est.update(0, 0.4);
        assert_relative_eq!(est.estimate(0).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(est.total_plays(), 2);
    }

    #[test]
    fn estimator_concentrates_on_bernoulli_mean() {
        let arm = ArmModel::bernoulli(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut est = EstimatorState::new(1);
        for _ in 0..1000 {
            est.update(0, arm.draw_unscaled(&mut rng));
        }
        // sd of the mean is 0.0158, so 0.05 is over 3 sd
        assert!((est.estimate(0).unwrap() - 0.5).abs() < 0.05);
    }

    #[test]
    fn greedy_arm_breaks_ties_low() {
        let mut est = EstimatorState::new(3);
        est.update(0, 0.5);
        est.update(1, 0.9);
        est.update(2, 0.9);
        assert_eq!(est.greedy_arm(), 1);
    }

    fn two_arms() -> ArmSet {
        ArmSet::new(vec![
            ArmModel::bernoulli(0.9).unwrap(),
            ArmModel::bernoulli(0.4).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn regret_of_best_arm_is_zero() {
        let arms = two_arms();
        let g = GreedSchedule::wave(50).unwrap();
        let mut trace = GameTrace::new();
        for t in 1..=50 {
            trace.record_round(t, 0, 1.0, &g, &arms).unwrap();
        }
        assert_eq!(trace.final_regret(), 0.0);
    }

    #[test]
    fn single_suboptimal_play() {
        let arms = two_arms();
        let g = GreedSchedule::wave(50).unwrap();
        let mut trace = GameTrace::new();
        for t in 1..=50 {
            let arm = usize::from(t == 17);
            trace.record_round(t, arm, 1.0, &g, &arms).unwrap();
        }
        assert_relative_eq!(trace.final_regret(), 0.5 * g.at(17), epsilon = 1e-12);
    }

    #[test]
    fn unscaled_regret_counts_plays() {
        let arms = two_arms();
        let g = GreedSchedule::constant(30, 1.0).unwrap();
        let mut trace = GameTrace::new();
        for t in 1..=30 {
            trace.record_round(t, t % 3 % 2, 0.0, &g, &arms).unwrap();
        }
        let q = trace.rows().iter().filter(|r| r.arm == 1).count();
        assert_relative_eq!(trace.final_regret(), q as f64 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn out_of_order_round_rejected() {
        let arms = two_arms();
        let g = GreedSchedule::constant(5, 1.0).unwrap();
        let mut trace = GameTrace::new();
        trace.record_round(1, 0, 1.0, &g, &arms).unwrap();
        let err = trace.record_round(3, 0, 1.0, &g, &arms).unwrap_err();
        assert!(matches!(
            err,
            Error::Sequencing {
                expected: 2,
                got: 3
            }
        ));
    }

    #[test]
    fn trace_csv_header() {
        let arms = two_arms();
        let g = GreedSchedule::constant(2, 2.0).unwrap();
        let mut trace = GameTrace::new();
        trace.record_round(1, 1, 0.5, &g, &arms).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,arm,x,g,scaled_reward,inst_regret,cum_regret,cum_reward\n1,2,0.5,2,1,1,1,1\n"
        );
    }
}
