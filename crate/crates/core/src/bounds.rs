//! Closed-form upper bounds on the expected regret `E[R_n]` of the greed
//! regulating policies, evaluated numerically for a concrete schedule and
//! arm set.
//!
//! Each bound is split into labeled, nonnegative components whose sum is
//! the total. The ε-greedy bounds are sums over rounds of a probability of
//! playing each suboptimal arm; the misidentification probabilities `β`
//! enter those sums capped at 1, and the number of capped evaluations is
//! reported alongside.

use std::f64::consts::{E, PI};
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::bandit::ArmSet;
use crate::error::{Error, Result};
use crate::greed::{gamma, psi_with_min, threshold_structure, xi_value, GreedSchedule};
use crate::policy::{check_exploration_constant, PolicyKind};

/// A misidentification bound `β`, or `Vacuous` below the round where the
/// formula applies (`t̃ < m k e`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Vacuous,
    Bound(f64),
}

impl Beta {
    pub fn raw(self) -> Option<f64> {
        match self {
            Beta::Vacuous => None,
            Beta::Bound(v) => Some(v),
        }
    }

    /// The value used inside regret sums: at most 1.
    pub fn capped(self) -> f64 {
        match self {
            Beta::Vacuous => 1.0,
            Beta::Bound(v) => v.min(1.0),
        }
    }

    pub fn is_capped(self) -> bool {
        match self {
            Beta::Vacuous => true,
            Beta::Bound(v) => v > 1.0,
        }
    }
}

fn check_beta_inputs(k: f64, m: usize, gap: f64) -> Result<()> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::domain(
            "beta",
            format!("gap must be > 0 (got {gap})"),
        ));
    }
    if !(k.is_finite() && k > 0.0) || m == 0 {
        return Err(Error::domain(
            "beta",
            format!("need k > 0 and m ≥ 1 (got k = {k}, m = {m})"),
        ));
    }
    Ok(())
}

/// `β_j(t̃) = k x^{−k/10} log x + (4/Δ_j²) x^{−k Δ_j²/4}` with `x = t̃ / (m k e)`.
pub fn beta_threshold(t_tilde: f64, k: f64, m: usize, gap: f64) -> Result<Beta> {
    check_beta_inputs(k, m, gap)?;
    Ok(beta_unchecked(t_tilde, k, m, gap))
}

fn beta_unchecked(t_tilde: f64, k: f64, m: usize, gap: f64) -> Beta {
    let x = t_tilde / (m as f64 * k * E);
    if !(x >= 1.0) {
        return Beta::Vacuous;
    }
    let first = k * x.powf(-k / 10.0) * x.ln();
    let second = 4.0 / (gap * gap) * x.powf(-k * gap * gap / 4.0);
    Beta::Bound(first + second)
}

/// `β^S_j(t)`: [`beta_threshold`] evaluated at `γ t`.
pub fn beta_soft(t: f64, gamma: f64, k: f64, m: usize, gap: f64) -> Result<Beta> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::domain(
            "beta_soft",
            format!("γ = {gamma} outside (0, 1]"),
        ));
    }
    beta_threshold(gamma * t, k, m, gap)
}

/// Contribution of one post-initialization round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTerm {
    pub round: usize,
    pub multiplier: f64,
    /// Whether the round sits at or above the threshold.
    pub high_zone: bool,
    /// `G(t) Σ_j Δ_j ε_t / m`: regret from random exploration.
    pub exploration: f64,
    /// `G(t) Σ_j Δ_j (1 − ε_t) β_j`: regret from a wrong greedy arm.
    pub misidentification: f64,
}

impl RoundTerm {
    pub fn total(&self) -> f64 {
        self.exploration + self.misidentification
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundComponent {
    pub label: String,
    /// Which part of the bound the component comes from.
    pub tag: &'static str,
    pub value: f64,
}

impl BoundComponent {
    fn new(label: &str, tag: &'static str, value: f64) -> Self {
        Self {
            label: label.to_owned(),
            tag,
            // an empty f64 sum is -0.0
            value: value + 0.0,
        }
    }
}

pub const TAG_INITIALIZATION: &str = "initialization";
pub const TAG_LOW_ZONE: &str = "low-zone";
pub const TAG_HIGH_ZONE: &str = "high-zone";
pub const TAG_SOFT_ROUNDS: &str = "soft-rounds";
pub const TAG_UCB_LOW_ZONE: &str = "ucb-low-zone";
pub const TAG_COLLAPSED_ZONES: &str = "collapsed-zones";
pub const TAG_CONFIDENCE_LOG: &str = "confidence-log";
pub const TAG_TAIL_SERIES: &str = "tail-series";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub policy: PolicyKind,
    /// `Σ_{j=1}^m G(j) Δ_j`, the exact regret of playing each arm once.
    pub initialization_term: f64,
    /// Per-round terms; empty for the UCB bounds, which are not per-round.
    pub round_terms: Vec<RoundTerm>,
    pub components: Vec<BoundComponent>,
    pub total: f64,
    /// How many `β` evaluations were capped at 1.
    pub capped_beta: usize,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(policy: PolicyKind, initialization_term: f64) -> Self {
        Self {
            policy,
            initialization_term,
            round_terms: Vec::new(),
            components: vec![BoundComponent::new(
                "initialization",
                TAG_INITIALIZATION,
                initialization_term,
            )],
            total: 0.0,
            capped_beta: 0,
            notes: Vec::new(),
        }
    }

    fn finish(mut self) -> Self {
        self.total = self.components.iter().map(|c| c.value).sum();
        self
    }

    pub fn low_zone_terms(&self) -> impl Iterator<Item = &RoundTerm> {
        self.round_terms.iter().filter(|r| !r.high_zone)
    }

    pub fn high_zone_terms(&self) -> impl Iterator<Item = &RoundTerm> {
        self.round_terms.iter().filter(|r| r.high_zone)
    }

    pub fn component(&self, tag: &str) -> Option<&BoundComponent> {
        self.components.iter().find(|c| c.tag == tag)
    }

    /// Sum of the components carrying `tag`.
    pub fn tagged(&self, tag: &str) -> f64 {
        self.components
            .iter()
            .filter(|c| c.tag == tag)
            .map(|c| c.value)
            .sum()
    }

    /// `component,tag,value` rows followed by the total.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["component", "tag", "value"])?;
        for c in &self.components {
            out.write_record([c.label.as_str(), c.tag, &c.value.to_string()])?;
        }
        out.write_record(["total", "total", &self.total.to_string()])?;
        out.flush()?;
        Ok(())
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "regret bound for {}", self.policy)?;
        for c in &self.components {
            writeln!(f, "  {:<32} {:>18.6}", c.label, c.value)?;
        }
        writeln!(f, "  {:<32} {:>18.6}", "total", self.total)?;
        if self.capped_beta > 0 {
            writeln!(f, "  ({} β evaluations capped at 1)", self.capped_beta)?;
        }
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        Ok(())
    }
}

fn initialization_regret(schedule: &GreedSchedule, arms: &ArmSet) -> Result<f64> {
    let (m, n) = (arms.len(), schedule.horizon());
    if n < m {
        return Err(Error::domain(
            "bound",
            format!("horizon {n} shorter than the {m} initialization rounds"),
        ));
    }
    Ok((1..=m).map(|j| schedule.at(j) * arms.gap(j - 1)).sum())
}

struct BetaSums<'a> {
    gaps: Vec<f64>,
    k: f64,
    m: usize,
    capped: &'a mut usize,
}

impl BetaSums<'_> {
    /// `Σ_j Δ_j β_j(arg)` with capped `β`.
    fn weighted(&mut self, arg: f64) -> f64 {
        let mut sum = 0.0;
        for &gap in &self.gaps {
            let beta = beta_unchecked(arg, self.k, self.m, gap);
            if beta.is_capped() {
                *self.capped += 1;
            }
            sum += gap * beta.capped();
        }
        sum
    }
}

/// Bound for ε-greedy with a hard threshold `z`.
///
/// Below `z` a round contributes `G(t) Σ_j Δ_j (ε_t/m + (1 − ε_t) β_j(t̃))`;
/// at or above `z` only `G(t) Σ_j Δ_j β_j(t̃)`. `t̃` runs exactly as in the
/// policy, counting every round so far with `G < z`.
pub fn eps_threshold_regret_bound(
    schedule: &GreedSchedule,
    arms: &ArmSet,
    z: f64,
    k: f64,
) -> Result<BoundReport> {
    check_exploration_constant(k, arms.min_gap())?;
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::config(
            "threshold",
            format!("must be finite and > 0 (got {z})"),
        ));
    }
    let m = arms.len();
    let mut report = BoundReport::new(
        PolicyKind::EpsThreshold,
        initialization_regret(schedule, arms)?,
    );
    let gap_total: f64 = arms.suboptimal_gaps().sum();
    let mut t_tilde = (1..=m).filter(|&t| schedule.at(t) < z).count() as u64;
    let mut capped = 0;
    let mut betas = BetaSums {
        gaps: arms.suboptimal_gaps().collect(),
        k,
        m,
        capped: &mut capped,
    };
    for t in (m + 1)..=schedule.horizon() {
        let g = schedule.at(t);
        let term = if g < z {
            t_tilde += 1;
            let epsilon = (k * m as f64 / t_tilde as f64).min(1.0);
            RoundTerm {
                round: t,
                multiplier: g,
                high_zone: false,
                exploration: g * gap_total * epsilon / m as f64,
                misidentification: g * (1.0 - epsilon) * betas.weighted(t_tilde as f64),
            }
        } else {
            RoundTerm {
                round: t,
                multiplier: g,
                high_zone: true,
                exploration: 0.0,
                misidentification: g * betas.weighted(t_tilde as f64),
            }
        };
        report.round_terms.push(term);
    }
    report.capped_beta = capped;
    let low_exploration = report.low_zone_terms().map(|r| r.exploration).sum();
    let low_misid = report.low_zone_terms().map(|r| r.misidentification).sum();
    let high_misid = report.high_zone_terms().map(|r| r.misidentification).sum();
    report.components.extend([
        BoundComponent::new("low-zone exploration", TAG_LOW_ZONE, low_exploration),
        BoundComponent::new("low-zone misidentification", TAG_LOW_ZONE, low_misid),
        BoundComponent::new("high-zone misidentification", TAG_HIGH_ZONE, high_misid),
    ]);
    Ok(report.finish())
}

/// Bound for soft ε-greedy: every round contributes
/// `G(t) Σ_j Δ_j (ε_t/m + (1 − ε_t) β^S_j(t))` with `ε_t = min{ψ(t), k m / t}`.
pub fn eps_soft_regret_bound(
    schedule: &GreedSchedule,
    arms: &ArmSet,
    k: f64,
) -> Result<BoundReport> {
    check_exploration_constant(k, arms.min_gap())?;
    let m = arms.len();
    let mut report = BoundReport::new(PolicyKind::EpsSoft, initialization_regret(schedule, arms)?);
    if schedule.horizon() == m {
        return Ok(report.finish());
    }
    let gamma = gamma(schedule, m)?;
    let min_g = schedule.min_from(m + 1).expect("n > m");
    let gap_total: f64 = arms.suboptimal_gaps().sum();
    let mut capped = 0;
    let mut betas = BetaSums {
        gaps: arms.suboptimal_gaps().collect(),
        k,
        m,
        capped: &mut capped,
    };
    for t in (m + 1)..=schedule.horizon() {
        let g = schedule.at(t);
        let epsilon = psi_with_min(g, min_g).min(k * m as f64 / t as f64);
        report.round_terms.push(RoundTerm {
            round: t,
            multiplier: g,
            high_zone: false,
            exploration: g * gap_total * epsilon / m as f64,
            misidentification: g * (1.0 - epsilon) * betas.weighted(gamma * t as f64),
        });
    }
    report.capped_beta = capped;
    let exploration = report.round_terms.iter().map(|r| r.exploration).sum();
    let misid = report.round_terms.iter().map(|r| r.misidentification).sum();
    report.components.extend([
        BoundComponent::new("exploration", TAG_SOFT_ROUNDS, exploration),
        BoundComponent::new("misidentification", TAG_SOFT_ROUNDS, misid),
    ]);
    Ok(report.finish())
}

/// Classic UCB1 bound `8 Σ_j log(N)/Δ_j + (1 + π²/3) Σ_j Δ_j` for a game of
/// `log_of_rounds = log N`, split into its two parts.
pub fn classic_ucb1_bound(arms: &ArmSet, log_of_rounds: f64) -> [BoundComponent; 2] {
    let log_part = 8.0
        * arms
            .suboptimal_gaps()
            .map(|d| log_of_rounds / d)
            .sum::<f64>();
    let constant = (1.0 + PI * PI / 3.0) * arms.gaps().iter().sum::<f64>();
    [
        BoundComponent::new("confidence log term", TAG_CONFIDENCE_LOG, log_part),
        BoundComponent::new("constant term", TAG_TAIL_SERIES, constant),
    ]
}

/// Bound for UCB with a hard threshold: initialization, a classic UCB bound
/// over the `η` rounds below `z` scaled by `z`, and every high-reward zone
/// collapsed into its budget `R_k = Λ_k |Y_k|`.
pub fn ucb_threshold_regret_bound(
    schedule: &GreedSchedule,
    arms: &ArmSet,
    z: f64,
) -> Result<BoundReport> {
    let m = arms.len();
    let mut report = BoundReport::new(
        PolicyKind::UcbThreshold,
        initialization_regret(schedule, arms)?,
    );
    let structure = threshold_structure(schedule, z, m)?;
    let eta = structure.low_count;
    if eta >= 1 {
        let [log_part, constant] = classic_ucb1_bound(arms, (eta as f64).ln());
        report.components.push(BoundComponent::new(
            "low-zone UCB",
            TAG_UCB_LOW_ZONE,
            z * (log_part.value + constant.value),
        ));
    } else {
        report
            .notes
            .push("no post-initialization round below the threshold; low-zone term omitted".into());
    }
    if structure.equal_count > 0 {
        report.notes.push(format!(
            "{} rounds sit exactly at the threshold and fall outside both terms",
            structure.equal_count
        ));
    }
    report.components.push(BoundComponent::new(
        "collapsed high-reward zones",
        TAG_COLLAPSED_ZONES,
        arms.max_gap() * structure.total_budget(),
    ));
    Ok(report.finish())
}

/// `Σ_{t=m+1}^n 2 ξ(t)^{−4} (t − 1 − m)²`.
pub fn soft_ucb_tail_series(schedule: &GreedSchedule, m: usize) -> f64 {
    ((m + 1)..=schedule.horizon())
        .map(|t| soft_ucb_tail_summand(schedule, m, t))
        .sum()
}

pub fn soft_ucb_tail_summand(schedule: &GreedSchedule, m: usize, t: usize) -> f64 {
    let xi = xi_value(t, schedule.at(t));
    let lag = (t - 1 - m) as f64;
    2.0 * lag * lag / xi.powi(4)
}

/// Bound for soft UCB:
/// `max G · (Σ_j (8/Δ_j) log max ξ + Σ_j Δ_j [1 + Σ_t 2 ξ(t)^{−4} (t−1−m)²])`,
/// with maxima over the post-initialization rounds.
pub fn ucb_soft_regret_bound(schedule: &GreedSchedule, arms: &ArmSet) -> Result<BoundReport> {
    let (m, n) = (arms.len(), schedule.horizon());
    if n <= m {
        return Err(Error::domain(
            "ucb_soft_regret_bound",
            format!("need n > m (n = {n}, m = {m})"),
        ));
    }
    let mut report = BoundReport::new(PolicyKind::UcbSoft, initialization_regret(schedule, arms)?);
    let max_g = schedule.max_from(m + 1).expect("n > m");
    let max_xi = ((m + 1)..=n)
        .map(|t| xi_value(t, schedule.at(t)))
        .fold(f64::MIN, f64::max);
    let log_part = 8.0 * arms.suboptimal_gaps().map(|d| max_xi.ln() / d).sum::<f64>();
    let series = soft_ucb_tail_series(schedule, m);
    let tail = arms.gaps().iter().sum::<f64>() * (1.0 + series);
    report.components.extend([
        BoundComponent::new("confidence log term", TAG_CONFIDENCE_LOG, max_g * log_part),
        BoundComponent::new("tail series term", TAG_TAIL_SERIES, max_g * tail),
    ]);
    Ok(report.finish())
}

/// Where classic ε-greedy's `min{1, km/t}` sits relative to `ψ(t)`:
/// before `n′ = ⌊km⌋` it is 1, after `w` it is below `γ ≤ ψ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionDiagnostics {
    pub n_prime: usize,
    /// Smallest `s ≥ 1` with `km / s < γ`.
    pub w: usize,
    pub gamma: f64,
    pub km: f64,
}

impl RegionDiagnostics {
    pub fn from_gamma(k: f64, m: usize, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::domain(
                "region_diagnostics",
                format!("γ = {gamma} must be > 0"),
            ));
        }
        let km = k * m as f64;
        let below = |s: usize| km / (s as f64) < gamma;
        let mut w = ((km / gamma).floor() as usize + 1).max(1);
        while !below(w) {
            w += 1;
        }
        while w > 1 && below(w - 1) {
            w -= 1;
        }
        Ok(Self {
            n_prime: km.floor() as usize,
            w,
            gamma,
            km,
        })
    }
}

pub fn region_diagnostics(schedule: &GreedSchedule, m: usize, k: f64) -> Result<RegionDiagnostics> {
    RegionDiagnostics::from_gamma(k, m, gamma(schedule, m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{ArmModel, RewardDist};
    use approx::assert_relative_eq;

    fn arms(ps: &[f64]) -> ArmSet {
        ArmSet::new(
            ps.iter()
                .map(|&p| ArmModel::bernoulli(p).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn beta_at_the_knee() {
        let mke = 5.0 * 11.0 * E;
        let beta = beta_threshold(mke, 11.0, 5, 0.5).unwrap().raw().unwrap();
        assert_relative_eq!(beta, 16.0, epsilon = 1e-12);
        assert_eq!(
            beta_threshold(mke - 1.0, 11.0, 5, 0.5).unwrap(),
            Beta::Vacuous
        );
    }

    #[test]
    fn beta_reference_value() {
        // 40-digit evaluation: 6.916518372877335
        let beta = beta_threshold(1000.0, 11.0, 5, 0.5).unwrap().raw().unwrap();
        assert_relative_eq!(beta, 6.916518372877335, max_relative = 1e-12);
        assert!(beta_threshold(1000.0, 11.0, 5, 0.5).unwrap().is_capped());
    }

    #[test]
    fn beta_rejects_bad_gap() {
        assert!(beta_threshold(1000.0, 11.0, 5, 0.0).is_err());
        assert!(beta_threshold(1000.0, 11.0, 5, -0.1).is_err());
    }

    #[test]
    fn beta_vanishes_and_decays_faster_than_inverse_when_exponents_exceed_one() {
        // k Δ²/4 > 1 and k/10 > 1: t̃ β(t̃) → 0
        let (k, gap) = (70.0, 0.5);
        let mut last = f64::INFINITY;
        for t in [1e4, 1e5, 1e6, 1e7, 1e8] {
            let scaled = t * beta_threshold(t, k, 5, gap).unwrap().raw().unwrap();
            assert!(scaled < last);
            last = scaled;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn beta_soft_identities() {
        for t in [200.0, 1000.0, 12345.0] {
            assert_eq!(
                beta_soft(t, 1.0, 11.0, 5, 0.5).unwrap(),
                beta_threshold(t, 11.0, 5, 0.5).unwrap()
            );
            assert_eq!(
                beta_soft(2.0 * t, 0.5, 11.0, 5, 0.5).unwrap(),
                beta_threshold(t, 11.0, 5, 0.5).unwrap()
            );
        }
        let a = beta_soft(50_000.0, 0.9, 11.0, 5, 0.5)
            .unwrap()
            .raw()
            .unwrap();
        let b = beta_soft(50_000.0, 0.4, 11.0, 5, 0.5)
            .unwrap()
            .raw()
            .unwrap();
        assert!(b > a);
        assert!(beta_soft(100.0, 1.5, 11.0, 5, 0.5).is_err());
        assert!(beta_soft(100.0, 0.0, 11.0, 5, 0.5).is_err());
    }

    #[test]
    fn eps_threshold_initialization_only() {
        let a = arms(&[0.9, 0.4, 0.3]);
        let g = GreedSchedule::new(vec![2.0, 3.0, 4.0]).unwrap();
        let r = eps_threshold_regret_bound(&g, &a, 10.0, 11.0).unwrap();
        assert_relative_eq!(r.total, 3.0 * 0.5 + 4.0 * 0.6, epsilon = 1e-12);
        assert!(r.round_terms.is_empty());
    }

    #[test]
    fn eps_threshold_constant_schedule_has_no_high_zone() {
        let a = arms(&[0.9, 0.4, 0.3]);
        let g = GreedSchedule::constant(500, 1.0).unwrap();
        let r = eps_threshold_regret_bound(&g, &a, 2.0, 11.0).unwrap();
        assert_eq!(r.tagged(TAG_HIGH_ZONE), 0.0);
        assert_eq!(r.high_zone_terms().count(), 0);
    }

    #[test]
    fn eps_threshold_two_valued_schedule_tags() {
        let a = arms(&[0.9, 0.4, 0.3]);
        let g = GreedSchedule::new(
            (1..=2000)
                .map(|t| if t % 2 == 0 { 1.0 } else { 50.0 })
                .collect(),
        )
        .unwrap();
        let r = eps_threshold_regret_bound(&g, &a, 10.0, 11.0).unwrap();
        assert!(r
            .high_zone_terms()
            .all(|t| t.exploration == 0.0 && t.multiplier == 50.0));
        assert!(r.low_zone_terms().all(|t| t.multiplier == 1.0));
        assert!(r.low_zone_terms().all(|t| t.exploration > 0.0));
        assert_relative_eq!(r.total, r.components.iter().map(|c| c.value).sum::<f64>());
        assert!(r.components.iter().all(|c| c.value >= 0.0));
    }

    #[test]
    fn eps_soft_constant_schedule_uses_gamma_one() {
        let a = arms(&[0.9, 0.4, 0.3]);
        let g = GreedSchedule::constant(400, 1.0).unwrap();
        let r = eps_soft_regret_bound(&g, &a, 11.0).unwrap();
        let gap_total = 0.5 + 0.6;
        // hand-rolled classic ε-greedy bound
        let mut expected = 0.0;
        for t in 4..=400 {
            let eps = (33.0 / t as f64).min(1.0);
            let mut misid = 0.0;
            for gap in [0.5, 0.6] {
                misid += gap * beta_threshold(t as f64, 11.0, 3, gap).unwrap().capped();
            }
            expected += gap_total * eps / 3.0 + (1.0 - eps) * misid;
        }
        expected += 0.5 + 0.6;
        assert_relative_eq!(r.total, expected, max_relative = 1e-12);

        let init =
            eps_soft_regret_bound(&GreedSchedule::constant(3, 1.0).unwrap(), &a, 11.0).unwrap();
        assert_relative_eq!(init.total, 1.1, epsilon = 1e-12);
    }

    #[test]
    fn ucb_threshold_all_low() {
        let a = arms(&[0.9, 0.4, 0.3]);
        let g = GreedSchedule::constant(100, 1.0).unwrap();
        let r = ucb_threshold_regret_bound(&g, &a, 2.0).unwrap();
        let eta = 97f64;
        let classic = 8.0 * (eta.ln() / 0.5 + eta.ln() / 0.6) + (1.0 + PI * PI / 3.0) * 1.1;
        assert_eq!(r.tagged(TAG_COLLAPSED_ZONES), 0.0);
        assert_relative_eq!(r.total, 1.1 + 2.0 * classic, max_relative = 1e-12);
    }

    #[test]
    fn ucb_threshold_all_high() {
        let a = arms(&[0.9, 0.4, 0.3]);
        let mut values = vec![1.0; 3];
        values.extend(std::iter::repeat_n(10.0, 97));
        let g = GreedSchedule::new(values).unwrap();
        let r = ucb_threshold_regret_bound(&g, &a, 2.0).unwrap();
        assert!(r.component(TAG_UCB_LOW_ZONE).is_none());
        assert_eq!(r.notes.len(), 1);
        assert_relative_eq!(r.total, 1.1 + 0.6 * 10.0 * 97.0, max_relative = 1e-12);
    }

    #[test]
    fn ucb_threshold_step_schedule() {
        let a = ArmSet::paper(500, RewardDist::Normal, false).unwrap();
        let g = GreedSchedule::step(2000).unwrap();
        let r = ucb_threshold_regret_bound(&g, &a, 300.0).unwrap();
        assert_relative_eq!(
            r.tagged(TAG_COLLAPSED_ZONES),
            a.max_gap() * 3.0 * 80400.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn ucb_soft_series_cases() {
        let a = arms(&[0.9, 0.4]);
        // n = m + 1: the only summand has lag 0
        let g = GreedSchedule::new(vec![1.0, 1.0, 7.0]).unwrap();
        assert_eq!(soft_ucb_tail_series(&g, 2), 0.0);
        let r = ucb_soft_regret_bound(&g, &a).unwrap();
        let log_part = 7.0 * 8.0 / 0.5 * (1.0 + 3.0 / 7.0f64).ln();
        assert_relative_eq!(r.total, 0.5 + log_part + 7.0 * 0.5, max_relative = 1e-12);
    }

    #[test]
    fn ucb_soft_constant_series_converges() {
        // 30-digit evaluation over t = 501..=2000 with G = 200
        let g = GreedSchedule::constant(2000, 200.0).unwrap();
        let total = soft_ucb_tail_series(&g, 500);
        assert_relative_eq!(total, 481488.593156625348, max_relative = 1e-10);
        let last = soft_ucb_tail_summand(&g, 500, 2000);
        assert!(last / total < 1e-3);
        let mut partial = 0.0;
        for t in 501..=2000 {
            let next = partial + soft_ucb_tail_summand(&g, 500, t);
            assert!(next >= partial);
            partial = next;
        }
    }

    #[test]
    fn ucb_soft_unit_schedule_matches_classic_log_term() {
        let a = arms(&[0.9, 0.6, 0.2]);
        let n = 3000;
        let g = GreedSchedule::constant(n, 1.0).unwrap();
        let r = ucb_soft_regret_bound(&g, &a).unwrap();
        let [classic_log, _] = classic_ucb1_bound(&a, (1.0 + n as f64).ln());
        assert_relative_eq!(
            r.tagged(TAG_CONFIDENCE_LOG),
            classic_log.value,
            max_relative = 1e-12
        );
        // the summand is below 2 / (1 + t)², so the series stays under π²/3
        assert!(soft_ucb_tail_series(&g, 3) < PI * PI / 3.0);
    }

    #[test]
    fn region_examples() {
        let r = RegionDiagnostics::from_gamma(11.0, 5, 0.1).unwrap();
        assert_eq!((r.n_prime, r.w), (55, 551));
        let r = RegionDiagnostics::from_gamma(11.0, 5, 1.0).unwrap();
        assert_eq!((r.n_prime, r.w), (55, 56));
        assert!(RegionDiagnostics::from_gamma(11.0, 5, 0.0).is_err());
        let g = GreedSchedule::constant(100, 3.0).unwrap();
        assert_eq!(region_diagnostics(&g, 5, 11.0).unwrap().w, 56);
    }
}
