use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use greed_core::bandit::RewardDist;
use greed_core::bounds::{
    eps_soft_regret_bound, eps_threshold_regret_bound, ucb_soft_regret_bound,
    ucb_threshold_regret_bound,
};
use greed_core::engine::{compare, run_batch, BatchResult, Execution};
use greed_core::{BoundReport, ExperimentSpec, PolicyConfig, PolicyKind, ScheduleSpec};

use crate::config::{manifest, Overrides, RunConfig, DESK_ARMS, FULL_ARMS};
use crate::error::{CliError, Result};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes one artifact, prefixed by the manifest hash as a comment line.
fn write_artifact(
    path: &Path,
    hash: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> greed_core::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# manifest-sha256: {hash}").map_err(|e| CliError::io(path, e))?;
    body(&mut out).map_err(|e| match e {
        greed_core::Error::Io(source) => CliError::io(path, source),
        other => CliError::Core(other),
    })?;
    out.flush().map_err(|e| CliError::io(path, e))
}

fn write_manifest(dir: &Path, text: &str) -> Result<()> {
    let path = dir.join("manifest.toml");
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn print_ranking(batch: &BatchResult) {
    let comparison = compare(batch);
    println!(
        "{:<4} {:<18} {:>16} {:>12} {:>16} {:>12}",
        "rank", "policy", "final reward", "± se", "final regret", "± se"
    );
    for row in &comparison.ranking {
        let s = row.summary;
        println!(
            "{:<4} {:<18} {:>16.2} {:>12.2} {:>16.2} {:>12.2}",
            row.rank, row.label, s.mean_reward, s.reward_stderr, s.mean_regret, s.regret_stderr
        );
    }
}

pub fn simulate(config: RunConfig, out: &Path, execution: Execution) -> Result<()> {
    let (resolved, spec) = config.resolve()?;
    let (text, hash) = manifest(&resolved, Some(&spec.schedule))?;
    create_dir(out)?;
    log::info!(
        "simulating {} policies, {} trials of {} rounds",
        spec.policies.len(),
        spec.trials,
        spec.rounds()
    );
    let batch = run_batch(&spec, execution)?;
    write_artifact(&out.join("curves.csv"), &hash, |w| {
        batch.write_curves_csv(w, |_| true)
    })?;
    write_artifact(&out.join("summary.csv"), &hash, |w| {
        batch.write_summary_csv(w)
    })?;
    write_manifest(out, &text)?;
    print_ranking(&batch);
    Ok(())
}

fn bound_report(
    spec: &ExperimentSpec,
    policy: &PolicyConfig,
) -> Option<greed_core::Result<BoundReport>> {
    let (g, arms) = (&spec.schedule, &spec.arms);
    let z = policy.threshold.unwrap_or_default();
    let k = policy.k.unwrap_or_default();
    Some(match policy.kind {
        PolicyKind::EpsThreshold => eps_threshold_regret_bound(g, arms, z, k),
        PolicyKind::EpsSoft => eps_soft_regret_bound(g, arms, k),
        PolicyKind::UcbThreshold => ucb_threshold_regret_bound(g, arms, z),
        PolicyKind::UcbSoft => ucb_soft_regret_bound(g, arms),
        PolicyKind::EpsSmart | PolicyKind::UcbSmart | PolicyKind::Oracle => return None,
    })
}

pub fn bounds(
    config: RunConfig,
    out: &Path,
    compare_empirical: bool,
    execution: Execution,
) -> Result<()> {
    let (resolved, spec) = config.resolve()?;
    let (text, hash) = manifest(&resolved, Some(&spec.schedule))?;
    let mut reports = Vec::new();
    for policy in &spec.policies {
        match bound_report(&spec, policy) {
            Some(report) => reports.push((policy.clone(), report?)),
            None => log::info!("no regret bound for {}; skipped", policy.kind),
        }
    }
    if reports.is_empty() {
        return Err(CliError::config(
            "policies",
            "none of the configured policies has a regret bound (eps-threshold, eps-soft, ucb-threshold, ucb-soft)",
        ));
    }
    create_dir(out)?;
    for (policy, report) in &reports {
        let name = format!("bounds-{}.csv", policy.label());
        write_artifact(&out.join(name), &hash, |w| report.write_csv(w))?;
        print!("{}: {report}", policy.label());
    }
    if compare_empirical {
        let mut sim = spec.clone();
        sim.policies = reports.iter().map(|(p, _)| p.clone()).collect();
        let batch = run_batch(&sim, execution)?;
        write_artifact(&out.join("bounds-comparison.csv"), &hash, |w| {
            let mut csv = csv_writer(w);
            csv.write_record([
                "policy",
                "mean_regret",
                "regret_stderr",
                "bound_total",
                "within_bound",
            ])?;
            println!(
                "{:<18} {:>14} {:>10} {:>16} {:>8}",
                "policy", "mean regret", "± se", "bound", "holds"
            );
            for (curves, (_, report)) in batch.policies.iter().zip(&reports) {
                let s = curves.final_summary();
                let holds = s.mean_regret <= report.total + 3.0 * s.regret_stderr;
                println!(
                    "{:<18} {:>14.2} {:>10.2} {:>16.2} {:>8}",
                    curves.label, s.mean_regret, s.regret_stderr, report.total, holds
                );
                csv.write_record([
                    curves.label.clone(),
                    s.mean_regret.to_string(),
                    s.regret_stderr.to_string(),
                    report.total.to_string(),
                    holds.to_string(),
                ])?;
            }
            csv.flush()?;
            Ok(())
        })?;
    }
    write_manifest(out, &text)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

const GRID: [(ScheduleSpec, &str); 3] = [
    (ScheduleSpec::Wave, "wave"),
    (ScheduleSpec::Christmas, "christmas"),
    (ScheduleSpec::Step, "step"),
];

/// Runs every (schedule, distribution) cell with all six policies.
pub fn reproduce_paper(
    mut config: RunConfig,
    overrides: &Overrides,
    out: &Path,
    execution: Execution,
) -> Result<()> {
    if config.schedule.is_some() || config.policies.is_some() || config.arms.dist.is_some() {
        log::warn!(
            "reproduce-paper runs its fixed grid; schedule, policies and arms.dist are ignored"
        );
    }
    config.schedule = None;
    config.policies = None;
    config.arms.dist = None;
    let mut base = config;
    base.arms
        .count
        .get_or_insert(if overrides.full { FULL_ARMS } else { DESK_ARMS });
    base.tool = None;
    let (root_text, _) = manifest(&base, None)?;
    create_dir(out)?;
    write_manifest(out, &root_text)?;

    for (schedule, name) in GRID {
        for dist in [RewardDist::Normal, RewardDist::Bernoulli] {
            let mut cell = base.clone();
            cell.schedule = Some(schedule.clone());
            cell.arms.dist = Some(dist);
            let (resolved, spec) = cell.resolve()?;
            let (_, hash) = manifest(&resolved, Some(&spec.schedule))?;
            let dir = out.join(format!("{name}-{dist}"));
            create_dir(&dir)?;
            println!(
                "== {name} / {dist}: m = {}, n = {}, {} trials",
                spec.arms.len(),
                spec.rounds(),
                spec.trials
            );
            let batch = run_batch(&spec, execution)?;
            write_artifact(&dir.join("eps_curves.csv"), &hash, |w| {
                batch.write_curves_csv(w, |p| p.kind.is_epsilon_family())
            })?;
            write_artifact(&dir.join("ucb_curves.csv"), &hash, |w| {
                batch.write_curves_csv(w, |p| p.kind.is_ucb_family())
            })?;
            write_artifact(&dir.join("bars.csv"), &hash, |w| batch.write_summary_csv(w))?;
            print_ranking(&batch);
        }
    }
    Ok(())
}
