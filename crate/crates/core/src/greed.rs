//! The known multiplier schedule `G(t)` and every quantity derived from it.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounds 650..=670 of the Christmas schedule carry the holiday peak.
const CHRISTMAS_PEAK: std::ops::RangeInclusive<usize> = 650..=670;
const CHRISTMAS_VALUE: f64 = 1000.0;

const STEP_BASE: f64 = 200.0;
const STEP_HIGH: f64 = 400.0;
const STEP_ZONES: [std::ops::RangeInclusive<usize>; 3] = [600..=800, 1000..=1200, 1400..=1600];

/// A materialized multiplier schedule: `values[t - 1] = G(t)` for `t = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GreedSchedule {
    values: Vec<f64>,
}

impl GreedSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidHorizon);
        }
        if let Some((i, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidMultiplier {
                round: i + 1,
                value,
            });
        }
        Ok(Self { values })
    }

    fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidHorizon);
        }
        Self::new((1..=n).map(f).collect())
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::from_fn(n, |_| value)
    }

    /// Customers arriving in waves: `G(t) = 21 + 20 sin(0.25 t)`.
    pub fn wave(n: usize) -> Result<Self> {
        Self::from_fn(n, wave_value)
    }

    /// The wave schedule with a flat peak of 1000 over rounds 650..=670.
    /// Shorter horizons simply truncate the peak.
    pub fn christmas(n: usize) -> Result<Self> {
        Self::from_fn(n, |t| {
            if CHRISTMAS_PEAK.contains(&t) {
                CHRISTMAS_VALUE
            } else {
                wave_value(t)
            }
        })
    }

    /// 200 everywhere except 400 on rounds 600..=800, 1000..=1200 and 1400..=1600.
    pub fn step(n: usize) -> Result<Self> {
        Self::from_fn(n, |t| {
            if STEP_ZONES.iter().any(|zone| zone.contains(&t)) {
                STEP_HIGH
            } else {
                STEP_BASE
            }
        })
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `G(t)` for a 1-indexed round. Panics outside `1..=n`.
    pub fn at(&self, t: usize) -> f64 {
        assert!(
            (1..=self.horizon()).contains(&t),
            "round {t} outside 1..={}",
            self.horizon()
        );
        self.values[t - 1]
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        t.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Minimum of `G` over rounds `from..=n`, if that range is non-empty.
    pub fn min_from(&self, from: usize) -> Option<f64> {
        self.tail(from).iter().copied().reduce(f64::min)
    }

    pub fn max_from(&self, from: usize) -> Option<f64> {
        self.tail(from).iter().copied().reduce(f64::max)
    }

    fn tail(&self, from: usize) -> &[f64] {
        let start = from.max(1) - 1;
        self.values.get(start..).unwrap_or(&[])
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Keeps the first `n` rounds.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.values.iter().take(n).copied().collect())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["round", "value"])?;
        for (i, value) in self.values.iter().enumerate() {
            out.write_record([(i + 1).to_string(), value.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a `(round, value)` CSV with a header row. Rounds must run
    /// `1, 2, …, n` without gaps.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        for record in input.deserialize() {
            let (round, value): (usize, f64) = record?;
            if round != values.len() + 1 {
                return Err(Error::Sequencing {
                    expected: values.len() + 1,
                    got: round,
                });
            }
            values.push(value);
        }
        Self::new(values)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

impl TryFrom<Vec<f64>> for GreedSchedule {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<GreedSchedule> for Vec<f64> {
    fn from(schedule: GreedSchedule) -> Self {
        schedule.values
    }
}

fn wave_value(t: usize) -> f64 {
    21.0 + 20.0 * (0.25 * t as f64).sin()
}

/// Named schedule sources, as written in configuration:
/// `wave`, `christmas`, `step`, `constant:<value>` or `csv:<path>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScheduleSpec {
    Wave,
    Christmas,
    Step,
    Constant(f64),
    Csv(PathBuf),
}

impl ScheduleSpec {
    /// Builds the schedule over `n` rounds. A CSV schedule must cover at
    /// least `n` rounds and is truncated to `n`.
    pub fn materialize(&self, n: usize) -> Result<GreedSchedule> {
        match self {
            ScheduleSpec::Wave => GreedSchedule::wave(n),
            ScheduleSpec::Christmas => GreedSchedule::christmas(n),
            ScheduleSpec::Step => GreedSchedule::step(n),
            ScheduleSpec::Constant(c) => GreedSchedule::constant(n, *c),
            ScheduleSpec::Csv(path) => {
                let schedule = GreedSchedule::read_csv_path(path)?;
                if schedule.horizon() < n {
                    return Err(Error::config(
                        "greed",
                        format!(
                            "{} holds {} rounds but {n} were requested",
                            path.display(),
                            schedule.horizon()
                        ),
                    ));
                }
                schedule.truncated(n)
            }
        }
    }
}

impl FromStr for ScheduleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "wave" => return Ok(ScheduleSpec::Wave),
            "christmas" => return Ok(ScheduleSpec::Christmas),
            "step" => return Ok(ScheduleSpec::Step),
            _ => {}
        }
        if let Some(value) = s.strip_prefix("constant:") {
            let c: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::config("greed", format!("`{value}` is not a number")))?;
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::config("greed", "constant multiplier must be > 0"));
            }
            return Ok(ScheduleSpec::Constant(c));
        }
        if let Some(path) = s.strip_prefix("csv:") {
            return Ok(ScheduleSpec::Csv(PathBuf::from(path)));
        }
        Err(Error::config(
            "greed",
            format!("unknown schedule `{s}` (expected wave, christmas, step, constant:<v> or csv:<path>)"),
        ))
    }
}

impl TryFrom<String> for ScheduleSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScheduleSpec> for String {
    fn from(spec: ScheduleSpec) -> Self {
        spec.to_string()
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Wave => f.write_str("wave"),
            ScheduleSpec::Christmas => f.write_str("christmas"),
            ScheduleSpec::Step => f.write_str("step"),
            ScheduleSpec::Constant(c) => write!(f, "constant:{c}"),
            ScheduleSpec::Csv(path) => write!(f, "csv:{}", path.display()),
        }
    }
}

pub(crate) fn warn_if_below_one(min: f64) {
    if min < 1.0 {
        log::warn!("minimum post-initialization multiplier {min} is below 1");
    }
}

/// Soft exploration modulator
/// `ψ(t) = log(1 + 1/G(t)) / log(1 + 1/min_{s>m} G(s))`, in `(0, 1]`.
pub fn psi(schedule: &GreedSchedule, m: usize, t: usize) -> Result<f64> {
    let n = schedule.horizon();
    if t <= m || t > n {
        return Err(Error::domain(
            "psi",
            format!("round {t} outside {}..={n}", m + 1),
        ));
    }
    let min = schedule.min_from(m + 1).expect("t lies in the range");
    Ok(psi_with_min(schedule.at(t), min))
}

/// `ψ` for a multiplier `g` given the post-initialization minimum.
pub fn psi_with_min(g: f64, min: f64) -> f64 {
    (1.0 / g).ln_1p() / (1.0 / min).ln_1p()
}

/// `γ`: the smallest `ψ(s)` over `s = m+1..=n`, attained where `G` peaks.
pub fn gamma(schedule: &GreedSchedule, m: usize) -> Result<f64> {
    let n = schedule.horizon();
    if m >= n {
        return Err(Error::domain(
            "gamma",
            format!("no post-initialization rounds: m = {m}, n = {n}"),
        ));
    }
    let min = schedule.min_from(m + 1).expect("non-empty");
    let max = schedule.max_from(m + 1).expect("non-empty");
    warn_if_below_one(min);
    Ok(psi_with_min(max, min))
}

/// Soft-UCB confidence modulator `ξ(t) = 1 + t / G(t)`.
pub fn xi(schedule: &GreedSchedule, t: usize) -> Result<f64> {
    let g = schedule.get(t).ok_or_else(|| {
        Error::domain(
            "xi",
            format!("round {t} outside 1..={}", schedule.horizon()),
        )
    })?;
    Ok(xi_value(t, g))
}

pub(crate) fn xi_value(t: usize, g: f64) -> f64 {
    1.0 + t as f64 / g
}

/// One high-reward zone: a maximal run of rounds with `G(t) > z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    /// Entry round `y_k`.
    pub entry: usize,
    /// Last round of the zone (inclusive).
    pub last: usize,
    /// `Λ_k`, the largest multiplier inside the zone.
    pub peak: f64,
}

impl Zone {
    pub fn len(&self) -> usize {
        self.last - self.entry + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rounds(&self) -> std::ops::RangeInclusive<usize> {
        self.entry..=self.last
    }

    /// `R_k = Λ_k · |Y_k|`, the zone collapsed into its entry round.
    pub fn budget(&self) -> f64 {
        self.peak * self.len() as f64
    }
}

/// High-reward zones of a schedule relative to a threshold `z`, looking
/// only at post-initialization rounds `m+1..=n`.
///
/// A round enters a zone when `G(t) > z` and the previous round was not
/// above `z`; round `m+1` counts as entered when it is above `z`. Rounds
/// with `G(t) = z` are neither low nor in a zone, so
/// `low_count + Σ|Y_k| + equal_count = n - m` always holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStructure {
    pub threshold: f64,
    pub zones: Vec<Zone>,
    /// `η`: post-initialization rounds strictly below `z`.
    pub low_count: usize,
    pub equal_count: usize,
}

impl ThresholdStructure {
    /// The entry set `B`, strictly increasing.
    pub fn entry_times(&self) -> Vec<usize> {
        self.zones.iter().map(|z| z.entry).collect()
    }

    pub fn zone_rounds(&self) -> usize {
        self.zones.iter().map(Zone::len).sum()
    }

    pub fn total_budget(&self) -> f64 {
        self.zones.iter().map(Zone::budget).sum()
    }
}

pub fn threshold_structure(
    schedule: &GreedSchedule,
    z: f64,
    m: usize,
) -> Result<ThresholdStructure> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::domain(
            "threshold",
            format!("z = {z} must be finite and > 0"),
        ));
    }
    let mut zones: Vec<Zone> = Vec::new();
    let mut low_count = 0;
    let mut equal_count = 0;
    let mut in_zone = false;
    for t in (m + 1)..=schedule.horizon() {
        let g = schedule.at(t);
        if g > z {
            if in_zone {
                let zone = zones.last_mut().expect("open zone");
                zone.last = t;
                zone.peak = zone.peak.max(g);
            } else {
                zones.push(Zone {
                    entry: t,
                    last: t,
                    peak: g,
                });
            }
            in_zone = true;
        } else {
            if g < z {
                low_count += 1;
            } else {
                equal_count += 1;
            }
            in_zone = false;
        }
    }
    Ok(ThresholdStructure {
        threshold: z,
        zones,
        low_count,
        equal_count,
    })
}
