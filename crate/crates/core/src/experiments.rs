//! Seeded data generation, n-sweeps, and Monte-Carlo failure rates.
//!
//! Random streams come from ChaCha8 seeded with the configured seed, one
//! stream per trial index. Every sweep point restarts its stream, so the
//! vector for a smaller `n` is a prefix of the vector for a larger one.
//! Normal variates use the ziggurat sampler in binary64 and are rounded
//! once to the target format. Uniform variates are drawn directly on the
//! target's `t`-bit grid in `[0, 1)`, so they need no rounding.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::bounds::{
    BoundAccumulators, BoundReport, DetVariant, Wide256, WorkingPrecision, WorkingScalar,
    DEFAULT_FAILURE_PROB,
};
use crate::error::{Error, Result};
use crate::exact::{exp2i, Dyadic};
use crate::precision::{FloatFormat, TargetValue};
use crate::trace::SummationStream;

pub const DEFAULT_SEED: u64 = 123;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// Mean 0, variance 1.
    Normal,
    /// On `[0, 1)`.
    Uniform,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Normal => "normal",
            Distribution::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Distribution::Normal),
            "uniform" => Ok(Distribution::Uniform),
            _ => Err(Error::Config(format!("unknown distribution {s:?}"))),
        }
    }
}

/// Arithmetic grid `start, start + step, ..., end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NGrid {
    start: usize,
    end: usize,
    step: usize,
}

impl NGrid {
    /// Requires `1 <= step <= start <= end` and `step | (end - start)`.
    pub fn new(start: usize, end: usize, step: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::Config("grid step must be positive".into()));
        }
        if start < step {
            return Err(Error::Config(format!(
                "grid must start at or above its step ({start} < {step})"
            )));
        }
        if start > end {
            return Err(Error::Config(format!(
                "empty grid: start {start} > end {end}"
            )));
        }
        if !(end - start).is_multiple_of(step) {
            return Err(Error::Config(format!(
                "step {step} does not divide {end} - {start}"
            )));
        }
        Ok(NGrid { start, end, step })
    }

    /// The one-point grid `{n}`.
    pub fn single(n: usize) -> Result<Self> {
        NGrid::new(n, n, n.max(1))
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) / self.step + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        (self.start..=self.end).step_by(self.step)
    }
}

impl fmt::Display for NGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

impl FromStr for NGrid {
    type Err = Error;

    /// `start:end:step`, or a bare `n` for a single point.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| -> Result<usize> {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid grid bound {t:?}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [n] => NGrid::single(parse(n)?),
            [a, b, c] => NGrid::new(parse(a)?, parse(b)?, parse(c)?),
            _ => Err(Error::Config(format!(
                "grid {s:?} is neither n nor start:end:step"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub format: FloatFormat,
    pub distribution: Distribution,
    pub grid: NGrid,
    pub failure_prob: f64,
    pub seed: u64,
    pub trials_per_point: u32,
    pub det_variant: DetVariant,
    pub working: WorkingPrecision,
    /// When false, timing columns are written as zero so output is
    /// byte-for-byte reproducible.
    pub record_timings: bool,
}

impl ExperimentConfig {
    pub fn new(format: FloatFormat, distribution: Distribution, grid: NGrid) -> Self {
        ExperimentConfig {
            format,
            distribution,
            grid,
            failure_prob: DEFAULT_FAILURE_PROB,
            seed: DEFAULT_SEED,
            trials_per_point: 1,
            det_variant: DetVariant::Theorem,
            working: WorkingPrecision::default_for(format),
            record_timings: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(Error::FailureProbability(self.failure_prob));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials per point must be positive".into()));
        }
        NGrid::new(self.grid.start, self.grid.end, self.grid.step).map(|_| ())
    }
}

/// Infinite stream of target-format samples for one trial.
pub struct Sampler {
    rng: ChaCha8Rng,
    format: FloatFormat,
    distribution: Distribution,
}

impl Sampler {
    pub fn new(config: &ExperimentConfig, trial: u32) -> Self {
        Sampler::from_parts(config.seed, trial, config.format, config.distribution)
    }

    pub fn from_parts(
        seed: u64,
        trial: u32,
        format: FloatFormat,
        distribution: Distribution,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        Sampler {
            rng,
            format,
            distribution,
        }
    }
}

impl Iterator for Sampler {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let v = match self.distribution {
            Distribution::Normal => {
                let z: f64 = self.rng.sample(StandardNormal);
                // Ziggurat tails stay far inside every supported range.
                self.format
                    .round(z)
                    .expect("normal variate overflowed the target format")
            }
            Distribution::Uniform => {
                let t = self.format.precision_bits();
                let k = self.rng.next_u64() >> (64 - t);
                k as f64 * exp2i(-(t as i32))
            }
        };
        Some(v)
    }
}

/// The `n` summands of one trial, deterministic in `(seed, trial, n)`.
pub fn generate(config: &ExperimentConfig, n: usize, trial: u32) -> Vec<TargetValue> {
    Sampler::new(config, trial)
        .take(n)
        .map(|v| TargetValue::new_unchecked(v, config.format))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RowFlags {
    pub zero_sum: bool,
    pub subnormal: bool,
    pub overflow: bool,
}

impl RowFlags {
    pub fn is_empty(&self) -> bool {
        !(self.zero_sum || self.subnormal || self.overflow)
    }
}

impl fmt::Display for RowFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.zero_sum, "zero_sum"),
            (self.subnormal, "subnormal"),
            (self.overflow, "overflow"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, name)| *name)
        .collect();
        f.write_str(&names.join(";"))
    }
}

impl FromStr for RowFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut flags = RowFlags::default();
        for part in s.split(';').filter(|p| !p.is_empty()) {
            match part {
                "zero_sum" => flags.zero_sum = true,
                "subnormal" => flags.subnormal = true,
                "overflow" => flags.overflow = true,
                other => return Err(Error::Config(format!("unknown flag {other:?}"))),
            }
        }
        Ok(flags)
    }
}

/// One line of sweep output.
///
/// With `flags.zero_sum` the error and bound columns are absolute. With
/// `flags.overflow` they are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub trial: u32,
    pub precision: FloatFormat,
    /// `None` for externally supplied data.
    pub distribution: Option<Distribution>,
    pub delta: f64,
    pub seed: u64,
    pub det_variant: DetVariant,
    pub true_rel_err: f64,
    pub det_bound: f64,
    pub azuma_bound: f64,
    pub martingale_bound: f64,
    pub z_n: f64,
    pub sum_abs_x: f64,
    pub time_c_path_ns: u64,
    pub time_m_path_ns: u64,
    pub flags: RowFlags,
}

impl SweepRow {
    pub fn from_report(
        report: &BoundReport,
        distribution: Option<Distribution>,
        seed: u64,
        trial: u32,
    ) -> Self {
        SweepRow {
            n: report.n,
            trial,
            precision: report.format,
            distribution,
            delta: report.failure_prob,
            seed,
            det_variant: report.det_variant,
            true_rel_err: report.true_rel_err,
            det_bound: report.det_bound,
            azuma_bound: report.azuma_bound,
            martingale_bound: report.martingale_bound,
            z_n: report.z_n_exact.to_f64(),
            sum_abs_x: report.sum_abs_x,
            time_c_path_ns: 0,
            time_m_path_ns: 0,
            flags: RowFlags {
                zero_sum: report.zero_sum,
                subnormal: report.subnormal,
                overflow: false,
            },
        }
    }

    fn overflow(config: &ExperimentConfig, n: usize, trial: u32) -> Self {
        SweepRow {
            n: n as u64,
            trial,
            precision: config.format,
            distribution: Some(config.distribution),
            delta: config.failure_prob,
            seed: config.seed,
            det_variant: config.det_variant,
            true_rel_err: f64::NAN,
            det_bound: f64::NAN,
            azuma_bound: f64::NAN,
            martingale_bound: f64::NAN,
            z_n: f64::NAN,
            sum_abs_x: f64::NAN,
            time_c_path_ns: 0,
            time_m_path_ns: 0,
            flags: RowFlags {
                overflow: true,
                ..RowFlags::default()
            },
        }
    }
}

struct PathResult {
    stream: SummationStream,
    elapsed_ns: u64,
}

fn c_path<S: WorkingScalar>(
    config: &ExperimentConfig,
    n: usize,
    trial: u32,
    acc: &mut BoundAccumulators<S>,
) -> Result<PathResult> {
    let start = Instant::now();
    let mut stream = SummationStream::new(config.format);
    for x in Sampler::new(config, trial).take(n) {
        stream.push(x)?;
        acc.update_c(&S::from_f64(x.abs()));
    }
    Ok(PathResult {
        stream,
        elapsed_ns: start.elapsed().as_nanos() as u64,
    })
}

fn m_path<S: WorkingScalar>(
    config: &ExperimentConfig,
    n: usize,
    trial: u32,
    acc: &mut BoundAccumulators<S>,
) -> Result<PathResult> {
    let start = Instant::now();
    let mut stream = SummationStream::new(config.format);
    for x in Sampler::new(config, trial).take(n) {
        stream.push(x)?;
        acc.update_m(&S::from_f64(x.abs()));
    }
    Ok(PathResult {
        stream,
        elapsed_ns: start.elapsed().as_nanos() as u64,
    })
}

fn run_point_with<S: WorkingScalar>(
    config: &ExperimentConfig,
    n: usize,
    trial: u32,
) -> Result<SweepRow> {
    let mut acc = BoundAccumulators::<S>::new(config.format);
    let c = c_path(config, n, trial, &mut acc)?;
    let m = m_path(config, n, trial, &mut acc)?;
    debug_assert_eq!(c.stream.computed(), m.stream.computed());
    let report = BoundReport::new(
        config.format,
        &acc,
        c.stream.computed().value(),
        c.stream.exact(),
        config.failure_prob,
        config.det_variant,
        c.stream.subnormal_step_count() > 0,
    )?;
    let mut row = SweepRow::from_report(&report, Some(config.distribution), config.seed, trial);
    if config.record_timings {
        row.time_c_path_ns = c.elapsed_ns;
        row.time_m_path_ns = m.elapsed_ns;
    }
    Ok(row)
}

/// One sweep point for one trial.
///
/// Overflow produces a flagged row rather than an error; a zero exact sum
/// produces a row of absolute quantities flagged `zero_sum`.
pub fn run_point(config: &ExperimentConfig, n: usize, trial: u32) -> Result<SweepRow> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let row = match config.working {
        WorkingPrecision::F64 => run_point_with::<f64>(config, n, trial),
        WorkingPrecision::Wide256 => run_point_with::<Wide256>(config, n, trial),
        WorkingPrecision::Exact => run_point_with::<Dyadic>(config, n, trial),
    };
    match row {
        Err(Error::Overflow { .. }) => Ok(SweepRow::overflow(config, n, trial)),
        other => other,
    }
}

/// Every `(n, trial)` of the grid, ordered by `n` then trial.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let items: Vec<(usize, u32)> = config
        .grid
        .iter()
        .flat_map(|n| (0..config.trials_per_point).map(move |t| (n, t)))
        .collect();
    items
        .par_iter()
        .map(|&(n, trial)| run_point(config, n, trial))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundId {
    Azuma,
    Martingale,
}

impl BoundId {
    pub fn name(self) -> &'static str {
        match self {
            BoundId::Azuma => "azuma",
            BoundId::Martingale => "martingale",
        }
    }

    pub fn of(self, row: &SweepRow) -> f64 {
        match self {
            BoundId::Azuma => row.azuma_bound,
            BoundId::Martingale => row.martingale_bound,
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "azuma" => Ok(BoundId::Azuma),
            "martingale" => Ok(BoundId::Martingale),
            _ => Err(Error::Config(format!("unknown bound {s:?}"))),
        }
    }
}

/// Confidence level of [`FailureRateReport::upper_confidence`].
pub const FAILURE_RATE_CONFIDENCE: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct FailureRateReport {
    pub bound: BoundId,
    pub failure_prob: f64,
    pub format: FloatFormat,
    pub distribution: Distribution,
    pub seed: u64,
    pub n: usize,
    pub trials: u64,
    pub violations: u64,
    pub zero_sum_trials: u64,
    pub empirical_rate: f64,
    /// One-sided 99% Clopper-Pearson upper limit on the true violation rate.
    pub upper_confidence: f64,
}

/// Counts trials `0..trials` where the realized error exceeds the bound.
///
/// Zero-sum trials compare absolute error with the absolute bound.
pub fn estimate_failure_rate(
    config: &ExperimentConfig,
    bound: BoundId,
    n: usize,
    trials: u64,
) -> Result<FailureRateReport> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let trials_u32 = u32::try_from(trials).map_err(|_| Error::Config("too many trials".into()))?;
    let mut point = config.clone();
    point.record_timings = false;
    let (violations, zero_sum) = (0..trials_u32)
        .into_par_iter()
        .map(|trial| {
            let row = run_point(&point, n, trial)?;
            let b = bound.of(&row);
            // Overflow rows carry NaN and count against the bound.
            let violated = row.true_rel_err.is_nan() || b.is_nan() || row.true_rel_err > b;
            Ok::<_, Error>((violated as u64, row.flags.zero_sum as u64))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(FailureRateReport {
        bound,
        failure_prob: config.failure_prob,
        format: config.format,
        distribution: config.distribution,
        seed: config.seed,
        n,
        trials,
        violations,
        zero_sum_trials: zero_sum,
        empirical_rate: violations as f64 / trials as f64,
        upper_confidence: clopper_pearson_upper(violations, trials, FAILURE_RATE_CONFIDENCE),
    })
}

/// One-sided Clopper-Pearson upper confidence limit for a binomial rate.
pub fn clopper_pearson_upper(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(trials > 0 && successes <= trials);
    assert!(confidence > 0.0 && confidence < 1.0);
    if successes == trials {
        return 1.0;
    }
    if successes == 0 {
        // Closed form of the Beta(1, n) quantile.
        return -((1.0 - confidence).ln() / trials as f64).exp_m1();
    }
    let beta = Beta::new((successes + 1) as f64, (trials - successes) as f64)
        .expect("positive shape parameters");
    beta.inverse_cdf(confidence)
}
