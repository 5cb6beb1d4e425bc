//! Oracle suites run by `sumbound validate`.
//!
//! Each check compares the production path with an independent exact
//! computation. Observations record expected phenomena and never fail.

use std::fmt;

use num_rational::BigRational;

use crate::bounds::BoundAccumulators;
use crate::error::Result;
use crate::exact::Dyadic;
use crate::experiments::{run_sweep, Distribution, ExperimentConfig, NGrid, Sampler};
use crate::oracle::{exhaustive_delta_check, m_closed_forms, zhat_envelope_holds};
use crate::precision::{FloatFormat, TargetValue};
use crate::trace::run_summation;

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationOptions {
    /// Vector length for the exhaustive enumeration.
    pub exhaustive_n: usize,
    pub seed: u64,
    /// Random vectors for the recurrence check.
    pub recurrence_vectors: usize,
    /// Largest `k` compared in the recurrence check.
    pub recurrence_k: usize,
    /// Random traces for the envelope check.
    pub envelope_traces: usize,
    pub envelope_n: usize,
    /// Also run the half-precision uniform sweep observation.
    pub observe_uniform_half: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            exhaustive_n: 8,
            seed: crate::experiments::DEFAULT_SEED,
            recurrence_vectors: 1000,
            recurrence_k: 200,
            envelope_traces: 100,
            envelope_n: 1000,
            observe_uniform_half: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
    pub observations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        for o in &self.observations {
            writeln!(f, "NOTE {o}")?;
        }
        Ok(())
    }
}

/// Fixed and seeded 4-element half-precision value sets.
pub fn exhaustive_value_sets(seed: u64) -> Vec<Vec<TargetValue>> {
    let h = FloatFormat::Half;
    let fixed = [1.0, 2f64.powi(-11), -(2f64.powi(-12)), 0.75];
    let mut sets = vec![fixed
        .iter()
        .map(|&v| TargetValue::new(v, h).unwrap())
        .collect()];
    for trial in 0..3 {
        sets.push(
            Sampler::from_parts(seed, trial, h, Distribution::Normal)
                .take(4)
                .map(|v| TargetValue::new(v, h).unwrap())
                .collect(),
        );
    }
    sets
}

pub fn check_exhaustive(n: usize, seed: u64) -> Result<CheckOutcome> {
    let mut detail = Vec::new();
    let mut passed = true;
    for set in exhaustive_value_sets(seed) {
        let r = exhaustive_delta_check(n, FloatFormat::Half, &set)?;
        passed &= r.is_clean();
        let values: Vec<f64> = set.iter().map(|v| v.value()).collect();
        detail.push(format!(
            "{values:?}: {} vectors, {} delta / {} bound violations, max ratio {:.3}{}",
            r.vectors,
            r.delta_violations,
            r.bound_violations,
            r.max_ratio,
            r.witness
                .map(|w| format!(", witness {w:?}"))
                .unwrap_or_default()
        ));
    }
    Ok(CheckOutcome {
        name: format!("exhaustive n={n} half"),
        passed,
        detail: detail.join("; "),
    })
}

/// Exact `m_1 ..= m_{k_max}` from the constant-time update.
pub fn m_recurrence(x: &[f64], format: FloatFormat, k_max: usize) -> Vec<BigRational> {
    let mut acc = BoundAccumulators::<Dyadic>::new(format);
    let mut out = Vec::with_capacity(k_max);
    for (i, &v) in x.iter().take(k_max + 1).enumerate() {
        acc.update_m(&Dyadic::from_f64(v.abs()).expect("finite"));
        if i >= 1 {
            out.push(acc.m_current().expect("nonempty").to_rational());
        }
    }
    out
}

pub fn check_recurrence(vectors: usize, k_max: usize, seed: u64) -> Result<CheckOutcome> {
    let mut mismatches = 0usize;
    let mut first = None;
    for (i, format) in (0..vectors).zip([FloatFormat::Half, FloatFormat::Single].iter().cycle()) {
        let dist = if i % 4 < 2 {
            Distribution::Normal
        } else {
            Distribution::Uniform
        };
        let x: Vec<f64> = Sampler::from_parts(seed, i as u32, *format, dist)
            .take(k_max + 1)
            .collect();
        let rec = m_recurrence(&x, *format, k_max);
        let closed = m_closed_forms(&x, k_max, &format.unit_roundoff().to_rational())?;
        if let Some(k) = rec.iter().zip(&closed).position(|(a, b)| a != b) {
            mismatches += 1;
            first.get_or_insert((i, k + 1));
        }
    }
    Ok(CheckOutcome {
        name: "m recurrence = closed form".into(),
        passed: mismatches == 0,
        detail: match first {
            None => format!("{vectors} vectors, k <= {k_max}, exact agreement"),
            Some((i, k)) => format!("{mismatches} mismatching vectors; first at vector {i}, k={k}"),
        },
    })
}

pub fn check_envelopes(traces: usize, n: usize, seed: u64) -> Result<CheckOutcome> {
    let h = FloatFormat::Half;
    let u = h.unit_roundoff().to_rational();
    let mut violations = 0usize;
    let mut steps = 0usize;
    for i in 0..traces {
        let dist = if i % 2 == 0 {
            Distribution::Normal
        } else {
            Distribution::Uniform
        };
        let x: Vec<TargetValue> = Sampler::from_parts(seed, i as u32, h, dist)
            .take(n)
            .map(|v| TargetValue::new(v, h).unwrap())
            .collect();
        let trace = run_summation(&x)?;
        let raw: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let zh: Vec<f64> = trace.z_hat().iter().map(|v| v.value()).collect();
        let holds = zhat_envelope_holds(&raw, &zh, &u)?;
        steps += holds.len();
        violations += holds.iter().filter(|&&ok| !ok).count();
    }
    Ok(CheckOutcome {
        name: "partial-sum envelope".into(),
        passed: violations == 0,
        detail: format!("{traces} half traces, {steps} steps, {violations} violations"),
    })
}

/// Counts grid points of a half-precision uniform sweep where the Azuma
/// bound falls below the realized error.
pub fn observe_uniform_half(seed: u64) -> Result<String> {
    let mut cfg = ExperimentConfig::new(
        FloatFormat::Half,
        Distribution::Uniform,
        NGrid::new(100, 10_000, 100)?,
    );
    cfg.seed = seed;
    cfg.record_timings = false;
    let rows = run_sweep(&cfg)?;
    let below: Vec<u64> = rows
        .iter()
        .filter(|r| r.azuma_bound < r.true_rel_err)
        .map(|r| r.n)
        .collect();
    Ok(format!(
        "half uniform n=100..10000: azuma bound below true error at {} of {} points{}",
        below.len(),
        rows.len(),
        below
            .first()
            .map(|n| format!(" (first at n={n})"))
            .unwrap_or_default()
    ))
}

pub fn run_validation(options: &ValidationOptions) -> Result<ValidationReport> {
    let mut report = ValidationReport {
        checks: vec![
            check_exhaustive(options.exhaustive_n, options.seed)?,
            check_recurrence(
                options.recurrence_vectors,
                options.recurrence_k,
                options.seed,
            )?,
            check_envelopes(options.envelope_traces, options.envelope_n, options.seed)?,
        ],
        observations: Vec::new(),
    };
    if options.observe_uniform_half {
        report
            .observations
            .push(observe_uniform_half(options.seed)?);
    }
    Ok(report)
}
