//! Bounds and realized error for a user-supplied vector.

use crate::bounds::{
    BoundAccumulators, BoundReport, DetVariant, Wide256, WorkingPrecision, WorkingScalar,
};
use crate::error::{Error, Result};
use crate::exact::Dyadic;
use crate::experiments::SweepRow;
use crate::precision::{FloatFormat, TargetValue};
use crate::trace::{run_summation, SummationStream};

/// Inputs up to this length get a full stored trace; longer ones stream.
pub const FULL_TRACE_LIMIT: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub format: FloatFormat,
    pub failure_prob: f64,
    pub det_variant: DetVariant,
    pub working: WorkingPrecision,
}

impl AnalysisOptions {
    pub fn new(format: FloatFormat) -> Self {
        AnalysisOptions {
            format,
            failure_prob: crate::bounds::DEFAULT_FAILURE_PROB,
            det_variant: DetVariant::Theorem,
            working: WorkingPrecision::default_for(format),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub report: BoundReport,
    /// Inputs whose value changed when rounded into the target format.
    pub rounded_inputs: usize,
    /// Largest `|δ_k| / u`, when a full trace was kept.
    pub max_delta_over_u: Option<f64>,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn to_row(&self) -> SweepRow {
        SweepRow::from_report(&self.report, None, 0, 0)
    }
}

/// Rounds each input once into the target format, then sums and bounds.
pub fn analyze(values: &[f64], options: &AnalysisOptions) -> Result<Analysis> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let format = options.format;
    let mut rounded_inputs = 0;
    let x: Vec<TargetValue> = values
        .iter()
        .map(|&v| {
            let t = TargetValue::round_from(v, format)?;
            rounded_inputs += (t.value() != v) as usize;
            Ok(t)
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    if rounded_inputs > 0 {
        warnings.push(format!("{rounded_inputs} input(s) rounded into {format}"));
    }

    let (z_hat, z_exact, subnormal, max_delta_over_u) = if x.len() <= FULL_TRACE_LIMIT {
        let trace = run_summation(&x)?;
        let u = format.unit_roundoff().to_rational();
        let max = crate::trace::extract_deltas(&trace)
            .iter()
            .map(|d| num_traits::Signed::abs(d) / &u)
            .max()
            .map_or(0.0, |r| {
                num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::INFINITY)
            });
        (
            trace.z_hat()[x.len() - 1].value(),
            trace.z_exact()[x.len() - 1].clone(),
            !trace.subnormal_steps().is_empty(),
            Some(max),
        )
    } else {
        let mut stream = SummationStream::new(format);
        for v in &x {
            stream.push_value(*v)?;
        }
        (
            stream.computed().value(),
            stream.exact(),
            stream.subnormal_step_count() > 0,
            None,
        )
    };
    if subnormal {
        warnings.push("a partial sum fell below the normal range".into());
    }

    let report = match options.working {
        WorkingPrecision::F64 => report_with::<f64>(&x, options, z_hat, z_exact, subnormal),
        WorkingPrecision::Wide256 => report_with::<Wide256>(&x, options, z_hat, z_exact, subnormal),
        WorkingPrecision::Exact => report_with::<Dyadic>(&x, options, z_hat, z_exact, subnormal),
    }?;
    if report.zero_sum {
        warnings.push("exact sum is zero; error and bounds are absolute".into());
    }
    Ok(Analysis {
        report,
        rounded_inputs,
        max_delta_over_u,
        warnings,
    })
}

fn report_with<S: WorkingScalar>(
    x: &[TargetValue],
    options: &AnalysisOptions,
    z_hat: f64,
    z_exact: Dyadic,
    subnormal: bool,
) -> Result<BoundReport> {
    let mut acc = BoundAccumulators::<S>::new(options.format);
    for v in x {
        acc.update(&S::from_f64(v.value().abs()));
    }
    BoundReport::new(
        options.format,
        &acc,
        z_hat,
        z_exact,
        options.failure_prob,
        options.det_variant,
        subnormal,
    )
}
