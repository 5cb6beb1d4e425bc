//! Sequential floating-point summation in a simulated target precision,
//! paired with deterministic and probabilistic forward-error bounds and
//! exact-arithmetic oracles that check them.
//!
//! Summands live in half, single, or double precision and are added left to
//! right with round-to-nearest-even. Alongside the computed sum the library
//! tracks the exact sum and three relative-error bounds: a worst-case bound
//! linear in `n`, an Azuma-Hoeffding bound, and a martingale bound built
//! from an `O(1)`-per-step recurrence.
//!
//! ```
//! use sumbound::{analyze, AnalysisOptions, FloatFormat};
//!
//! let a = analyze(&[1.0, 1.0, 1.0], &AnalysisOptions::new(FloatFormat::Single)).unwrap();
//! assert_eq!(a.report.true_rel_err, 0.0);
//! assert!(a.report.martingale_bound < a.report.det_bound * 10.0);
//! ```

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod io;
pub mod oracle;
pub mod plot;
pub mod precision;
pub mod trace;
pub mod validation;

pub use analysis::{analyze, Analysis, AnalysisOptions};
pub use bounds::{
    azuma_bound, concentration_radius, det_bound, martingale_bound, BoundAccumulators, BoundReport,
    DetVariant, Wide256, WorkingPrecision, WorkingScalar, DEFAULT_FAILURE_PROB,
};
pub use error::{Error, Result};
pub use exact::{Dyadic, LongAccumulator};
pub use experiments::{
    clopper_pearson_upper, estimate_failure_rate, generate, run_point, run_sweep, BoundId,
    Distribution, ExperimentConfig, FailureRateReport, NGrid, RowFlags, Sampler, SweepRow,
};
pub use precision::{round_add, unit_roundoff, FloatFormat, TargetValue};
pub use trace::{decompose_error, extract_deltas, run_summation, SummationStream, SummationTrace};
