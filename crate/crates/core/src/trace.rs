//! Sequential summation in target precision alongside an exact reference.
//!
//! For `x_1..x_n` the computed partial sums are `ẑ_1 = x_1` and
//! `ẑ_k = fl(ẑ_{k-1} + x_k)`, the exact ones `z_k = z_{k-1} + x_k`. Each
//! rounded addition realizes `ẑ_k = (ẑ_{k-1} + x_k)(1 + δ_k)`.
//!
//! [`run_summation`] keeps every step. [`SummationStream`] keeps O(1) state
//! and is what the experiment driver uses for large `n`.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{Dyadic, LongAccumulator};
use crate::precision::{FloatFormat, TargetValue};

/// Traces longer than this are streamed rather than retained by callers
/// that choose between the two (see `analysis`).
pub const DEFAULT_TRACE_MAX: usize = 100_000;

/// Per-step record of one sequential summation.
#[derive(Clone, Debug)]
pub struct SummationTrace {
    format: FloatFormat,
    x: Vec<TargetValue>,
    z_hat: Vec<TargetValue>,
    z_exact: Vec<Dyadic>,
    subnormal_steps: Vec<usize>,
}

impl SummationTrace {
    pub fn format(&self) -> FloatFormat {
        self.format
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[TargetValue] {
        &self.x
    }

    /// Computed partial sums; `z_hat()[k - 1]` is `ẑ_k`.
    pub fn z_hat(&self) -> &[TargetValue] {
        &self.z_hat
    }

    /// Exact partial sums; `z_exact()[k - 1]` is `z_k`.
    pub fn z_exact(&self) -> &[Dyadic] {
        &self.z_exact
    }

    /// 1-based steps whose computed partial sum is subnormal.
    pub fn subnormal_steps(&self) -> &[usize] {
        &self.subnormal_steps
    }

    pub fn is_subnormal_step(&self, k: usize) -> bool {
        self.subnormal_steps.binary_search(&k).is_ok()
    }

    /// `ẑ_{k-1} + x_k`, exactly, for `2 <= k <= n`.
    pub fn pre_rounding_sum(&self, k: usize) -> Dyadic {
        &self.z_hat[k - 2].to_dyadic() + &self.x[k - 1].to_dyadic()
    }

    /// `ẑ_n - z_n`, exactly.
    pub fn final_error(&self) -> Dyadic {
        &self.z_hat[self.n() - 1].to_dyadic() - &self.z_exact[self.n() - 1]
    }

    /// `ẑ_k - z_k` for every `1 <= k <= n`.
    pub fn partial_errors(&self) -> Vec<Dyadic> {
        self.z_hat
            .iter()
            .zip(&self.z_exact)
            .map(|(h, z)| &h.to_dyadic() - z)
            .collect()
    }
}

/// Runs the sequential summation, retaining every partial sum.
pub fn run_summation(x: &[TargetValue]) -> Result<SummationTrace> {
    let first = *x.first().ok_or(Error::EmptyInput)?;
    let format = first.format();
    let mut z_hat = Vec::with_capacity(x.len());
    let mut z_exact = Vec::with_capacity(x.len());
    let mut subnormal_steps = Vec::new();

    for (i, &xk) in x.iter().enumerate() {
        let step = i + 1;
        if xk.format() != format {
            return Err(Error::FormatMismatch {
                left: format,
                right: xk.format(),
            });
        }
        let (hat, exact) = match z_hat.last() {
            None => (xk, xk.to_dyadic()),
            Some(&prev) => {
                let hat = crate::precision::round_add(prev, xk).map_err(|e| at_step(e, step))?;
                let exact = &z_exact[i - 1] + &xk.to_dyadic();
                (hat, exact)
            }
        };
        if hat.is_subnormal() {
            subnormal_steps.push(step);
        }
        z_hat.push(hat);
        z_exact.push(exact);
    }

    Ok(SummationTrace {
        format,
        x: x.to_vec(),
        z_hat,
        z_exact,
        subnormal_steps,
    })
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::Overflow { format, .. } => Error::Overflow {
            format,
            step: Some(step),
        },
        other => other,
    }
}

/// Realized rounding errors `δ_2..δ_n`; element `i` is `δ_{i+2}`.
///
/// `δ_k = ẑ_k / (ẑ_{k-1} + x_k) - 1`, and zero when the exact operand sum
/// vanishes (the rounded result is then exactly zero as well).
pub fn extract_deltas(trace: &SummationTrace) -> Vec<BigRational> {
    (2..=trace.n())
        .map(|k| {
            let s = trace.pre_rounding_sum(k);
            if s.is_zero() {
                BigRational::zero()
            } else {
                (&trace.z_hat[k - 1].to_dyadic() - &s).div(&s)
            }
        })
        .collect()
}

/// Two decompositions of the final error `ẑ_n - z_n`.
#[derive(Clone, Debug)]
pub struct ErrorDecomposition {
    /// `δ_k (ẑ_{k-1} + x_k)` for `2 <= k <= n`: the increments `M_k - M_{k-1}`.
    pub m_terms: Vec<Dyadic>,
    /// Sum of `m_terms`; equals `ẑ_n - z_n` exactly.
    pub m_total: Dyadic,
    /// First-order terms `Z_k = δ_k z_k` for `2 <= k <= n`.
    pub z_terms: Vec<BigRational>,
    pub z_total: BigRational,
    /// `(ẑ_n - z_n) - Σ Z_k`, which is second order in `u`.
    pub residual: BigRational,
}

pub fn decompose_error(trace: &SummationTrace) -> ErrorDecomposition {
    let deltas = extract_deltas(trace);
    let m_terms: Vec<Dyadic> = (2..=trace.n())
        .map(|k| &trace.z_hat[k - 1].to_dyadic() - &trace.pre_rounding_sum(k))
        .collect();
    let m_total: Dyadic = m_terms.iter().cloned().sum();
    let z_terms: Vec<BigRational> = deltas
        .iter()
        .zip(&trace.z_exact[1..])
        .map(|(d, z)| d * z.to_rational())
        .collect();
    let z_total = z_terms.iter().fold(BigRational::zero(), |acc, z| acc + z);
    let residual = trace.final_error().to_rational() - &z_total;
    ErrorDecomposition {
        m_terms,
        m_total,
        z_terms,
        z_total,
        residual,
    }
}

/// Constant-memory sequential summation.
///
/// Tracks the computed sum, the exact sum, and whether any step left the
/// normal range. Overflow is reported with its 1-based step index.
#[derive(Clone, Debug)]
pub struct SummationStream {
    format: FloatFormat,
    k: usize,
    computed: f64,
    exact: LongAccumulator,
    subnormal_steps: usize,
}

impl SummationStream {
    pub fn new(format: FloatFormat) -> Self {
        SummationStream {
            format,
            k: 0,
            computed: 0.0,
            exact: LongAccumulator::new(),
            subnormal_steps: 0,
        }
    }

    /// Adds the next summand. The value must be representable in the format.
    #[inline]
    pub fn push(&mut self, x: f64) -> Result<()> {
        debug_assert!(self.format.is_representable(x));
        self.k += 1;
        self.computed = if self.k == 1 {
            x
        } else {
            self.format
                .add_raw(self.computed, x)
                .map_err(|e| at_step(e, self.k))?
        };
        if self.format.is_subnormal(self.computed) {
            self.subnormal_steps += 1;
        }
        self.exact.add(x);
        Ok(())
    }

    pub fn push_value(&mut self, x: TargetValue) -> Result<()> {
        if x.format() != self.format {
            return Err(Error::FormatMismatch {
                left: self.format,
                right: x.format(),
            });
        }
        self.push(x.value())
    }

    pub fn format(&self) -> FloatFormat {
        self.format
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    /// `ẑ_k` for the elements seen so far.
    pub fn computed(&self) -> TargetValue {
        TargetValue::new_unchecked(self.computed, self.format)
    }

    /// `z_k`, exactly.
    pub fn exact(&self) -> Dyadic {
        self.exact.to_dyadic()
    }

    pub fn exact_accumulator(&self) -> &LongAccumulator {
        &self.exact
    }

    pub fn subnormal_step_count(&self) -> usize {
        self.subnormal_steps
    }
}
