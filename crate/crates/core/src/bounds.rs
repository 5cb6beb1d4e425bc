//! Forward-error bounds for sequential summation.
//!
//! With `u` the unit roundoff and `S_k = Σ_{ℓ≤k} |x_ℓ|`, the per-step weights
//! are
//!
//! ```text
//! c_1 = 0,  c_k = u S_k                        (2 <= k <= n)
//! m_1 = |x_1| + |x_2|,  m_k = m_{k-1}(1+u) + |x_{k+1}|   (1 <= k <= n-1)
//! ```
//!
//! and the three relative bounds on `|ẑ_n - z_n| / |z_n|` are
//!
//! ```text
//! deterministic   Σ c_k / |z_n|            (times √n in the graphs variant)
//! azuma           r(Σ c_k²) / |z_n|
//! martingale      u r(Σ m_k²) / |z_n|
//! r(w)            = sqrt(2 ln(2/δ)) sqrt(w)
//! ```
//!
//! The deterministic bound always holds while `|δ_k| <= u`; the other two
//! hold with probability at least `1 - δ` under a model of independent,
//! zero-mean rounding errors.
//!
//! The recurrence for `m_k` is equivalent to the power-sum closed form
//! `|x_1|(1+u)^(k-1) + Σ_{j=2}^{k+1} |x_j|(1+u)^(k-j+1)` and costs O(1) per
//! element.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::Dyadic;
use crate::precision::FloatFormat;

/// Arithmetic used by [`BoundAccumulators`].
///
/// Every input is a target-format value and every scaling is by a power of
/// two, so implementors need only addition, multiplication, and exact
/// binary scaling.
pub trait WorkingScalar: Clone + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    /// Exact for any finite binary64 value.
    fn from_f64(x: f64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn mul_pow2(&self, k: i32) -> Self;
    fn to_f64(&self) -> f64;
}

impl WorkingScalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    #[inline]
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    #[inline]
    fn mul_pow2(&self, k: i32) -> Self {
        crate::exact::scale_pow2(*self, k as i64)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl WorkingScalar for Dyadic {
    fn zero() -> Self {
        Dyadic::zero()
    }

    fn from_f64(x: f64) -> Self {
        Dyadic::from_f64(x).expect("finite input")
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn mul_pow2(&self, k: i32) -> Self {
        Dyadic::mul_pow2(self, k as i64)
    }

    fn to_f64(&self) -> f64 {
        Dyadic::to_f64(self)
    }
}

/// Binary floating point with a 256-bit significand and unbounded exponent,
/// rounding to nearest even after every operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wide256(Dyadic);

impl Wide256 {
    pub const BITS: u32 = 256;

    pub fn as_dyadic(&self) -> &Dyadic {
        &self.0
    }
}

impl WorkingScalar for Wide256 {
    fn zero() -> Self {
        Wide256(Dyadic::zero())
    }

    fn from_f64(x: f64) -> Self {
        Wide256(Dyadic::from_f64(x).expect("finite input"))
    }

    fn add(&self, rhs: &Self) -> Self {
        Wide256((&self.0 + &rhs.0).round_to_bits(Self::BITS))
    }

    fn mul(&self, rhs: &Self) -> Self {
        Wide256((&self.0 * &rhs.0).round_to_bits(Self::BITS))
    }

    fn mul_pow2(&self, k: i32) -> Self {
        Wide256(self.0.mul_pow2(k as i64))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

/// Which arithmetic evaluates the accumulators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WorkingPrecision {
    /// binary64.
    F64,
    /// 256-bit significand.
    Wide256,
    /// Exact dyadic arithmetic. Mantissas of `m_k` grow by `t` bits per
    /// element, so cost is quadratic in `n`.
    Exact,
}

impl WorkingPrecision {
    /// binary64 for half and single targets, 256 bits for double.
    pub fn default_for(format: FloatFormat) -> Self {
        match format {
            FloatFormat::Double => WorkingPrecision::Wide256,
            _ => WorkingPrecision::F64,
        }
    }
}

/// Running sums behind the three bounds, advanced once per summand.
#[derive(Clone, Debug)]
pub struct BoundAccumulators<S> {
    k: u64,
    k_m: u64,
    u_exp: i32,
    abs_sum: S,
    c_sum: S,
    c_sq_sum: S,
    // |x_1| after one element, then m_{k-1}.
    m_current: S,
    m_sq_sum: S,
}

impl<S: WorkingScalar> BoundAccumulators<S> {
    pub fn new(format: FloatFormat) -> Self {
        Self::with_unit_roundoff_exponent(format.precision_bits() as i32)
    }

    /// Accumulators for `u = 2^-t`.
    pub fn with_unit_roundoff_exponent(t: i32) -> Self {
        BoundAccumulators {
            k: 0,
            k_m: 0,
            u_exp: -t,
            abs_sum: S::zero(),
            c_sum: S::zero(),
            c_sq_sum: S::zero(),
            m_current: S::zero(),
            m_sq_sum: S::zero(),
        }
    }

    /// Advances every accumulator by one element with magnitude `abs_x`.
    pub fn update(&mut self, abs_x: &S) {
        self.update_c(abs_x);
        self.update_m(abs_x);
    }

    /// Advances the `c_k` side only (`Σ|x|`, `Σ c`, `Σ c²`).
    pub fn update_c(&mut self, abs_x: &S) {
        self.k += 1;
        self.abs_sum = self.abs_sum.add(abs_x);
        if self.k >= 2 {
            let c = self.abs_sum.mul_pow2(self.u_exp);
            self.c_sq_sum = self.c_sq_sum.add(&c.mul(&c));
            self.c_sum = self.c_sum.add(&c);
        }
    }

    /// Advances the `m_k` side only (`m`, `Σ m²`).
    pub fn update_m(&mut self, abs_x: &S) {
        self.k_m += 1;
        self.m_current = match self.k_m {
            1 => abs_x.clone(),
            2 => self.m_current.add(abs_x),
            _ => {
                let grown = self.m_current.add(&self.m_current.mul_pow2(self.u_exp));
                grown.add(abs_x)
            }
        };
        if self.k_m >= 2 {
            self.m_sq_sum = self.m_sq_sum.add(&self.m_current.mul(&self.m_current));
        }
    }

    /// Convenience for a target value of either sign.
    pub fn push(&mut self, x: f64) {
        self.update(&S::from_f64(x.abs()));
    }

    /// Elements seen; the larger of the two sides' counts.
    pub fn count(&self) -> u64 {
        self.k.max(self.k_m)
    }

    pub fn unit_roundoff_exponent(&self) -> i32 {
        self.u_exp
    }

    pub fn abs_sum(&self) -> &S {
        &self.abs_sum
    }

    /// `Σ_{k≤n} c_k`.
    pub fn c_sum(&self) -> &S {
        &self.c_sum
    }

    /// `Σ_{k≤n} c_k²`.
    pub fn c_sq_sum(&self) -> &S {
        &self.c_sq_sum
    }

    /// `m_{n-1}`, or `None` before two elements have been seen.
    pub fn m_current(&self) -> Option<&S> {
        (self.k_m >= 2).then_some(&self.m_current)
    }

    /// `Σ_{k≤n-1} m_k²`.
    pub fn m_sq_sum(&self) -> &S {
        &self.m_sq_sum
    }

    fn u(&self) -> f64 {
        crate::exact::exp2i(self.u_exp)
    }
}

/// `Theorem` is `Σ c_k / |z_n|`; `Graphs` multiplies it by `√n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DetVariant {
    #[default]
    Theorem,
    Graphs,
}

impl DetVariant {
    pub fn name(self) -> &'static str {
        match self {
            DetVariant::Theorem => "theorem",
            DetVariant::Graphs => "graphs",
        }
    }
}

impl fmt::Display for DetVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(DetVariant::Theorem),
            "graphs" => Ok(DetVariant::Graphs),
            _ => Err(Error::Config(format!("unknown det variant {s:?}"))),
        }
    }
}

/// Default failure probability of the probabilistic bounds.
pub const DEFAULT_FAILURE_PROB: f64 = 1e-16;

fn check_failure_prob(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::FailureProbability(delta))
    }
}

fn check_sum(z_n: f64) -> Result<f64> {
    if z_n == 0.0 {
        Err(Error::ZeroSum)
    } else {
        Ok(z_n.abs())
    }
}

/// `sqrt(2 ln(2/δ)) sqrt(w)`, and exactly zero when `w = 0`.
pub fn concentration_radius(weights_sq_sum: f64, failure_prob: f64) -> Result<f64> {
    check_failure_prob(failure_prob)?;
    if weights_sq_sum == 0.0 {
        return Ok(0.0);
    }
    // ln(2/δ) = ln 2 - ln δ avoids overflow of 2/δ for tiny δ.
    let log_term = std::f64::consts::LN_2 - failure_prob.ln();
    Ok((2.0 * log_term).sqrt() * weights_sq_sum.sqrt())
}

/// Absolute deterministic bound `Σ c_k` (times `√n` for the graphs variant).
pub fn det_bound_abs<S: WorkingScalar>(acc: &BoundAccumulators<S>, variant: DetVariant) -> f64 {
    let c = acc.c_sum.to_f64();
    match variant {
        DetVariant::Theorem => c,
        DetVariant::Graphs => (acc.count() as f64).sqrt() * c,
    }
}

pub fn det_bound<S: WorkingScalar>(
    acc: &BoundAccumulators<S>,
    z_n: f64,
    variant: DetVariant,
) -> Result<f64> {
    let z = check_sum(z_n)?;
    Ok(det_bound_abs(acc, variant) / z)
}

pub fn azuma_bound_abs<S: WorkingScalar>(
    acc: &BoundAccumulators<S>,
    failure_prob: f64,
) -> Result<f64> {
    concentration_radius(acc.c_sq_sum.to_f64(), failure_prob)
}

pub fn azuma_bound<S: WorkingScalar>(
    acc: &BoundAccumulators<S>,
    z_n: f64,
    failure_prob: f64,
) -> Result<f64> {
    check_failure_prob(failure_prob)?;
    let z = check_sum(z_n)?;
    Ok(azuma_bound_abs(acc, failure_prob)? / z)
}

pub fn martingale_bound_abs<S: WorkingScalar>(
    acc: &BoundAccumulators<S>,
    failure_prob: f64,
) -> Result<f64> {
    Ok(acc.u() * concentration_radius(acc.m_sq_sum.to_f64(), failure_prob)?)
}

pub fn martingale_bound<S: WorkingScalar>(
    acc: &BoundAccumulators<S>,
    z_n: f64,
    failure_prob: f64,
) -> Result<f64> {
    check_failure_prob(failure_prob)?;
    let z = check_sum(z_n)?;
    Ok(martingale_bound_abs(acc, failure_prob)? / z)
}

/// All three bounds and the realized error for one summation.
///
/// When the exact sum is zero the relative quantities are undefined; the
/// report then carries absolute error and absolute bounds, with
/// `zero_sum` set.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub format: FloatFormat,
    pub n: u64,
    pub true_rel_err: f64,
    pub det_bound: f64,
    pub azuma_bound: f64,
    pub martingale_bound: f64,
    pub failure_prob: f64,
    pub det_variant: DetVariant,
    pub z_n_exact: Dyadic,
    pub z_hat_n: f64,
    pub sum_abs_x: f64,
    pub zero_sum: bool,
    pub subnormal: bool,
}

impl BoundReport {
    /// Assembles the report from finished accumulators and the two sums.
    pub fn new<S: WorkingScalar>(
        format: FloatFormat,
        acc: &BoundAccumulators<S>,
        z_hat_n: f64,
        z_n_exact: Dyadic,
        failure_prob: f64,
        det_variant: DetVariant,
        subnormal: bool,
    ) -> Result<Self> {
        check_failure_prob(failure_prob)?;
        let err = (&Dyadic::from_f64(z_hat_n).ok_or(Error::NonFinite(z_hat_n))? - &z_n_exact).abs();
        let zero_sum = z_n_exact.is_zero();
        let det = det_bound_abs(acc, det_variant);
        let azuma = azuma_bound_abs(acc, failure_prob)?;
        let mart = martingale_bound_abs(acc, failure_prob)?;
        let (true_rel_err, det, azuma, mart) = if zero_sum {
            (err.to_f64(), det, azuma, mart)
        } else {
            let z = z_n_exact.to_f64().abs();
            (relative(&err, &z_n_exact), det / z, azuma / z, mart / z)
        };
        Ok(BoundReport {
            format,
            n: acc.count(),
            true_rel_err,
            det_bound: det,
            azuma_bound: azuma,
            martingale_bound: mart,
            failure_prob,
            det_variant,
            z_n_exact,
            z_hat_n,
            sum_abs_x: acc.abs_sum.to_f64(),
            zero_sum,
            subnormal,
        })
    }
}

/// `|err| / |z|` rounded once from the exact quotient.
fn relative(err: &Dyadic, z: &Dyadic) -> f64 {
    use num_traits::ToPrimitive;
    if err.is_zero() {
        return 0.0;
    }
    err.div(&z.abs()).to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: f64 = 1.0 / 16777216.0; // single precision
    const DELTA_E: f64 = 2.0 / std::f64::consts::E;

    fn acc_of<S: WorkingScalar>(xs: &[f64]) -> BoundAccumulators<S> {
        let mut acc = BoundAccumulators::<S>::new(FloatFormat::Single);
        for &x in xs {
            acc.push(x);
        }
        acc
    }

    fn d(x: f64) -> Dyadic {
        Dyadic::from_f64(x).unwrap()
    }

    #[test]
    fn accumulators_after_two_ones() {
        let acc = acc_of::<Dyadic>(&[1.0, 1.0]);
        assert_eq!(acc.c_sum(), &d(2.0 * U));
        assert_eq!(acc.c_sq_sum(), &d(4.0 * U * U));
        assert_eq!(acc.m_current(), Some(&d(2.0)));
        assert_eq!(acc.m_sq_sum(), &d(4.0));
    }

    #[test]
    fn accumulators_after_three_ones() {
        let acc = acc_of::<Dyadic>(&[1.0, 1.0, 1.0]);
        assert_eq!(acc.c_sum(), &d(5.0 * U));
        let m2 = &(&d(2.0) * &(&Dyadic::one() + &d(U))) + &Dyadic::one();
        assert_eq!(acc.m_current(), Some(&m2));
    }

    #[test]
    fn zero_input_leaves_everything_zero() {
        let acc = acc_of::<Dyadic>(&[0.0, 0.0, 0.0]);
        for v in [acc.abs_sum(), acc.c_sum(), acc.c_sq_sum(), acc.m_sq_sum()] {
            assert!(v.is_zero());
        }
        assert!(acc.m_current().unwrap().is_zero());
    }

    #[test]
    fn det_bound_examples() {
        let acc = acc_of::<f64>(&[1.0, 1.0]);
        assert_eq!(det_bound(&acc, 2.0, DetVariant::Theorem).unwrap(), U);
        assert_eq!(
            det_bound(&acc, 2.0, DetVariant::Graphs).unwrap(),
            U * 2f64.sqrt()
        );
        let acc = acc_of::<f64>(&[1.0, 1.0, 1.0]);
        assert_eq!(
            det_bound(&acc, 3.0, DetVariant::Theorem).unwrap(),
            5.0 * U / 3.0
        );
        let acc = acc_of::<f64>(&[3.0]);
        assert_eq!(det_bound(&acc, 3.0, DetVariant::Theorem).unwrap(), 0.0);
        assert!(matches!(
            det_bound(&acc, 0.0, DetVariant::Theorem),
            Err(Error::ZeroSum)
        ));
    }

    #[test]
    fn radius_edge_cases() {
        assert_eq!(concentration_radius(0.0, 0.3).unwrap(), 0.0);
        for bad in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(matches!(
                concentration_radius(1.0, bad),
                Err(Error::FailureProbability(_))
            ));
        }
        // δ at the bottom of the normal range still yields a finite radius.
        assert!(concentration_radius(1.0, f64::MIN_POSITIVE)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn probabilistic_examples_with_two_ones() {
        let acc = acc_of::<f64>(&[1.0, 1.0]);
        let sqrt2 = 2f64.sqrt();
        let az = azuma_bound(&acc, 2.0, DELTA_E).unwrap();
        assert!((az / (U * sqrt2) - 1.0).abs() < 4.0 * f64::EPSILON);
        let mg = martingale_bound(&acc, 2.0, DELTA_E).unwrap();
        assert!((mg / (U * sqrt2) - 1.0).abs() < 4.0 * f64::EPSILON);
    }

    #[test]
    fn martingale_with_three_ones() {
        let acc = acc_of::<f64>(&[1.0, 1.0, 1.0]);
        let m2 = 2.0 * (1.0 + U) + 1.0;
        let expect = U * 2f64.sqrt() * (4.0 + m2 * m2).sqrt() / 3.0;
        let got = martingale_bound(&acc, 3.0, DELTA_E).unwrap();
        assert!((got / expect - 1.0).abs() < 4.0 * f64::EPSILON);
    }

    #[test]
    fn single_element_bounds_vanish() {
        let acc = acc_of::<f64>(&[5.0]);
        assert_eq!(azuma_bound(&acc, 5.0, 0.1).unwrap(), 0.0);
        assert_eq!(martingale_bound(&acc, 5.0, 0.1).unwrap(), 0.0);
        assert!(acc.m_current().is_none());
    }

    #[test]
    fn split_paths_match_combined_update() {
        let xs = [0.5, -1.25, 3.0, 1e-3, 7.5];
        let combined = acc_of::<Dyadic>(&xs);
        let mut c_only = BoundAccumulators::<Dyadic>::new(FloatFormat::Single);
        let mut m_only = BoundAccumulators::<Dyadic>::new(FloatFormat::Single);
        for &x in &xs {
            c_only.update_c(&d(x.abs()));
            m_only.update_m(&d(x.abs()));
        }
        assert_eq!(c_only.c_sum(), combined.c_sum());
        assert_eq!(c_only.c_sq_sum(), combined.c_sq_sum());
        assert_eq!(m_only.m_sq_sum(), combined.m_sq_sum());
        assert_eq!(combined.count(), 5);
    }

    #[test]
    fn wide_precision_tracks_exact() {
        let xs: Vec<f64> = (1..50).map(|i| (i as f64).sqrt() as f32 as f64).collect();
        let exact = acc_of::<Dyadic>(&xs);
        let wide = acc_of::<Wide256>(&xs);
        let fast = acc_of::<f64>(&xs);
        assert_eq!(wide.m_sq_sum().to_f64(), exact.m_sq_sum().to_f64());
        let rel = (fast.m_sq_sum() / exact.m_sq_sum().to_f64() - 1.0).abs();
        assert!(rel < 1e-13);
    }

    #[test]
    fn report_switches_to_absolute_on_zero_sum() {
        let xs = [1.0, -1.0];
        let acc = acc_of::<f64>(&xs);
        let r = BoundReport::new(
            FloatFormat::Single,
            &acc,
            0.0,
            Dyadic::zero(),
            0.5,
            DetVariant::Theorem,
            false,
        )
        .unwrap();
        assert!(r.zero_sum);
        assert_eq!(r.true_rel_err, 0.0);
        assert_eq!(r.det_bound, 2.0 * U);
    }
}
