//! Exact reference computations.
//!
//! These routines deliberately avoid the code paths they are used to check:
//! sums go through `BigRational` rather than [`crate::exact`], and the `m_k`
//! and `ẑ_k` bounds are evaluated as explicit power sums rather than by the
//! O(1) recurrences in [`crate::bounds`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::Dyadic;
use crate::precision::{FloatFormat, TargetValue};

/// Arbitrary-precision rational, closed under the four operations.
pub type ExactScalar = BigRational;

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or(Error::NonFinite(x))
}

/// `Σ x_k` with no rounding at all.
pub fn exact_sum(x: &[TargetValue]) -> ExactScalar {
    x.iter().fold(BigRational::zero(), |acc, v| {
        acc + rational(v.value()).expect("target values are finite")
    })
}

/// Neumaier's compensated summation in binary64.
///
/// An inexact second opinion: for target-format data its result is within a
/// few binary64 ulps of the exact sum.
pub fn neumaier_sum(x: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in x {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Evaluates `Σ a_j (1+u)^{e_j}` exactly over one common denominator.
struct PowerSum {
    // u = p / q in lowest terms, so 1 + u = (q + p) / q.
    q: BigInt,
    q_shift: Option<usize>,
    growth_powers: Vec<BigInt>,
}

impl PowerSum {
    fn new(u: &BigRational, max_exponent: usize) -> Result<Self> {
        if u.is_negative() {
            return Err(Error::Config("unit roundoff must be nonnegative".into()));
        }
        let q = u.denom().clone();
        let base = &q + u.numer();
        let mut growth_powers = Vec::with_capacity(max_exponent + 1);
        let mut acc = BigInt::one();
        for _ in 0..=max_exponent {
            growth_powers.push(acc.clone());
            acc *= &base;
        }
        let q_shift =
            (q.magnitude().count_ones() == 1).then(|| q.trailing_zeros().unwrap_or(0) as usize);
        Ok(PowerSum {
            q,
            q_shift,
            growth_powers,
        })
    }

    fn q_pow_times(&self, f: usize, v: BigInt) -> BigInt {
        match self.q_shift {
            Some(s) => v << (s * f),
            None => v * num_traits::pow(self.q.clone(), f),
        }
    }

    fn eval(&self, terms: &[(&BigRational, usize)]) -> BigRational {
        let top = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let lcm = terms
            .iter()
            .fold(BigInt::one(), |l, (a, _)| l.lcm(a.denom()));
        let mut numer = BigInt::zero();
        for &(a, e) in terms {
            let scaled = a.numer() * (&lcm / a.denom());
            numer += self.q_pow_times(top - e, scaled * &self.growth_powers[e]);
        }
        let denom = self.q_pow_times(top, lcm);
        reduce_pow2(numer, denom)
    }
}

// A power-of-two denominator reduces by a shift; anything else takes a gcd.
fn reduce_pow2(numer: BigInt, denom: BigInt) -> BigRational {
    if denom.magnitude().count_ones() != 1 {
        return BigRational::new(numer, denom);
    }
    let dz = denom.trailing_zeros().unwrap_or(0);
    let shift = numer.trailing_zeros().map_or(dz, |nz| nz.min(dz));
    BigRational::new_raw(numer >> shift, denom >> shift)
}

fn abs_rationals(x: &[f64]) -> Result<Vec<BigRational>> {
    x.iter().map(|&v| rational(v.abs())).collect()
}

/// `m_k = |x_1|(1+u)^(k-1) + Σ_{j=2}^{k+1} |x_j|(1+u)^(k-j+1)`, `1 <= k <= n-1`.
pub fn m_closed_form(x: &[f64], k: usize, u: &BigRational) -> Result<ExactScalar> {
    let n = x.len();
    if k < 1 || k + 1 > n {
        return Err(Error::Index {
            index: k,
            lo: 1,
            hi: n.saturating_sub(1),
        });
    }
    let abs = abs_rationals(&x[..=k])?;
    let ps = PowerSum::new(u, k)?;
    Ok(ps.eval(&m_terms(&abs, k)))
}

/// `m_1 ..= m_{k_max}` sharing one table of growth powers.
pub fn m_closed_forms(x: &[f64], k_max: usize, u: &BigRational) -> Result<Vec<ExactScalar>> {
    if k_max + 1 > x.len() {
        return Err(Error::Index {
            index: k_max,
            lo: 1,
            hi: x.len().saturating_sub(1),
        });
    }
    let abs = abs_rationals(&x[..=k_max])?;
    let ps = PowerSum::new(u, k_max)?;
    Ok((1..=k_max).map(|k| ps.eval(&m_terms(&abs, k))).collect())
}

fn m_terms(abs: &[BigRational], k: usize) -> Vec<(&BigRational, usize)> {
    // 1-based x_j has exponent k - j + 1 for j >= 2 and k - 1 for j = 1.
    std::iter::once((&abs[0], k - 1))
        .chain((2..=k + 1).map(|j| (&abs[j - 1], k + 1 - j)))
        .collect()
}

/// Upper bound on `|ẑ_k|`: `|x_1|(1+u)^(k-1) + Σ_{j=2}^{k} |x_j|(1+u)^(k-j+1)`.
pub fn zhat_envelope(x: &[f64], k: usize, u: &BigRational) -> Result<ExactScalar> {
    if k < 1 || k > x.len() {
        return Err(Error::Index {
            index: k,
            lo: 1,
            hi: x.len(),
        });
    }
    let abs = abs_rationals(&x[..k])?;
    let ps = PowerSum::new(u, k)?;
    Ok(ps.eval(&envelope_terms(&abs, k)))
}

/// Envelopes for every `1 <= k <= n`.
pub fn zhat_envelopes(x: &[f64], u: &BigRational) -> Result<Vec<ExactScalar>> {
    let abs = abs_rationals(x)?;
    let ps = PowerSum::new(u, x.len())?;
    Ok((1..=x.len())
        .map(|k| ps.eval(&envelope_terms(&abs, k)))
        .collect())
}

fn envelope_terms(abs: &[BigRational], k: usize) -> Vec<(&BigRational, usize)> {
    std::iter::once((&abs[0], k - 1))
        .chain((2..=k).map(|j| (&abs[j - 1], k + 1 - j)))
        .collect()
}

/// Splits a finite binary64 value into `(m, s)` with `x = m / 2^s`.
fn dyadic_parts(x: f64) -> Result<(BigInt, u64)> {
    let r = rational(x)?;
    let s = r.denom().trailing_zeros().unwrap_or(0);
    Ok((r.numer().clone(), s))
}

/// Per step, whether `|ẑ_k|` lies within the envelope of [`zhat_envelope`].
///
/// Same quantity as [`zhat_envelopes`] through a different route. With
/// `g = 1 + u = G/q` and `K = n + 1`, the envelope is
/// `g^(k+1) P_k` where `P_k = |x_1| g^-2 + Σ_{j=2}^{k} |x_j| g^-j`.
/// Scaling `P_k` by `G^K` turns it into an integer prefix sum with weights
/// `T_j = q^j G^(K-j)`, so each step costs linear rather than quadratic
/// work and no fraction is ever reduced.
pub fn zhat_envelope_holds(x: &[f64], zhat: &[f64], u: &BigRational) -> Result<Vec<bool>> {
    let n = x.len();
    if zhat.len() != n {
        return Err(Error::Config(format!(
            "{n} summands but {} partial sums",
            zhat.len()
        )));
    }
    if u.is_negative() {
        return Err(Error::Config("unit roundoff must be nonnegative".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let q = u.denom().clone();
    let big_g = &q + u.numer();
    let k_top = n + 1;

    let parts: Vec<(BigInt, u64)> = x
        .iter()
        .map(|v| dyadic_parts(v.abs()))
        .collect::<Result<_>>()?;
    let scale = parts.iter().map(|p| p.1).max().unwrap_or(0);
    let a: Vec<BigInt> = parts.into_iter().map(|(m, s)| m << (scale - s)).collect();

    // weights[j] = q^j G^(K-j) for 0 <= j <= K.
    let mut weights = Vec::with_capacity(k_top + 1);
    let mut w = num_traits::pow(big_g.clone(), k_top);
    weights.push(w.clone());
    for _ in 0..k_top {
        w = &w * &q / &big_g;
        weights.push(w.clone());
    }

    let mut prefix = BigInt::zero();
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let e = if k == 1 { 2 } else { k };
        prefix += &a[k - 1] * &weights[e];
        // |ẑ_k| <= prefix / (2^scale T_{k+1})
        let (b, f) = dyadic_parts(zhat[k - 1].abs())?;
        let lhs = b * &weights[k + 1];
        let ok = if f >= scale {
            lhs <= &prefix << (f - scale)
        } else {
            lhs << (scale - f) <= prefix
        };
        out.push(ok);
    }
    Ok(out)
}

/// Result of enumerating every vector over a small value set.
#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveReport {
    pub n: usize,
    pub format: FloatFormat,
    pub vectors: u64,
    /// Vectors whose exact sum is zero. Still checked (absolute form).
    pub zero_sum: u64,
    /// Rounded additions checked against `|δ_k| <= u`.
    pub steps_checked: u64,
    /// Vectors skipped because a partial sum became subnormal.
    pub subnormal_vectors: u64,
    pub overflow_vectors: u64,
    pub delta_violations: u64,
    /// Vectors with `|ẑ_n - z_n| > Σ c_k`.
    pub bound_violations: u64,
    /// Largest `|ẑ_n - z_n| / Σ c_k` among vectors with `Σ c_k > 0`.
    pub max_ratio: f64,
    /// First violating vector in enumeration order.
    pub witness: Option<Vec<f64>>,
}

impl ExhaustiveReport {
    pub fn is_clean(&self) -> bool {
        self.delta_violations == 0 && self.bound_violations == 0
    }

    fn empty(n: usize, format: FloatFormat) -> Self {
        ExhaustiveReport {
            n,
            format,
            vectors: 0,
            zero_sum: 0,
            steps_checked: 0,
            subnormal_vectors: 0,
            overflow_vectors: 0,
            delta_violations: 0,
            bound_violations: 0,
            max_ratio: 0.0,
            witness: None,
        }
    }

    fn merge(mut self, other: ExhaustiveReport) -> Self {
        self.vectors += other.vectors;
        self.zero_sum += other.zero_sum;
        self.steps_checked += other.steps_checked;
        self.subnormal_vectors += other.subnormal_vectors;
        self.overflow_vectors += other.overflow_vectors;
        self.delta_violations += other.delta_violations;
        self.bound_violations += other.bound_violations;
        self.max_ratio = self.max_ratio.max(other.max_ratio);
        if self.witness.is_none() {
            self.witness = other.witness;
        }
        self
    }
}

/// Largest enumeration accepted by [`exhaustive_delta_check`].
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 24;

#[derive(Clone)]
struct Prefix {
    computed: f64,
    exact: Dyadic,
    abs_sum: Dyadic,
    c_sum: Dyadic,
    subnormal: bool,
    delta_ok: bool,
}

struct Enumeration<'a> {
    n: usize,
    format: FloatFormat,
    values: &'a [f64],
    u_exp: i64,
    path: Vec<f64>,
}

impl Enumeration<'_> {
    fn visit(&mut self, prefix: Prefix, report: &mut ExhaustiveReport) {
        if self.path.len() == self.n {
            self.finish(&prefix, report);
            return;
        }
        for &x in self.values {
            let xd = Dyadic::from_f64(x).expect("finite");
            let abs_sum = &prefix.abs_sum + &xd.abs();
            let next = if self.path.is_empty() {
                Prefix {
                    computed: x,
                    exact: xd.clone(),
                    abs_sum,
                    c_sum: Dyadic::zero(),
                    subnormal: self.format.is_subnormal(x),
                    delta_ok: true,
                }
            } else {
                let Ok(computed) = self.format.add_raw(prefix.computed, x) else {
                    report.overflow_vectors += self.remaining_leaves();
                    continue;
                };
                let operand_sum = &Dyadic::from_f64(prefix.computed).expect("finite") + &xd;
                let rounding = &Dyadic::from_f64(computed).expect("finite") - &operand_sum;
                let subnormal = prefix.subnormal || self.format.is_subnormal(computed);
                let mut delta_ok = prefix.delta_ok;
                if !self.format.is_subnormal(computed) {
                    report.steps_checked += 1;
                    // |ẑ_k - s| <= u |s|
                    if rounding.abs() > operand_sum.abs().mul_pow2(self.u_exp) {
                        report.delta_violations += 1;
                        delta_ok = false;
                    }
                }
                let c_k = abs_sum.mul_pow2(self.u_exp);
                Prefix {
                    computed,
                    exact: &prefix.exact + &xd,
                    c_sum: &prefix.c_sum + &c_k,
                    abs_sum,
                    subnormal,
                    delta_ok,
                }
            };
            self.path.push(x);
            self.visit(next, report);
            self.path.pop();
        }
    }

    fn remaining_leaves(&self) -> u64 {
        (self.values.len() as u64).pow((self.n - self.path.len() - 1) as u32)
    }

    fn finish(&self, p: &Prefix, report: &mut ExhaustiveReport) {
        report.vectors += 1;
        if p.exact.is_zero() {
            report.zero_sum += 1;
        }
        let mut violated = !p.delta_ok;
        if p.subnormal {
            report.subnormal_vectors += 1;
        } else {
            let err = (&Dyadic::from_f64(p.computed).expect("finite") - &p.exact).abs();
            if err > p.c_sum {
                report.bound_violations += 1;
                violated = true;
            } else if !p.c_sum.is_zero() {
                let ratio = err.to_f64() / p.c_sum.to_f64();
                report.max_ratio = report.max_ratio.max(ratio);
            }
        }
        if violated && report.witness.is_none() {
            report.witness = Some(self.path.clone());
        }
    }
}

/// Checks `|δ_k| <= u` and `|ẑ_n - z_n| <= Σ c_k` on every length-`n`
/// vector over `value_set`.
pub fn exhaustive_delta_check(
    n: usize,
    format: FloatFormat,
    value_set: &[TargetValue],
) -> Result<ExhaustiveReport> {
    if n == 0 || value_set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total = (value_set.len() as u64).checked_pow(n as u32);
    if total.is_none_or(|t| t > EXHAUSTIVE_LIMIT) {
        return Err(Error::Config(format!(
            "{}^{} vectors exceeds the enumeration limit {}",
            value_set.len(),
            n,
            EXHAUSTIVE_LIMIT
        )));
    }
    let mut values = Vec::with_capacity(value_set.len());
    for v in value_set {
        if v.format() != format {
            return Err(Error::FormatMismatch {
                left: format,
                right: v.format(),
            });
        }
        values.push(v.value());
    }
    let u_exp = -(format.precision_bits() as i64);

    // Partition on the first element; merge in enumeration order.
    let parts: Vec<ExhaustiveReport> = values
        .par_iter()
        .map(|&first| {
            let mut report = ExhaustiveReport::empty(n, format);
            let mut walk = Enumeration {
                n,
                format,
                values: &values,
                u_exp,
                path: vec![first],
            };
            let xd = Dyadic::from_f64(first).expect("finite");
            let start = Prefix {
                computed: first,
                exact: xd.clone(),
                abs_sum: xd.abs(),
                c_sum: Dyadic::zero(),
                subnormal: format.is_subnormal(first),
                delta_ok: true,
            };
            walk.visit(start, &mut report);
            report
        })
        .collect();
    Ok(parts
        .into_iter()
        .fold(ExhaustiveReport::empty(n, format), ExhaustiveReport::merge))
}
