//! Exact binary arithmetic.
//!
//! Every finite IEEE value is a dyadic rational `m * 2^e`, and so is every
//! sum, difference and product of such values. [`Dyadic`] keeps those
//! quantities exact with a normalized big-integer mantissa. Division leaves
//! the dyadic ring, so it returns a [`BigRational`].
//!
//! [`LongAccumulator`] is a fixed-point accumulator spanning the whole
//! binary64 range. It sums finite `f64` values exactly in O(1) per element
//! and is used on the hot paths where a `BigInt` per element would dominate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact value `mantissa * 2^exponent`.
///
/// Normalized so that the mantissa is odd, or zero with exponent zero. Two
/// equal values therefore have identical representations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

/// Outcome of rounding a [`Dyadic`] into a binary format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rounded {
    Finite(Dyadic),
    Overflow,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic::pow2(0)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: k,
        }
    }

    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        let mut d = Dyadic { mantissa, exponent };
        d.normalize();
        d
    }

    pub fn from_i64(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    /// Exact conversion of a finite `f64`; `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        let m = BigInt::from(m);
        Some(Dyadic::new(if negative { -m } else { m }, e))
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exponent += tz as i64;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mantissa.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// Multiplies by `2^k`; always exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + k,
        }
    }

    /// Exponent of the leading bit, `floor(log2 |self|)`. `None` for zero.
    pub fn leading_exponent(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exponent + self.mantissa.bits() as i64 - 1)
        }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa << self.exponent as usize)
        } else {
            BigRational::new_raw(
                self.mantissa.clone(),
                BigInt::one() << (-self.exponent) as usize,
            )
        }
    }

    /// Exact quotient; panics on a zero divisor like integer division.
    pub fn div(&self, rhs: &Dyadic) -> BigRational {
        assert!(!rhs.is_zero(), "division of a dyadic by zero");
        self.to_rational() / rhs.to_rational()
    }

    /// Round to nearest, ties to even, into a binary format with `precision`
    /// significand bits and normal exponent range `[exp_min, exp_max]`.
    /// Gradual underflow is honored: below `2^exp_min` the quantum stays at
    /// `2^(exp_min - precision + 1)`.
    pub fn round_to_format(&self, precision: u32, exp_min: i64, exp_max: i64) -> Rounded {
        let Some(lead) = self.leading_exponent() else {
            return Rounded::Finite(Dyadic::zero());
        };
        let quantum = lead.max(exp_min) - (precision as i64 - 1);
        let rounded = if self.exponent >= quantum {
            self.clone()
        } else {
            let shift = (quantum - self.exponent) as usize;
            let magnitude = self.mantissa.magnitude().clone();
            let high = &magnitude >> shift;
            let rest = &magnitude - (&high << shift);
            let half = num_bigint::BigUint::one() << (shift - 1);
            let high = match rest.cmp(&half) {
                Ordering::Greater => high + 1u32,
                Ordering::Equal if high.is_odd() => high + 1u32,
                _ => high,
            };
            let m = BigInt::from_biguint(self.mantissa.sign(), high);
            Dyadic::new(m, quantum)
        };
        match rounded.leading_exponent() {
            Some(e) if e > exp_max => Rounded::Overflow,
            _ => Rounded::Finite(rounded),
        }
    }

    /// Round to the nearest `f64` (ties to even); overflow maps to infinity.
    pub fn to_f64(&self) -> f64 {
        match self.round_to_format(53, -1022, 1023) {
            Rounded::Overflow => {
                if self.signum() < 0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            Rounded::Finite(d) => {
                if d.is_zero() {
                    return 0.0;
                }
                // At most 53 significant bits remain, so this is exact.
                let m = d
                    .mantissa
                    .to_i64()
                    .expect("rounded mantissa fits in 53 bits") as f64;
                scale_pow2(m, d.exponent)
            }
        }
    }

    /// Rounds the mantissa to `bits` significant bits with an unbounded
    /// exponent range. Used to emulate fixed wide working precisions.
    pub fn round_to_bits(&self, bits: u32) -> Dyadic {
        match self.round_to_format(bits, i64::MIN / 4, i64::MAX / 4) {
            Rounded::Finite(d) => d,
            Rounded::Overflow => unreachable!("unbounded exponent range"),
        }
    }
}

/// `x * 2^k` for a value already known to be representable at the result.
pub(crate) fn scale_pow2(mut x: f64, mut k: i64) -> f64 {
    // Chunks of at most 2^±1000 keep every intermediate finite and normal.
    while k > 1000 {
        x *= exp2i(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= exp2i(-1000);
        k += 1000;
    }
    x * exp2i(k as i32)
}

/// `2^k` as an `f64`, for `-1022 <= k <= 1023`.
pub(crate) fn exp2i(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let a = &self.mantissa << (self.exponent - e) as usize;
        let b = &rhs.mantissa << (rhs.exponent - e) as usize;
        Dyadic::new(a + b, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        // Product of odd mantissas is odd: already normalized.
        Dyadic {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        -&self
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: &Dyadic) -> Dyadic {
                (&self).$m(rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).signum() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| &acc + &x)
    }
}

// Bit position 0 of the accumulator carries weight 2^-1074, the smallest
// subnormal binary64 quantum.
const BIAS: i64 = 1074;
const DIGIT_BITS: u32 = 32;
const DIGIT_MASK: i64 = (1 << DIGIT_BITS) - 1;
// 2098 bits of binary64 range plus 64 bits of carry headroom.
const LIMBS: usize = 68;
// Each add deposits less than 2^32 into a limb; i64 limbs absorb 2^30 of
// those before a carry pass is required.
const CARRY_INTERVAL: u32 = 1 << 30;

/// Exact accumulator for sums of finite `f64` values.
///
/// Limbs hold signed radix-2^32 digits with deferred carries, so each
/// addition touches at most three limbs.
#[derive(Clone)]
pub struct LongAccumulator {
    limbs: Box<[i64; LIMBS]>,
    pending: u32,
}

impl LongAccumulator {
    pub fn new() -> Self {
        LongAccumulator {
            limbs: Box::new([0; LIMBS]),
            pending: 0,
        }
    }

    /// Adds a finite value exactly. Non-finite input is a caller bug.
    #[inline]
    pub fn add(&mut self, x: f64) {
        debug_assert!(x.is_finite());
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (m, pos) = if biased == 0 {
            if fraction == 0 {
                return;
            }
            (fraction, 0)
        } else {
            (fraction | (1u64 << 52), biased - 1)
        };
        // value = m * 2^(pos - 1074)
        let limb = (pos / DIGIT_BITS as i64) as usize;
        let shifted = (m as u128) << (pos % DIGIT_BITS as i64);
        let d0 = (shifted as i64) & DIGIT_MASK;
        let d1 = ((shifted >> 32) as i64) & DIGIT_MASK;
        let d2 = (shifted >> 64) as i64;
        if bits >> 63 == 1 {
            self.limbs[limb] -= d0;
            self.limbs[limb + 1] -= d1;
            self.limbs[limb + 2] -= d2;
        } else {
            self.limbs[limb] += d0;
            self.limbs[limb + 1] += d1;
            self.limbs[limb + 2] += d2;
        }
        self.bump();
    }

    /// Adds another accumulator's exact value.
    pub fn add_accumulator(&mut self, other: &LongAccumulator) {
        let mut other = other.clone();
        other.carry();
        self.carry();
        for (a, b) in self.limbs.iter_mut().zip(other.limbs.iter()) {
            *a += *b;
        }
        self.bump();
    }

    #[inline]
    fn bump(&mut self) {
        self.pending += 1;
        if self.pending >= CARRY_INTERVAL {
            self.carry();
        }
    }

    fn carry(&mut self) {
        let mut carry = 0i64;
        for limb in self.limbs[..LIMBS - 1].iter_mut() {
            let v = *limb + carry;
            *limb = v & DIGIT_MASK;
            carry = v >> DIGIT_BITS;
        }
        self.limbs[LIMBS - 1] += carry;
        self.pending = 0;
    }

    pub fn to_dyadic(&self) -> Dyadic {
        let mut acc = self.clone();
        acc.carry();
        let mut m = BigInt::from(acc.limbs[LIMBS - 1]);
        for &digit in acc.limbs[..LIMBS - 1].iter().rev() {
            m <<= DIGIT_BITS as usize;
            m += digit;
        }
        Dyadic::new(m, -BIAS)
    }

    pub fn is_zero(&self) -> bool {
        let mut acc = self.clone();
        acc.carry();
        acc.limbs.iter().all(|&l| l == 0)
    }
}

impl Default for LongAccumulator {
    fn default() -> Self {
        LongAccumulator::new()
    }
}

impl fmt::Debug for LongAccumulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("LongAccumulator")
            .field(&self.to_dyadic())
            .finish()
    }
}
