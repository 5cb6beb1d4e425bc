//! Target binary formats and correctly rounded addition.
//!
//! All supported formats embed exactly in binary64, so target values are
//! carried as `f64`. Half-precision addition forms the exact sum in binary64
//! (two half operands span at most 40 bits) and rounds once to half with
//! ties to even. Single and double use the native IEEE adders, which round
//! to nearest even.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::{exp2i, Dyadic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FloatFormat {
    Half,
    Single,
    Double,
}

impl FloatFormat {
    pub const ALL: [FloatFormat; 3] = [FloatFormat::Half, FloatFormat::Single, FloatFormat::Double];

    /// Significand precision `t`, counting the implicit bit.
    pub const fn precision_bits(self) -> u32 {
        match self {
            FloatFormat::Half => 11,
            FloatFormat::Single => 24,
            FloatFormat::Double => 53,
        }
    }

    pub const fn exponent_min(self) -> i32 {
        match self {
            FloatFormat::Half => -14,
            FloatFormat::Single => -126,
            FloatFormat::Double => -1022,
        }
    }

    pub const fn exponent_max(self) -> i32 {
        match self {
            FloatFormat::Half => 15,
            FloatFormat::Single => 127,
            FloatFormat::Double => 1023,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            FloatFormat::Half => "half",
            FloatFormat::Single => "single",
            FloatFormat::Double => "double",
        }
    }

    /// Unit roundoff `u = 2^-t`, exactly.
    pub fn unit_roundoff(self) -> Dyadic {
        Dyadic::pow2(-(self.precision_bits() as i64))
    }

    /// Unit roundoff as a binary64 value (exact: a power of two).
    pub fn unit_roundoff_f64(self) -> f64 {
        exp2i(-(self.precision_bits() as i32))
    }

    /// Gap between 1 and the next representable number, `2u`.
    pub fn machine_epsilon(self) -> Dyadic {
        Dyadic::pow2(1 - self.precision_bits() as i64)
    }

    pub fn min_positive_normal(self) -> f64 {
        exp2i(self.exponent_min())
    }

    pub fn max_finite(self) -> f64 {
        let t = self.precision_bits() as i32;
        (2.0 - exp2i(1 - t)) * exp2i(self.exponent_max())
    }

    /// Rounds a finite binary64 value to this format, nearest-even.
    pub fn round(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let r = match self {
            FloatFormat::Double => x,
            FloatFormat::Single => x as f32 as f64,
            FloatFormat::Half => self.round_scaled(x),
        };
        if r.is_finite() && r.abs() <= self.max_finite() {
            Ok(r)
        } else {
            Err(Error::Overflow {
                format: self,
                step: None,
            })
        }
    }

    // Scale so the target quantum becomes 1, round to an integer, scale back.
    // Every step is exact in binary64 for formats narrower than single.
    fn round_scaled(self, x: f64) -> f64 {
        let biased = ((x.to_bits() >> 52) & 0x7ff) as i32;
        if x == 0.0 || biased == 0 {
            // binary64 subnormals lie far below half a quantum of the target.
            return 0.0 * x.signum();
        }
        let lead = biased - 1023;
        let quantum = lead.max(self.exponent_min()) - (self.precision_bits() as i32 - 1);
        (x * exp2i(-quantum)).round_ties_even() * exp2i(quantum)
    }

    pub fn is_representable(self, x: f64) -> bool {
        x.is_finite() && matches!(self.round(x), Ok(r) if r == x)
    }

    /// Nonzero and below the smallest normal magnitude.
    pub fn is_subnormal(self, x: f64) -> bool {
        x != 0.0 && x.abs() < self.min_positive_normal()
    }

    /// `fl(a + b)` on raw representable operands.
    #[inline]
    pub(crate) fn add_raw(self, a: f64, b: f64) -> Result<f64> {
        let s = match self {
            FloatFormat::Half => return self.round(a + b),
            FloatFormat::Single => (a as f32 + b as f32) as f64,
            FloatFormat::Double => a + b,
        };
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::Overflow {
                format: self,
                step: None,
            })
        }
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FloatFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" | "fp16" | "binary16" => Ok(FloatFormat::Half),
            "single" | "fp32" | "binary32" => Ok(FloatFormat::Single),
            "double" | "fp64" | "binary64" => Ok(FloatFormat::Double),
            _ => Err(Error::Config(format!("unknown precision {s:?}"))),
        }
    }
}

/// A finite value exactly representable in its format.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetValue {
    value: f64,
    format: FloatFormat,
}

impl TargetValue {
    /// Wraps `value`, which must already be representable in `format`.
    pub fn new(value: f64, format: FloatFormat) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        if !format.is_representable(value) {
            return Err(Error::NotRepresentable { value, format });
        }
        Ok(TargetValue { value, format })
    }

    /// Rounds `x` once into `format`.
    pub fn round_from(x: f64, format: FloatFormat) -> Result<Self> {
        Ok(TargetValue {
            value: format.round(x)?,
            format,
        })
    }

    pub(crate) fn new_unchecked(value: f64, format: FloatFormat) -> Self {
        debug_assert!(format.is_representable(value));
        TargetValue { value, format }
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn format(self) -> FloatFormat {
        self.format
    }

    pub fn is_subnormal(self) -> bool {
        self.format.is_subnormal(self.value)
    }

    pub fn to_dyadic(self) -> Dyadic {
        Dyadic::from_f64(self.value).expect("target values are finite")
    }
}

/// Round-to-nearest-even sum of two values in the same format.
pub fn round_add(a: TargetValue, b: TargetValue) -> Result<TargetValue> {
    if a.format != b.format {
        return Err(Error::FormatMismatch {
            left: a.format,
            right: b.format,
        });
    }
    let value = a.format.add_raw(a.value, b.value)?;
    Ok(TargetValue {
        value,
        format: a.format,
    })
}

/// Unit roundoff of `format` as an exact rational.
pub fn unit_roundoff(format: FloatFormat) -> num_rational::BigRational {
    format.unit_roundoff().to_rational()
}
