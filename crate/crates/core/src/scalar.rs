//! Scalar abstraction for the numeric kernels.
//!
//! Everything downstream (transfer operators, entropies, dual ascent) is
//! written against [`Scalar`] so the same code runs in `f32` or `f64`.
//! Contract tolerances are stated in `f64` and converted with [`Scalar::of`];
//! they are floored at a small multiple of the type's epsilon so that an
//! `f32` instantiation still terminates.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Stable bit pattern, used as a deterministic cache key.
    fn bit_pattern(self) -> u64;

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in this scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }

    /// A contract tolerance, floored so it stays meaningful for the type.
    fn tolerance(v: f64) -> Self {
        let floor = Self::epsilon() * Self::of(32.0);
        Self::of(v).max(floor)
    }
}

impl Scalar for f32 {
    fn bit_pattern(self) -> u64 {
        u64::from(self.to_bits())
    }
}

impl Scalar for f64 {
    fn bit_pattern(self) -> u64 {
        self.to_bits()
    }
}

/// Compensated (Kahan) accumulator.  All bulk sums over enumerated
/// configurations go through this in a fixed lexicographic order so results
/// do not depend on chunking.
#[derive(Clone, Copy, Debug)]
pub struct KahanSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        KahanSum {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, v: T) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}

impl<T: Scalar> Default for KahanSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Extended real value.  Infinite outcomes (empty mass, targets outside the
/// moment range) are carried as explicit flags, never as float sentinels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal<T> {
    Finite(T),
    PosInfinity,
    NegInfinity,
}

impl<T: Scalar> ExtReal<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Orders finite values between the two infinities.
    pub fn compare(self, other: Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        use ExtReal::*;
        match (self, other) {
            (NegInfinity, NegInfinity) | (PosInfinity, PosInfinity) => Equal,
            (NegInfinity, _) | (_, PosInfinity) => Less,
            (PosInfinity, _) | (_, NegInfinity) => Greater,
            (Finite(a), Finite(b)) => a.partial_cmp(&b).expect("NaN in ExtReal"),
        }
    }
}

impl<T: Scalar> fmt::Display for ExtReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => write!(f, "inf"),
            ExtReal::NegInfinity => write!(f, "-inf"),
        }
    }
}

impl<T: Scalar> Serialize for ExtReal<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(v.as_f64()),
            ExtReal::PosInfinity => s.serialize_str("inf"),
            ExtReal::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ExtReal<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal::Finite(T::of(v))),
            Raw::Tag(s) => match s.as_str() {
                "inf" => Ok(ExtReal::PosInfinity),
                "-inf" => Ok(ExtReal::NegInfinity),
                other => Err(D::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}
