//! Exact element weights and the `"num/den"` wire format.
//!
//! Every accept/evict decision in the engine compares rationals exactly, so
//! weights never pass through floating point on the decision path.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{BuybackError, Result};

/// Signed exact rational, used for utilities and charge ledgers.
pub type Rational = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

// Accepts numbers and numeric strings: JSON object keys arrive as strings, and
// internally tagged enums buffer them without the usual key coercion.
impl<'de> Deserialize<'de> for ElementId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct IdVisitor;

        impl serde::de::Visitor<'_> for IdVisitor {
            type Value = ElementId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative element id")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<ElementId, E> {
                u32::try_from(v).map(ElementId).map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<ElementId, E> {
                u32::try_from(v).map(ElementId).map_err(E::custom)
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<ElementId, E> {
                v.trim().parse().map(ElementId).map_err(E::custom)
            }
        }

        d.deserialize_any(IdVisitor)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ElementId {
    fn from(v: u32) -> Self {
        ElementId(v)
    }
}

/// Nonnegative exact rational in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Weight(BigRational);

impl Weight {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() {
            return Err(BuybackError::Input(format!(
                "weight must be nonnegative, got {}",
                format_ratio(&value)
            )));
        }
        Ok(Weight(value))
    }

    pub fn zero() -> Self {
        Weight(BigRational::zero())
    }

    pub fn one() -> Self {
        Weight(BigRational::one())
    }

    pub fn from_integer(n: u64) -> Self {
        Weight(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den`; panics when `den == 0`.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        Weight(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_ratio(&self.0))
    }
}

impl FromStr for Weight {
    type Err = BuybackError;

    fn from_str(s: &str) -> Result<Self> {
        Weight::new(parse_ratio(s)?)
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Weight> for &'a Weight {
    type Output = Weight;
    fn add(self, rhs: &'a Weight) -> Weight {
        Weight(&self.0 + &rhs.0)
    }
}

impl<'a> Mul<&'a Weight> for &'a Weight {
    type Output = Weight;
    fn mul(self, rhs: &'a Weight) -> Weight {
        Weight(&self.0 * &rhs.0)
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

impl<'a> Sum<&'a Weight> for Weight {
    fn sum<I: Iterator<Item = &'a Weight>>(iter: I) -> Weight {
        Weight(iter.fold(BigRational::zero(), |acc, w| acc + &w.0))
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_ratio(&self.0))
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Always `num/den`, including integers (`"5/1"`).
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `"num/den"` or a bare integer; the result is reduced.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || BuybackError::Input(format!("malformed rational `{s}`, expected \"num/den\""));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(BuybackError::Input(format!("zero denominator in `{s}`")));
    }
    Ok(BigRational::new(num, den))
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    // Direct conversion handles huge numerators/denominators without overflow.
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Serde adapter for signed rationals stored as `"num/den"`.
pub mod ratio_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_ratio(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).map_err(serde::de::Error::custom)
    }
}

pub mod opt_ratio_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        r: &Option<BigRational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_ratio(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_ratio(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// IEEE doubles printed with 17 significant digits.
pub mod float17 {
    use serde::Serializer;
    use serde_json::value::RawValue;

    pub fn format(x: f64) -> String {
        if x.is_finite() {
            format!("{x:.16e}")
        } else {
            "null".to_string()
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format(*x)).map_err(serde::ser::Error::custom)?;
        serde::Serialize::serialize(&raw, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_lowest_terms() {
        let w: Weight = "10/4".parse().unwrap();
        assert_eq!(w.to_string(), "5/2");
        let w: Weight = "7".parse().unwrap();
        assert_eq!(w.to_string(), "7/1");
    }

    #[test]
    fn rejects_negative_and_zero_denominator() {
        assert!("-1/2".parse::<Weight>().is_err());
        assert!("1/0".parse::<Weight>().is_err());
        assert!("x/2".parse::<Weight>().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let w = Weight::from_ratio(3, 9);
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "\"1/3\"");
        let back: Weight = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn float17_has_seventeen_digits() {
        let s = float17::format(1.0 + 0.5f64.sqrt());
        let mantissa = s.split('e').next().unwrap().replace('.', "");
        assert_eq!(mantissa.len(), 17);
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, 1.0 + 0.5f64.sqrt());
    }
}
