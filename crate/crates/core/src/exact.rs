//! Exact rational numbers: parsing, conversion and serde glue.
//!
//! Values, probabilities and dispersion parameters are carried as
//! [`BigRational`]. On the wire they are written as strings (`"19/40"`,
//! `"3"`) and read back from either strings (fractions or decimals) or JSON
//! numbers. A JSON number is read through its shortest round-trip decimal
//! form, so `0.475` becomes exactly `19/40`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;

use crate::error::{invalid, Result};

pub type Value = BigRational;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn from_biguint(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

pub fn ratio_of(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Parses `"p/q"`, integers, decimals and decimals with an exponent.
pub fn parse_exact(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return invalid("empty number");
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_exact(n)?;
        let d = parse_exact(d)?;
        if d.is_zero() {
            return invalid(format!("zero denominator in {s:?}"));
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..]
                .parse()
                .map_err(|_| crate::Error::InvalidInput(format!("bad exponent in {s:?}")))?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return invalid(format!("not a number: {s:?}"));
    }
    let digits: String = format!("{whole}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return invalid(format!("not a number: {s:?}"));
    }
    let mut numer: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
    if neg {
        numer = -numer;
    }
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let q = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(q)
}

/// Exact value of the shortest decimal that round-trips to `f`.
pub fn from_f64(f: f64) -> Result<BigRational> {
    if !f.is_finite() {
        return invalid(format!("non-finite number {f}"));
    }
    parse_exact(&format!("{f}"))
}

pub fn format_exact(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn is_non_negative(q: &BigRational) -> bool {
    !q.is_negative()
}

/// A rational paired with its floating-point approximation, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactNumber {
    pub exact: String,
    pub approx: f64,
}

impl From<&BigRational> for ExactNumber {
    fn from(q: &BigRational) -> Self {
        ExactNumber {
            exact: format_exact(q),
            approx: to_f64(q),
        }
    }
}

struct RationalVisitor;

impl<'de> Visitor<'de> for RationalVisitor {
    type Value = BigRational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a string such as \"19/40\" or \"0.475\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
        Ok(int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
        Ok(BigRational::from_integer(BigInt::from(v)))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
        from_f64(v).map_err(E::custom)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
        parse_exact(v).map_err(E::custom)
    }
}

pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_exact(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&format_exact(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let raw: Vec<Wire> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|w| w.0).collect())
    }
}

/// Deserialization helper usable inside collections.
#[derive(Debug, Clone, PartialEq)]
pub struct Wire(pub BigRational);

impl<'de> Deserialize<'de> for Wire {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(RationalVisitor).map(Wire)
    }
}

impl Serialize for Wire {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_exact(&self.0))
    }
}

/// Least common multiple of the denominators of `qs`.
pub fn common_denominator<'a>(qs: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    use num_integer::Integer;
    qs.into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_exact("19/40").unwrap(), rat(19, 40));
        assert_eq!(parse_exact("0.475").unwrap(), rat(19, 40));
        assert_eq!(parse_exact("-2.5").unwrap(), rat(-5, 2));
        assert_eq!(parse_exact("1e-6").unwrap(), rat(1, 1_000_000));
        assert_eq!(parse_exact("3").unwrap(), int(3));
        assert_eq!(parse_exact(".5").unwrap(), rat(1, 2));
        assert!(parse_exact("1/0").is_err());
        assert!(parse_exact("abc").is_err());
    }

    #[test]
    fn json_numbers_read_exactly() {
        let v: Wire = serde_json::from_str("0.475").unwrap();
        assert_eq!(v.0, rat(19, 40));
        let v: Wire = serde_json::from_str("\"1/3\"").unwrap();
        assert_eq!(v.0, rat(1, 3));
        let v: Wire = serde_json::from_str("7").unwrap();
        assert_eq!(v.0, int(7));
        assert_eq!(serde_json::to_string(&Wire(rat(1, 3))).unwrap(), "\"1/3\"");
    }

    #[test]
    fn lcm_of_denominators() {
        let qs = [rat(1, 4), rat(1, 6), int(2)];
        assert_eq!(common_denominator(qs.iter()), BigInt::from(12));
    }
}
