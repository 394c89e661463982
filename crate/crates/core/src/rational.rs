//! Exact rational weights.
//!
//! All edge weights, costs and metric values are carried as `Ratio<i128>` so
//! that results are identical on every platform. On the wire they are
//! strings: a terminating decimal when the denominator only has factors 2
//! and 5 (`"0.25"`, `"3"`), otherwise an explicit fraction (`"5/14"`).

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational '{0}'")]
pub struct ParseRationalError(pub String);

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn parse(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| err())?;
        let d: i128 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    if frac.len() > 30 {
        return Err(err());
    }
    let digits = format!("{whole}{frac}");
    let numer: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| err())? };
    let denom = 10i128.checked_pow(frac.len() as u32).ok_or_else(err)?;
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Converts an `f64` through its shortest round-trip decimal form, so `0.1`
/// becomes exactly `1/10`.
pub fn from_f64(x: f64) -> Result<Rational, ParseRationalError> {
    if !x.is_finite() {
        return Err(ParseRationalError(x.to_string()));
    }
    parse(&format!("{x}"))
}

pub fn to_f64(r: &Rational) -> f64 {
    // numer/denom may both exceed f64's exact range; the division is what we want
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn format(r: &Rational) -> String {
    Display(r).to_string()
}

/// Formats a rational the way it is written to JSON.
pub struct Display<'a>(pub &'a Rational);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        if r.is_integer() {
            return write!(f, "{}", r.numer());
        }
        let mut d = *r.denom();
        let (mut twos, mut fives) = (0u32, 0u32);
        while d.is_even() {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        if d != 1 {
            return write!(f, "{}/{}", r.numer(), r.denom());
        }
        let places = twos.max(fives);
        let scale = 10i128.pow(places);
        let scaled = r.numer().abs() * (scale / r.denom());
        let whole = scaled / scale;
        let frac = scaled % scale;
        let sign = if r.is_negative() { "-" } else { "" };
        write!(f, "{sign}{whole}.{frac:0width$}", width = places as usize)
    }
}

/// Formats with a fixed number of decimals for human-readable tables.
pub fn format_fixed(r: &Rational, decimals: usize) -> String {
    format!("{:.*}", decimals, to_f64(r))
}

pub fn is_non_negative(r: &Rational) -> bool {
    !r.is_negative()
}

pub fn zero() -> Rational {
    Rational::zero()
}

/// `#[serde(with = "crate::rational::serde_str")]` for a `Rational` field.
pub mod serde_str {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    use super::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&super::Display(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    struct RationalVisitor;

    impl Visitor<'_> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a rational as a decimal string, fraction string or number")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            super::parse(v).map_err(E::custom)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(super::int(v as i128))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(super::int(v as i128))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            super::from_f64(v).map_err(E::custom)
        }
    }
}

/// Same as [`serde_str`] for `Option<Rational>`; `None` is `null`.
pub mod serde_opt_str {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.collect_str(&super::Display(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::serde_str")] Rational);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
