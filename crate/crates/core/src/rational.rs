//! Exact rational numbers and their decimal-string wire form.
//!
//! Every value and price in the crate is a [`Rational`]. On the wire a value is
//! a decimal string (`"12.5"`); values without a terminating decimal
//! expansion are written as a reduced fraction (`"800/9"`). Both forms parse.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

/// Parses `"3"`, `"-0.25"`, `"1e3"`-free decimals, or `"p/q"` fractions.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a decimal number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Non-negative variant of [`parse`].
pub fn parse_nonneg(s: &str) -> Result<Rational> {
    let r = parse(s)?;
    if r.is_negative() {
        return Err(Error::Parse(format!("negative value {s:?}")));
    }
    Ok(r)
}

/// Exact decimal rendering when the expansion terminates, `p/q` otherwise.
pub fn format(r: &Rational) -> String {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = (r * Rational::from_integer(num_traits::pow(BigInt::from(10), places))).to_integer();
    if places == 0 {
        return scaled.to_string();
    }
    let neg = scaled.is_negative();
    let mut digits = scaled.abs().to_string();
    if digits.len() <= places {
        digits = format!("{}{}", "0".repeat(places + 1 - digits.len()), digits);
    }
    let split = digits.len() - places;
    format!("{}{}.{}", if neg { "-" } else { "" }, &digits[..split], &digits[split..])
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rounds a float to a rational with `places` decimal digits.
pub fn from_f64_rounded(x: f64, places: u32) -> Rational {
    let scale = 10f64.powi(places as i32);
    let n = (x * scale).round() as i64;
    Rational::new(BigInt::from(n), num_traits::pow(BigInt::from(10), places as usize))
}

pub mod serde_decimal {
    //! `#[serde(with = ...)]` adapters for decimal-string fields.
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse("12.50").unwrap(), ratio(25, 2));
        assert_eq!(parse("-0.25").unwrap(), ratio(-1, 4));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse("800/9").unwrap(), ratio(800, 9));
        assert_eq!(parse("7").unwrap(), int(7));
        assert!(parse("1e3").is_err());
        assert!(parse("").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse_nonneg("-1").is_err());
    }

    #[test]
    fn formats_terminating_and_repeating() {
        assert_eq!(format(&ratio(25, 2)), "12.5");
        assert_eq!(format(&ratio(-1, 40)), "-0.025");
        assert_eq!(format(&int(3)), "3");
        assert_eq!(format(&ratio(800, 9)), "800/9");
        assert_eq!(format(&ratio(3, 1000)), "0.003");
    }

    #[test]
    fn format_parse_round_trip() {
        for (n, d) in [(1, 3), (7, 8), (-22, 7), (0, 5), (123456, 1000)] {
            let r = ratio(n, d);
            assert_eq!(parse(&format(&r)).unwrap(), r);
        }
    }
}
