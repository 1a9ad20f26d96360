//! Exact text form of `f64` (`0x1.8p+1`) for certificates and configs.
//!
//! Readers accept either a hex string or a plain JSON number.

use num_complex::Complex64;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;

const MANTISSA_BITS: u32 = 52;
const MANTISSA_MASK: u64 = (1 << MANTISSA_BITS) - 1;

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let biased = ((bits >> MANTISSA_BITS) & 0x7ff) as i32;
    let mant = bits & MANTISSA_MASK;
    if biased == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 {
        (0, -1022)
    } else {
        (1, biased - 1023)
    };
    let digits = format!("{mant:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

/// Parses hex floats, `inf`/`nan`, and ordinary decimal literals.
pub fn parse(s: &str) -> Option<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        "nan" => return Some(f64::NAN),
        _ => {}
    }
    let body = t.trim_start_matches(['+', '-']);
    if body.starts_with("0x") || body.starts_with("0X") {
        let v = hexf_parse::parse_hexf64(t, false).ok()?;
        // keep the sign of zero
        Some(if v == 0.0 && t.starts_with('-') {
            -0.0
        } else {
            v
        })
    } else {
        t.parse().ok()
    }
}

/// `f64` that serializes as a hex string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hex(pub f64);

impl Serialize for Hex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(self.0))
    }
}

struct HexVisitor;

impl<'de> Visitor<'de> for HexVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a hex-float string")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse(v).ok_or_else(|| E::custom(format!("not a float: {v:?}")))
    }
}

impl<'de> Deserialize<'de> for Hex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(HexVisitor).map(Hex)
    }
}

/// For `#[serde(with = "crate::hexfloat::f64_hex")]` fields.
pub mod f64_hex {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Hex(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Hex::deserialize(d).map(|h| h.0)
    }
}

/// Complex scalar as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HexC(pub Hex, pub Hex);

impl From<Complex64> for HexC {
    fn from(c: Complex64) -> Self {
        HexC(Hex(c.re), Hex(c.im))
    }
}

impl From<HexC> for Complex64 {
    fn from(h: HexC) -> Self {
        Complex64::new(h.0 .0, h.1 .0)
    }
}

pub fn complex_list(v: &[Complex64]) -> Vec<HexC> {
    v.iter().map(|&c| c.into()).collect()
}

pub fn from_complex_list(v: &[HexC]) -> Vec<Complex64> {
    v.iter().map(|&h| h.into()).collect()
}

/// `u128` as a decimal string (JSON numbers cannot carry it portably).
pub mod u128_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|_| de::Error::custom(format!("not an unsigned integer: {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(3.0), "0x1.8p+1");
        assert_eq!(format(-0.5), "-0x1p-1");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(0.1), "0x1.999999999999ap-4");
        assert_eq!(parse("0x1.999999999999ap-4"), Some(0.1));
        assert_eq!(parse("2.5"), Some(2.5));
        assert_eq!(parse("inf"), Some(f64::INFINITY));
        assert!(parse("0xzz").is_none());
    }

    #[test]
    fn signed_zero_and_subnormals() {
        let nz = parse(&format(-0.0)).unwrap();
        assert!(nz == 0.0 && nz.is_sign_negative());
        for x in [
            f64::MIN_POSITIVE,
            f64::MIN_POSITIVE / 3.0,
            5e-324,
            f64::MAX,
            -f64::MAX,
        ] {
            assert_eq!(parse(&format(x)).unwrap().to_bits(), x.to_bits(), "{x:e}");
        }
    }

    #[test]
    fn json_accepts_numbers_and_strings() {
        let a: Hex = serde_json::from_str("1.25").unwrap();
        let b: Hex = serde_json::from_str("\"0x1.4p+0\"").unwrap();
        let c: Hex = serde_json::from_str("3").unwrap();
        assert_eq!((a.0, b.0, c.0), (1.25, 1.25, 3.0));
        assert_eq!(serde_json::to_string(&Hex(1.25)).unwrap(), "\"0x1.4p+0\"");
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(!x.is_nan());
            prop_assert_eq!(parse(&format(x)).unwrap().to_bits(), bits);
        }
    }
}
