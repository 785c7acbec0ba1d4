//! IEEE-754 doubles as C99 hexadecimal floating-point text.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Formats a finite double as `[-]0x1.<hex>p<exp>` (normal) or
/// `[-]0x0.<hex>p-1022` (subnormal), with trailing zero digits removed.
/// Non-finite values are rendered as `inf`, `-inf` or `nan`.
pub fn to_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if biased == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 {
        (0, -1022)
    } else {
        (1, biased - 1023)
    };
    let digits = format!("{mantissa:013x}");
    let digits = digits.trim_end_matches('0');
    let frac = if digits.is_empty() {
        String::new()
    } else {
        format!(".{digits}")
    };
    format!("{sign}0x{lead}{frac}p{exp:+}")
}

/// Parses hexadecimal floating-point text; decimal text is accepted too.
pub fn parse(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let unsigned = t.strip_prefix(['-', '+']).unwrap_or(t);
    if unsigned.starts_with("0x") || unsigned.starts_with("0X") {
        hexf_parse::parse_hexf64(t, false).map_err(|e| format!("`{s}`: {e}"))
    } else {
        t.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))
    }
}

/// A double carried as hex-float text in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexF64(pub f64);

impl Serialize for HexF64 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_hex(self.0))
    }
}

impl<'de> Deserialize<'de> for HexF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map(HexF64).map_err(D::Error::custom)
    }
}

pub fn wrap(xs: &[f64]) -> Vec<HexF64> {
    xs.iter().copied().map(HexF64).collect()
}

pub fn unwrap(xs: &[HexF64]) -> Vec<f64> {
    xs.iter().map(|h| h.0).collect()
}
