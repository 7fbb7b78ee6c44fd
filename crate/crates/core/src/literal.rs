//! Real-number literals in JSON fixtures: plain numbers, or strings holding a
//! rational (`"3/2"`, `"-4"`) or a decimal (`"0.125"`) parsed exactly.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, FromPrimitive, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealLiteral {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralError(pub String);

impl fmt::Display for LiteralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid real literal {:?}", self.0)
    }
}

impl std::error::Error for LiteralError {}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let denom = num::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(numer, denom);
    Some(if neg { -r } else { r })
}

impl RealLiteral {
    /// Exact rational value. Numbers are converted through their binary expansion.
    pub fn to_rational(&self) -> Result<BigRational, LiteralError> {
        match self {
            RealLiteral::Number(x) => BigRational::from_f64(*x).ok_or_else(|| LiteralError(x.to_string())),
            RealLiteral::Text(s) => {
                let t = s.trim();
                if let Some((n, d)) = t.split_once('/') {
                    let n = BigInt::from_str(n.trim()).map_err(|_| LiteralError(s.clone()))?;
                    let d = BigInt::from_str(d.trim()).map_err(|_| LiteralError(s.clone()))?;
                    if d.is_zero() {
                        return Err(LiteralError(s.clone()));
                    }
                    Ok(BigRational::new(n, d))
                } else {
                    parse_decimal(t).ok_or_else(|| LiteralError(s.clone()))
                }
            }
        }
    }

    pub fn to_f64(&self) -> Result<f64, LiteralError> {
        match self {
            RealLiteral::Number(x) if x.is_finite() => Ok(*x),
            RealLiteral::Number(x) => Err(LiteralError(x.to_string())),
            RealLiteral::Text(_) => self
                .to_rational()?
                .to_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| LiteralError(format!("{self:?}"))),
        }
    }

    /// Whether the literal was written as an exact rational (string form or
    /// an integer-valued number).
    pub fn is_exact(&self) -> bool {
        match self {
            RealLiteral::Number(x) => x.is_finite() && x.fract() == 0.0,
            RealLiteral::Text(_) => self.to_rational().is_ok(),
        }
    }
}

impl From<f64> for RealLiteral {
    fn from(x: f64) -> Self {
        RealLiteral::Number(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        let r = |s: &str| RealLiteral::Text(s.into()).to_rational().unwrap();
        assert_eq!(r("3/2"), BigRational::new(3.into(), 2.into()));
        assert_eq!(r("-0.125"), BigRational::new((-1).into(), 8.into()));
        assert_eq!(r("7"), BigRational::from_integer(7.into()));
        assert!(RealLiteral::Text("1/0".into()).to_rational().is_err());
        assert!(RealLiteral::Text("abc".into()).to_rational().is_err());
        assert_eq!(RealLiteral::Text("1/4".into()).to_f64().unwrap(), 0.25);
        assert!(RealLiteral::Number(2.0).is_exact());
        assert!(!RealLiteral::Number(0.1).is_exact());
    }

    #[test]
    fn deserializes_untagged() {
        let v: Vec<RealLiteral> = serde_json::from_str(r#"[1.5, "2/3"]"#).unwrap();
        assert_eq!(v[0], RealLiteral::Number(1.5));
        assert_eq!(v[1], RealLiteral::Text("2/3".into()));
    }
}
