//! Quantities with mandatory unit suffixes, as written in config files.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::io::round_sig;

/// Physical dimension of a configurable field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Voltage,
    Frequency,
    Mass,
    Charge,
    Temperature,
    LinearDensity,
    Time,
    Velocity,
    Angle,
}

impl Dimension {
    /// Accepted suffixes with their factor to the internal unit.
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("nm", 1e-9)],
            Dimension::Voltage => &[("V", 1.0), ("mV", 1e-3), ("kV", 1e3)],
            Dimension::Frequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)],
            Dimension::Mass => &[("u", 1.0), ("Da", 1.0), ("kg", 1.0 / crate::constants::ATOMIC_MASS_UNIT)],
            Dimension::Charge => &[("e", 1.0), ("C", 1.0 / crate::constants::ELEMENTARY_CHARGE)],
            Dimension::Temperature => &[("K", 1.0), ("mK", 1e-3), ("uK", 1e-6), ("µK", 1e-6)],
            Dimension::LinearDensity => &[
                ("/m", 1.0),
                ("/cm", 1e2),
                ("/mm", 1e3),
                ("m^-1", 1.0),
                ("cm^-1", 1e2),
                ("mm^-1", 1e3),
            ],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9)],
            Dimension::Velocity => &[("m/s", 1.0), ("mm/s", 1e-3), ("km/s", 1e3)],
            Dimension::Angle => &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Voltage => "voltage",
            Dimension::Frequency => "frequency",
            Dimension::Mass => "mass",
            Dimension::Charge => "charge",
            Dimension::Temperature => "temperature",
            Dimension::LinearDensity => "linear density",
            Dimension::Time => "time",
            Dimension::Velocity => "velocity",
            Dimension::Angle => "angle",
        }
    }

    fn accepted(self) -> String {
        self.units().iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
    }
}

/// A number in the unit it was written in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    #[serde(serialize_with = "ser_number", deserialize_with = "de_number")]
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: impl Into<String>) -> Self {
        Quantity { value, unit: unit.into() }
    }

    /// Parses text such as `"1.5 mm"` or `"10MHz"` against a dimension.
    pub fn parse(text: &str, dim: Dimension) -> Result<Self, String> {
        let (value, unit) = split_number(text)
            .map_err(|e| if e.is_empty() { format!("expected a number followed by a {} unit, got `{}`", dim.name(), text.trim()) } else { e })?;
        if unit.is_empty() {
            return Err(format!("missing unit on `{}` (expected one of {})", text.trim(), dim.accepted()));
        }
        let q = Quantity::new(value, unit);
        q.si(dim)?;
        Ok(q)
    }

    /// Value in the internal unit of `dim`: SI, except that masses are in
    /// u, charges in e and frequencies in Hz.
    pub fn si(&self, dim: Dimension) -> Result<f64, String> {
        dim.units()
            .iter()
            .find(|(u, _)| *u == self.unit)
            .map(|(_, f)| self.value * f)
            .ok_or_else(|| format!("unit `{}` is not a {} unit (expected one of {})", self.unit, dim.name(), dim.accepted()))
    }
}

/// Splits `"2.5e-3 mm"` into its number and the (possibly empty) suffix.
/// An empty error means there was no leading number at all.
pub fn split_number(text: &str) -> Result<(f64, &str), String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E') && text[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    if num.is_empty() {
        return Err(String::new());
    }
    let value: f64 = num.parse().map_err(|_| format!("`{num}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{num}` is not finite"));
    }
    Ok((value, unit.trim()))
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", crate::io::fmt_number(self.value), self.unit)
    }
}

/// Writes finite numbers rounded to the report precision and non-finite
/// ones as the strings `inf`, `-inf` or `NaN`.
pub fn ser_number<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round_sig(*x))
    } else {
        s.serialize_str(&crate::io::fmt_number(*x))
    }
}

/// A number serialized like [`ser_number`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_number(&self.0, s)
    }
}

pub fn de_number<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }
    match Num::deserialize(d)? {
        Num::F(x) => Ok(x),
        Num::S(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "NaN" => Ok(f64::NAN),
            other => Err(serde::de::Error::custom(format!("invalid number `{other}`"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_space() {
        let q = Quantity::parse("1.5 mm", Dimension::Length).unwrap();
        assert_eq!(q, Quantity::new(1.5, "mm"));
        assert!((q.si(Dimension::Length).unwrap() - 1.5e-3).abs() < 1e-18);
        assert_eq!(Quantity::parse("10MHz", Dimension::Frequency).unwrap().si(Dimension::Frequency), Ok(1e7));
        assert_eq!(Quantity::parse("1e5 /mm", Dimension::LinearDensity).unwrap().si(Dimension::LinearDensity), Ok(1e8));
        assert_eq!(Quantity::parse("-2.5e-1 V", Dimension::Voltage).unwrap().value, -0.25);
    }

    #[test]
    fn rejects_missing_or_wrong_units() {
        assert!(Quantity::parse("3", Dimension::Length).unwrap_err().contains("missing unit"));
        assert!(Quantity::parse("3 V", Dimension::Length).unwrap_err().contains("not a length unit"));
        assert!(Quantity::parse("mm", Dimension::Length).is_err());
        assert!(Quantity::parse("1.2.3 mm", Dimension::Length).is_err());
    }

    #[test]
    fn json_numbers_round_trip() {
        let q = Quantity::new(f64::INFINITY, "m");
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"value":"inf","unit":"m"}"#);
        let back: Quantity = serde_json::from_str(&s).unwrap();
        assert_eq!(back.value, f64::INFINITY);
        let q = Quantity::new(1.0 / 3.0, "1");
        let back: Quantity = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back.value, 0.333333333333);
    }
}
