//! Strict parsing of physical quantities written with a unit suffix,
//! e.g. `"1 ns"`, `"62.5 MHz"`, `"0.2 dB/km"`.
//!
//! Values are converted to SI base units (seconds, hertz, kilometres for
//! fibre length, decibels). A missing or foreign unit is an error.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Frequency,
    Length,
    Decibel,
    Attenuation,
}

impl Dimension {
    /// The unit used when writing a value back out.
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Time => "s",
            Dimension::Frequency => "Hz",
            Dimension::Length => "km",
            Dimension::Decibel => "dB",
            Dimension::Attenuation => "dB/km",
        }
    }

    // Power of ten taking `unit` to the base unit.
    fn exponent(self, unit: &str) -> Option<i32> {
        let k = match (self, unit) {
            (Dimension::Time, "s") => 0,
            (Dimension::Time, "ms") => -3,
            (Dimension::Time, "us") | (Dimension::Time, "µs") => -6,
            (Dimension::Time, "ns") => -9,
            (Dimension::Time, "ps") => -12,
            (Dimension::Time, "fs") => -15,
            (Dimension::Frequency, "Hz") | (Dimension::Frequency, "/s") => 0,
            (Dimension::Frequency, "kHz") => 3,
            (Dimension::Frequency, "MHz") => 6,
            (Dimension::Frequency, "GHz") => 9,
            (Dimension::Length, "km") => 0,
            (Dimension::Length, "m") => -3,
            (Dimension::Decibel, "dB") => 0,
            (Dimension::Attenuation, "dB/km") => 0,
            _ => return None,
        };
        Some(k)
    }

    fn accepted(self) -> &'static str {
        match self {
            Dimension::Time => "s, ms, us, ns, ps, fs",
            Dimension::Frequency => "Hz, /s, kHz, MHz, GHz",
            Dimension::Length => "m, km",
            Dimension::Decibel => "dB",
            Dimension::Attenuation => "dB/km",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::Length => "length",
            Dimension::Decibel => "decibel ratio",
            Dimension::Attenuation => "attenuation",
        };
        f.write_str(name)
    }
}

/// Parse `text` as a quantity of `dim`, reporting failures against `field`.
pub fn parse_quantity(field: &str, text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let split = unit_start(text);
    let (num, unit) = text.split_at(split);
    let unit = unit.trim();
    if num.is_empty() {
        return Err(Error::config(
            field,
            format!("`{text}` has no numeric value"),
        ));
    }
    let value: f64 = num
        .parse()
        .map_err(|_| Error::config(field, format!("`{num}` is not a number")))?;
    if unit.is_empty() {
        return Err(Error::config(
            field,
            format!(
                "`{text}` is missing a {dim} unit (expected one of: {})",
                dim.accepted()
            ),
        ));
    }
    let k = dim.exponent(unit).ok_or_else(|| {
        Error::config(
            field,
            format!(
                "unit `{unit}` is not a {dim} unit (expected one of: {})",
                dim.accepted()
            ),
        )
    })?;
    if !value.is_finite() {
        return Err(Error::config(field, "value must be finite"));
    }
    // Powers of ten up to 1e22 are exact, so dividing keeps "10 us" at the
    // double nearest 1e-5 where multiplying by 1e-6 would not.
    let p = 10f64.powi(k.abs());
    Ok(if k < 0 { value / p } else { value * p })
}

// Index where the unit suffix begins. An `e`/`E` followed by a digit or sign
// is an exponent, not a unit.
fn unit_start(text: &str) -> usize {
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || c == '/' || c == 'µ' {
            return i;
        }
        if c.is_alphabetic() {
            let rest = &text[i + c.len_utf8()..];
            let exponent = matches!(c, 'e' | 'E')
                && i > 0
                && rest.starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+');
            if !exponent {
                return i;
            }
        }
    }
    text.len()
}

/// Write a base-unit value so that [`parse_quantity`] reads it back exactly.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{} {}", value, dim.canonical_unit())
}
