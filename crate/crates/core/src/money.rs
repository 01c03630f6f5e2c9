//! Exact decimal money. Budget feasibility must not wobble with float noise,
//! so all absolute dollar amounts are integer picodollars (10^-12 USD)
//! internally. Rounding to cents happens only at display and at the budget
//! DP's discretization boundary.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const PICO_PER_DOLLAR: i128 = 1_000_000_000_000;
const PICO_PER_CENT: i128 = PICO_PER_DOLLAR / 100;

/// An exact USD amount with 12 fractional digits of precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(i128);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_picodollars(pico: i128) -> Money {
        Money(pico)
    }

    pub fn picodollars(self) -> i128 {
        self.0
    }

    /// Parses a plain decimal like "22.50", "0.064" or "100". At most 12
    /// fractional digits; no exponent, no thousands separators.
    pub fn parse(s: &str) -> Result<Money> {
        let s = s.trim();
        let (negative, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Money(format!("empty amount {s:?}")));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(Error::Money(format!("invalid amount {s:?}")));
        }
        if frac_part.len() > 12 {
            return Err(Error::Money(format!(
                "amount {s:?} has more than 12 fractional digits"
            )));
        }
        let int_val: i128 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| Error::Money(format!("amount {s:?} out of range")))?
        };
        let mut frac_val: i128 = 0;
        for c in frac_part.chars() {
            frac_val = frac_val * 10 + (c as u8 - b'0') as i128;
        }
        for _ in frac_part.len()..12 {
            frac_val *= 10;
        }
        let magnitude = int_val
            .checked_mul(PICO_PER_DOLLAR)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(|| Error::Money(format!("amount {s:?} out of range")))?;
        Ok(Money(if negative { -magnitude } else { magnitude }))
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn checked_mul_u64(self, factor: u64) -> Result<Money> {
        self.0
            .checked_mul(factor as i128)
            .map(Money)
            .ok_or_else(|| Error::Money("money overflow".into()))
    }

    /// Rounds up to the next whole cent. Used by the budget DP so a
    /// discretized plan can never cost more than the table claims.
    pub fn cents_ceil(self) -> i128 {
        debug_assert!(self.0 >= 0);
        (self.0 + PICO_PER_CENT - 1).div_euclid(PICO_PER_CENT)
    }

    /// Rounds down to whole cents. Flooring the budget is feasibility-safe
    /// because per-task costs are rounded up.
    pub fn cents_floor(self) -> i128 {
        self.0.div_euclid(PICO_PER_CENT)
    }

    /// Rounds half-even to the nearest cent, for display.
    pub fn cents_half_even(self) -> i128 {
        let q = self.0.div_euclid(PICO_PER_CENT);
        let r = self.0.rem_euclid(PICO_PER_CENT);
        let half = PICO_PER_CENT / 2;
        if r > half || (r == half && q % 2 != 0) {
            q + 1
        } else {
            q
        }
    }

    pub fn from_cents(cents: i128) -> Money {
        Money(cents * PICO_PER_CENT)
    }

    /// Lossy conversion, for scoring math only (never feasibility checks).
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / PICO_PER_DOLLAR as f64
    }

    /// Canonical decimal rendering: minimal digits, at least two after the
    /// point ("22.50", "0.064", "0.000001").
    pub fn to_decimal_string(self) -> String {
        let negative = self.0 < 0;
        let abs = self.0.unsigned_abs();
        let dollars = abs / PICO_PER_DOLLAR as u128;
        let mut frac = abs % PICO_PER_DOLLAR as u128;
        let mut frac_digits = String::with_capacity(12);
        let mut scale = PICO_PER_DOLLAR as u128 / 10;
        while scale > 0 {
            frac_digits.push(char::from(b'0' + (frac / scale) as u8));
            frac %= scale;
            scale /= 10;
        }
        while frac_digits.len() > 2 && frac_digits.ends_with('0') {
            frac_digits.pop();
        }
        format!("{}{dollars}.{frac_digits}", if negative { "-" } else { "" })
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, |acc, m| acc + m)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}", self.to_decimal_string())
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_decimal_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Money, D::Error> {
        // Accept either a decimal string or a JSON number. Numbers go through
        // serde_json's shortest-roundtrip rendering, which is exact for the
        // price magnitudes that occur in practice.
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Num(serde_json::Number),
        }
        let raw = Raw::deserialize(deserializer)?;
        let text = match &raw {
            Raw::Text(s) => s.clone(),
            Raw::Num(n) => n.to_string(),
        };
        Money::parse(&text).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        for s in ["0.00", "22.50", "0.064", "100.00", "0.000001", "5.00"] {
            let m = Money::parse(s).unwrap();
            assert_eq!(m.to_decimal_string(), s);
            assert_eq!(Money::parse(&m.to_decimal_string()).unwrap(), m);
        }
        assert_eq!(Money::parse("22.5").unwrap().to_decimal_string(), "22.50");
        assert_eq!(Money::parse("100").unwrap().to_decimal_string(), "100.00");
        assert_eq!(Money::parse(".5").unwrap().to_decimal_string(), "0.50");
        assert_eq!(Money::parse("0.064").unwrap().to_decimal_string(), "0.064");
    }

    #[test]
    fn rejects_garbage() {
        assert!(Money::parse("").is_err());
        assert!(Money::parse("1.2.3").is_err());
        assert!(Money::parse("1e3").is_err());
        assert!(Money::parse("0.1234567890123").is_err());
    }

    #[test]
    fn cents_ceil_never_undercounts() {
        assert_eq!(Money::parse("0.01").unwrap().cents_ceil(), 1);
        assert_eq!(Money::parse("0.010000000001").unwrap().cents_ceil(), 2);
        assert_eq!(Money::parse("0.0099").unwrap().cents_ceil(), 1);
        assert_eq!(Money::ZERO.cents_ceil(), 0);
    }

    #[test]
    fn cents_half_even_rounds_to_even() {
        assert_eq!(Money::parse("0.025").unwrap().cents_half_even(), 2);
        assert_eq!(Money::parse("0.035").unwrap().cents_half_even(), 4);
        assert_eq!(Money::parse("0.0351").unwrap().cents_half_even(), 4);
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = Money::parse("0.1").unwrap();
        let b = Money::parse("0.2").unwrap();
        assert_eq!((a + b).to_decimal_string(), "0.30");
        let scaled = Money::parse("0.000064").unwrap().checked_mul_u64(1000).unwrap();
        assert_eq!(scaled.to_decimal_string(), "0.064");
    }
}
