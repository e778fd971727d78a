use rust_decimal::Decimal;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TimeUnit {
    Ns,
    Us,
    Ms,
    S,
    M,
    H,
    D,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 7] = [
        TimeUnit::Ns,
        TimeUnit::Us,
        TimeUnit::Ms,
        TimeUnit::S,
        TimeUnit::M,
        TimeUnit::H,
        TimeUnit::D,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            TimeUnit::Ns => "ns",
            TimeUnit::Us => "us",
            TimeUnit::Ms => "ms",
            TimeUnit::S => "s",
            TimeUnit::M => "m",
            TimeUnit::H => "h",
            TimeUnit::D => "d",
        }
    }

    /// Length of one unit in milliseconds.
    pub fn millis(self) -> Decimal {
        match self {
            TimeUnit::Ns => Decimal::new(1, 6),
            TimeUnit::Us => Decimal::new(1, 3),
            TimeUnit::Ms => Decimal::ONE,
            TimeUnit::S => Decimal::from(1_000),
            TimeUnit::M => Decimal::from(60_000),
            TimeUnit::H => Decimal::from(3_600_000),
            TimeUnit::D => Decimal::from(86_400_000),
        }
    }

    /// Longest unit suffix at the start of `s`.
    pub fn match_prefix(s: &str) -> Option<TimeUnit> {
        for (suffix, unit) in [
            ("ms", TimeUnit::Ms),
            ("us", TimeUnit::Us),
            ("ns", TimeUnit::Ns),
            ("h", TimeUnit::H),
            ("m", TimeUnit::M),
            ("s", TimeUnit::S),
            ("d", TimeUnit::D),
        ] {
            if s.starts_with(suffix) {
                return Some(unit);
            }
        }
        None
    }
}

/// Ordered `(magnitude, unit)` parts of a timespan literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TimespanComponents(pub Vec<(Decimal, TimeUnit)>);

impl TimespanComponents {
    pub fn single(n: Decimal, unit: TimeUnit) -> Self {
        TimespanComponents(vec![(n, unit)])
    }

    /// Total length in milliseconds, exact.
    pub fn total_millis(&self) -> Decimal {
        self.0.iter().map(|(n, u)| *n * u.millis()).sum()
    }

    pub fn concat(&self, other: &TimespanComponents) -> TimespanComponents {
        let mut parts = self.0.clone();
        parts.extend(other.0.iter().cloned());
        TimespanComponents(parts)
    }
}

impl fmt::Display for TimespanComponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, u) in &self.0 {
            write!(f, "{}{}", n.normalize(), u.suffix())?;
        }
        Ok(())
    }
}

/// Splits a lexer-validated timespan lexeme into its components.
///
/// Panics are impossible for lexer output; malformed input yields `None`.
pub fn parse_timespan(lexeme: &str) -> Option<TimespanComponents> {
    let mut parts = Vec::new();
    let mut rest = lexeme;
    while !rest.is_empty() {
        let digits = rest
            .find(|c: char| !(c.is_ascii_digit() || c == '.'))
            .unwrap_or(rest.len());
        if digits == 0 {
            return None;
        }
        let n = Decimal::from_str(&rest[..digits]).ok()?;
        rest = &rest[digits..];
        let unit = TimeUnit::match_prefix(rest)?;
        rest = &rest[unit.suffix().len()..];
        parts.push((n, unit));
    }
    if parts.is_empty() {
        None
    } else {
        Some(TimespanComponents(parts))
    }
}
