//! Scaling between timespans and numbers of simulation time units.

use rust_decimal::Decimal;
use std::str::FromStr;

/// `d` milliseconds expressed in units of `unit_ms`.
pub fn to_units(d: Decimal, unit_ms: Decimal) -> Decimal {
    d / unit_ms
}

/// `n` simulation time units as milliseconds.
pub fn from_units(n: Decimal, unit_ms: Decimal) -> Decimal {
    n * unit_ms
}

/// Nearest double to an exact decimal.
pub fn decimal_to_f64(d: Decimal) -> f64 {
    d.normalize().to_string().parse().unwrap_or(f64::NAN)
}

/// Exact decimal for the shortest text that round-trips `x`.
pub fn f64_to_decimal(x: f64) -> Option<Decimal> {
    if !x.is_finite() {
        return None;
    }
    Decimal::from_str(&format!("{x}")).ok()
}

/// Timespans compare in the same unit; the unit is irrelevant because both
/// sides scale by the same positive factor.
pub fn compare(a_ms: Decimal, b_ms: Decimal) -> std::cmp::Ordering {
    a_ms.cmp(&b_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_period() {
        let unit = Decimal::from(1000);
        let units = to_units(Decimal::from(10), unit);
        assert_eq!(units, Decimal::from_str("0.01").unwrap());
        assert_eq!(decimal_to_f64(units), 0.01);
        assert_eq!(decimal_to_f64(units) / decimal_to_f64(to_units(unit, unit)), 10.0 / 1000.0);
    }

    #[test]
    fn float_round_trip() {
        assert_eq!(f64_to_decimal(0.1), Some(Decimal::from_str("0.1").unwrap()));
        assert_eq!(f64_to_decimal(f64::NAN), None);
    }

    proptest! {
        #[test]
        fn scaling_is_linear(a in 0i64..1_000_000_000, b in 0i64..1_000_000_000, u in prop::sample::select(vec![1i64, 2, 5, 8, 25, 1000, 125_000])) {
            // units with a terminating reciprocal keep the division exact
            let (a, b, u) = (Decimal::new(a, 3), Decimal::new(b, 3), Decimal::new(u, 3));
            prop_assert_eq!(to_units(a + b, u), to_units(a, u) + to_units(b, u));
        }

        #[test]
        fn units_round_trip(ms in 0i64..10_000_000_000, u in prop::sample::select(vec![1i64, 10, 1000, 1_000_000])) {
            let d = Decimal::new(ms, 6);
            let u = Decimal::from(u);
            prop_assert_eq!(from_units(to_units(d, u), u), d);
        }

        #[test]
        fn comparison_ignores_unit(a in 0i64..1_000_000, b in 0i64..1_000_000, u in 1i64..10_000) {
            let (a, b, u) = (Decimal::from(a), Decimal::from(b), Decimal::from(u));
            prop_assert_eq!(compare(a, b), compare(to_units(a, u), to_units(b, u)));
        }
    }
}
