//! Actor instances and their time-series state.

use crate::value::Value;
use rust_decimal::Decimal;

#[derive(Debug, Clone)]
pub struct ActorInstance {
    pub id: u32,
    pub class: usize,
    /// Current value of every field.
    pub fields: Vec<Value>,
    /// Recorded history for state fields; `None` for plain fields.
    pub series: Vec<Option<Vec<(Decimal, Value)>>>,
}

impl ActorInstance {
    /// Records the current value of state field `i` at `t` if it differs
    /// from the last entry. A write at the same instant overwrites.
    /// Returns the previous value when something was recorded.
    pub fn commit(&mut self, i: usize, t: Decimal, keep: Option<usize>) -> Option<Value> {
        let current = self.fields[i].clone();
        let series = self.series[i].as_mut()?;
        let (last_t, last_v) = series.last().cloned()?;
        if last_v == current && same_kind(&last_v, &current) {
            return None;
        }
        if last_t == t {
            series.last_mut().unwrap().1 = current;
        } else {
            series.push((t, current));
        }
        if let Some(n) = keep {
            if series.len() > n {
                series.drain(..series.len() - n);
            }
        }
        Some(last_v)
    }

    /// Last value of state field `i` recorded strictly before `t`.
    pub fn prev(&self, i: usize, t: Decimal) -> Option<&Value> {
        let series = self.series.get(i)?.as_ref()?;
        series.iter().rev().find(|(ts, _)| *ts < t).map(|(_, v)| v)
    }
}

fn same_kind(a: &Value, b: &Value) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn actor() -> ActorInstance {
        ActorInstance {
            id: 0,
            class: 0,
            fields: vec![Value::Int(0)],
            series: vec![Some(vec![(Decimal::NEGATIVE_ONE, Value::Int(0))])],
        }
    }

    #[test]
    fn prev_is_strictly_before() {
        let mut a = actor();
        a.fields[0] = Value::Double(1.0);
        a.commit(0, Decimal::ONE, None);
        assert_eq!(a.prev(0, Decimal::ONE), Some(&Value::Int(0)));
        let later = Decimal::ONE + Decimal::new(1, 9);
        assert_eq!(a.prev(0, later), Some(&Value::Double(1.0)));
    }

    #[test]
    fn same_instant_writes_keep_the_last() {
        let mut a = actor();
        a.fields[0] = Value::Int(1);
        a.commit(0, Decimal::ONE, None);
        a.fields[0] = Value::Int(2);
        a.commit(0, Decimal::ONE, None);
        let s = a.series[0].as_ref().unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], (Decimal::ONE, Value::Int(2)));
    }

    #[test]
    fn truncated_history_keeps_enough_for_prev() {
        let mut a = actor();
        for t in 1..10 {
            a.fields[0] = Value::Int(t);
            a.commit(0, Decimal::from(t as i64), Some(2));
        }
        assert_eq!(a.series[0].as_ref().unwrap().len(), 2);
        assert_eq!(a.prev(0, Decimal::from(10)), Some(&Value::Int(9)));
        assert_eq!(a.prev(0, Decimal::from(9)), Some(&Value::Int(8)));
    }
}
