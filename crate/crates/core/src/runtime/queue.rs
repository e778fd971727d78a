//! The global message queue, ordered by assumed delivery time and then by
//! emission sequence.

use crate::value::Value;
use rust_decimal::Decimal;
use std::collections::BTreeMap;

/// How a queued message came to exist; decides tie-break priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerKind {
    Periodic,
    Conditional,
    External,
    Initialize,
}

impl TriggerKind {
    pub fn name(self) -> &'static str {
        match self {
            TriggerKind::Periodic => "periodic",
            TriggerKind::Conditional => "conditional",
            TriggerKind::External => "external",
            TriggerKind::Initialize => "initialize",
        }
    }

    /// Higher wins a same-instant tie for one receiver.
    pub fn priority(self) -> u8 {
        match self {
            TriggerKind::Initialize => 3,
            TriggerKind::External => 2,
            TriggerKind::Conditional => 1,
            TriggerKind::Periodic => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Message {
    pub seq: u64,
    pub sender: u32,
    pub receiver: u32,
    pub event: String,
    /// Times in simulation units.
    pub t_send: Decimal,
    pub t_assume: Decimal,
    pub kind: TriggerKind,
    /// Arguments bound to the response's formal names.
    pub payload: Vec<(String, Value)>,
    /// `with` entries other than `sender`, e.g. `after`, `deadline` and
    /// user keys.
    pub with: Vec<(String, Value)>,
    /// Produced by the scheduler itself (start messages, periodic
    /// occurrences, conditional scans) rather than by a `tell`.
    pub scheduled: bool,
}

impl Message {
    pub fn with_value(&self, key: &str) -> Option<&Value> {
        self.with.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Default, Clone)]
pub struct GlobalQueue {
    items: BTreeMap<(Decimal, u64), Message>,
}

impl GlobalQueue {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, m: Message) {
        self.items.insert((m.t_assume, m.seq), m);
    }

    pub fn min_time(&self) -> Option<Decimal> {
        self.items.keys().next().map(|(t, _)| *t)
    }

    /// Every message sharing the minimal timestamp, in sequence order.
    pub fn min_bag(&self) -> Vec<&Message> {
        let Some(t) = self.min_time() else { return Vec::new() };
        self.items.range((t, 0)..=(t, u64::MAX)).map(|(_, m)| m).collect()
    }

    pub fn remove(&mut self, t_assume: Decimal, seq: u64) -> Option<Message> {
        self.items.remove(&(t_assume, seq))
    }

    /// Removes the messages matching `pred` and returns how many went.
    pub fn remove_where(&mut self, mut pred: impl FnMut(&Message) -> bool) -> usize {
        let before = self.items.len();
        self.items.retain(|_, m| !pred(m));
        before - self.items.len()
    }

    pub fn any(&self, pred: impl FnMut(&Message) -> bool) -> bool {
        self.items.values().any(pred)
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &Message> {
        self.items.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(seq: u64, t: i64, receiver: u32, ev: &str) -> Message {
        Message {
            seq,
            sender: receiver,
            receiver,
            event: ev.into(),
            t_send: Decimal::ZERO,
            t_assume: Decimal::from(t),
            kind: TriggerKind::External,
            payload: vec![],
            with: vec![],
            scheduled: false,
        }
    }

    #[test]
    fn min_bag_takes_the_earliest_instant() {
        let mut q = GlobalQueue::default();
        q.push(msg(0, 5, 0, "a"));
        q.push(msg(1, 3, 1, "b"));
        q.push(msg(2, 3, 0, "c"));
        let bag: Vec<&str> = q.min_bag().iter().map(|m| m.event.as_str()).collect();
        assert_eq!(bag, ["b", "c"]);
    }

    #[test]
    fn removal_keeps_the_rest_in_order() {
        let mut q = GlobalQueue::default();
        for (i, ev) in ["x", "y", "x", "z"].iter().enumerate() {
            q.push(msg(i as u64, i as i64, 0, ev));
        }
        assert_eq!(q.remove_where(|m| m.event == "x"), 2);
        let left: Vec<&str> = q.iter().map(|m| m.event.as_str()).collect();
        assert_eq!(left, ["y", "z"]);
        assert_eq!(q.remove_where(|m| m.event == "x"), 0);
    }

    #[test]
    fn priorities_follow_the_tie_break_order() {
        use TriggerKind::*;
        let mut kinds = vec![Periodic, External, Initialize, Conditional];
        kinds.sort_by_key(|k| std::cmp::Reverse(k.priority()));
        assert_eq!(kinds, [Initialize, External, Conditional, Periodic]);
    }
}
