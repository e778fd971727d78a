//! Runtime values.

use crate::types::{IntKind, Type, TypeDef, TypeId, TypeRegistry};
use rust_decimal::Decimal;
use serde_json::{json, Value as Json};
use std::cell::RefCell;
use std::fmt::Write as _;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectData {
    pub class: TypeId,
    pub fields: Vec<Value>,
}

#[derive(Debug, Clone)]
pub enum Value {
    Void,
    Null,
    /// Every integer kind; the static type decides the admissible range.
    Int(i128),
    Float(f32),
    Double(f64),
    Bool(bool),
    Char(char),
    Str(String),
    /// Exact milliseconds.
    Timespan(Decimal),
    Enum(TypeId, i64),
    Array(Vec<Value>),
    List(Vec<Value>),
    /// Insertion ordered, without duplicates.
    Set(Vec<Value>),
    /// Insertion ordered, unique keys.
    Map(Vec<(Value, Value)>),
    Tuple(Option<TypeId>, Vec<Value>),
    Record(TypeId, Vec<Value>),
    Actor(u32),
    Object(Rc<RefCell<ObjectData>>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (Void, Void) | (Null, Null) => true,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a == b,
            (Double(a), Double(b)) => a == b,
            (Float(a), Double(b)) | (Double(b), Float(a)) => (*a as f64) == *b,
            (Int(a), Double(b)) | (Double(b), Int(a)) => (*a as f64) == *b,
            (Int(a), Float(b)) | (Float(b), Int(a)) => (*a as f64) == (*b as f64),
            (Bool(a), Bool(b)) => a == b,
            (Char(a), Char(b)) => a == b,
            (Str(a), Str(b)) => a == b,
            (Char(a), Str(b)) | (Str(b), Char(a)) => b.chars().eq(std::iter::once(*a)),
            (Timespan(a), Timespan(b)) => a == b,
            (Enum(t, a), Enum(u, b)) => t == u && a == b,
            (Array(a), Array(b)) | (List(a), List(b)) => a == b,
            (Set(a), Set(b)) => a.len() == b.len() && a.iter().all(|x| b.contains(x)),
            (Map(a), Map(b)) => {
                a.len() == b.len() && a.iter().all(|(k, v)| b.iter().any(|(k2, v2)| k == k2 && v == v2))
            }
            (Tuple(_, a), Tuple(_, b)) | (Record(_, a), Record(_, b)) => a == b,
            (Tuple(_, a), Record(_, b)) | (Record(_, b), Tuple(_, a)) => a == b,
            (Actor(a), Actor(b)) => a == b,
            (Object(a), Object(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i128> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Numeric value as f64 (integers convert, timespans do not).
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f as f64),
            Value::Double(d) => Some(*d),
            _ => None,
        }
    }

    pub fn items(&self) -> Option<&Vec<Value>> {
        match self {
            Value::Array(v) | Value::List(v) | Value::Set(v) | Value::Tuple(_, v) | Value::Record(_, v) => Some(v),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Void => "void",
            Value::Null => "null",
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Double(_) => "double",
            Value::Bool(_) => "bool",
            Value::Char(_) => "char",
            Value::Str(_) => "string",
            Value::Timespan(_) => "timespan",
            Value::Enum(..) => "enum",
            Value::Array(_) => "array",
            Value::List(_) => "list",
            Value::Set(_) => "set",
            Value::Map(_) => "map",
            Value::Tuple(..) => "tuple",
            Value::Record(..) => "record",
            Value::Actor(_) => "actor",
            Value::Object(_) => "object",
        }
    }

    /// Default value of a declared type: zero, false, empty, or null.
    /// `None` for types without one (class references are nullable and
    /// default to null).
    pub fn zero(ty: &Type, reg: &TypeRegistry) -> Value {
        match ty {
            Type::Int(_) => Value::Int(0),
            Type::Float => Value::Float(0.0),
            Type::Double => Value::Double(0.0),
            Type::Bool => Value::Bool(false),
            Type::Char => Value::Char('\0'),
            Type::Str => Value::Str(String::new()),
            Type::Timespan => Value::Timespan(Decimal::ZERO),
            Type::Array(e, Some(n)) => Value::Array(vec![Value::zero(e, reg); *n as usize]),
            Type::Array(_, None) => Value::Array(Vec::new()),
            Type::List(_) => Value::List(Vec::new()),
            Type::Set(_) => Value::Set(Vec::new()),
            Type::Map(..) => Value::Map(Vec::new()),
            Type::Tuple(ts) => Value::Tuple(None, ts.iter().map(|t| Value::zero(t, reg)).collect()),
            Type::Named(id) => match reg.get(*id) {
                TypeDef::Enum(e) => Value::Enum(*id, e.items.first().map(|(_, c)| *c).unwrap_or(0)),
                TypeDef::Tuple { elems, .. } => {
                    Value::Tuple(Some(*id), elems.iter().map(|t| Value::zero(t, reg)).collect())
                }
                TypeDef::Record { fields, .. } => {
                    Value::Record(*id, fields.iter().map(|(_, t)| Value::zero(t, reg)).collect())
                }
                TypeDef::Class { .. } => Value::Null,
            },
            Type::Void => Value::Void,
            _ => Value::Null,
        }
    }

    /// True for types that the runtime can default-initialize without an
    /// explicit value: everything except references.
    pub fn has_zero(ty: &Type, reg: &TypeRegistry) -> bool {
        !matches!(
            ty,
            Type::ActorRef | Type::ConnectionRef | Type::ObjectRef | Type::Null | Type::Any | Type::Error
        ) && reg.class_kind(ty).is_none()
    }

    /// Text used by `toString` and string interpolation.
    pub fn display(&self, reg: &TypeRegistry) -> String {
        let mut s = String::new();
        self.write_display(&mut s, reg);
        s
    }

    fn write_display(&self, out: &mut String, reg: &TypeRegistry) {
        let list = |out: &mut String, open: &str, items: &[Value], close: &str| {
            out.push_str(open);
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                v.write_display(out, reg);
            }
            out.push_str(close);
        };
        match self {
            Value::Void => out.push_str("void"),
            Value::Null => out.push_str("null"),
            Value::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Value::Float(f) => {
                let _ = write!(out, "{f}");
            }
            Value::Double(d) => {
                let _ = write!(out, "{d}");
            }
            Value::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            Value::Char(c) => out.push(*c),
            Value::Str(s) => out.push_str(s),
            Value::Timespan(ms) => {
                let _ = write!(out, "{}ms", ms.normalize());
            }
            Value::Enum(id, code) => match reg.enum_def(*id).and_then(|e| e.name_of(*code)) {
                Some(n) => out.push_str(n),
                None => {
                    let _ = write!(out, "{code}");
                }
            },
            Value::Array(v) | Value::List(v) | Value::Set(v) => list(out, "[", v, "]"),
            Value::Tuple(_, v) => list(out, "(", v, ")"),
            Value::Record(id, v) => {
                let names: Vec<String> = match reg.get(*id) {
                    TypeDef::Record { fields, .. } => fields.iter().map(|(n, _)| n.clone()).collect(),
                    _ => vec![],
                };
                out.push('{');
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    if let Some(n) = names.get(i) {
                        let _ = write!(out, "{n}: ");
                    }
                    x.write_display(out, reg);
                }
                out.push('}');
            }
            Value::Map(entries) => {
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    k.write_display(out, reg);
                    out.push_str(": ");
                    v.write_display(out, reg);
                }
                out.push('}');
            }
            Value::Actor(id) => {
                let _ = write!(out, "actor#{id}");
            }
            Value::Object(o) => {
                let o = o.borrow();
                let _ = write!(out, "{}#object", reg.get(o.class).name());
            }
        }
    }

    /// JSON rendering used in traces.
    pub fn to_json(&self, reg: &TypeRegistry) -> Json {
        match self {
            Value::Void | Value::Null => Json::Null,
            Value::Int(i) => match i64::try_from(*i) {
                Ok(v) => json!(v),
                Err(_) => json!(*i as u64),
            },
            Value::Float(f) => json!(*f as f64),
            Value::Double(d) => json!(d),
            Value::Bool(b) => json!(b),
            Value::Char(c) => json!(c.to_string()),
            Value::Str(s) => json!(s),
            Value::Timespan(_) | Value::Enum(..) => json!(self.display(reg)),
            Value::Array(v) | Value::List(v) | Value::Set(v) | Value::Tuple(_, v) => {
                Json::Array(v.iter().map(|x| x.to_json(reg)).collect())
            }
            Value::Record(id, v) => match reg.get(*id) {
                TypeDef::Record { fields, .. } => Json::Object(
                    fields
                        .iter()
                        .zip(v)
                        .map(|((n, _), x)| (n.clone(), x.to_json(reg)))
                        .collect(),
                ),
                _ => Json::Array(v.iter().map(|x| x.to_json(reg)).collect()),
            },
            Value::Map(entries) => Json::Array(
                entries
                    .iter()
                    .map(|(k, v)| json!([k.to_json(reg), v.to_json(reg)]))
                    .collect(),
            ),
            Value::Actor(id) => json!({ "actor": id }),
            Value::Object(o) => {
                let o = o.borrow();
                json!({ "object": reg.get(o.class).name(), "fields": o.fields.iter().map(|x| x.to_json(reg)).collect::<Vec<_>>() })
            }
        }
    }
}

/// Integer range check for a value headed into `kind`.
pub fn check_int(v: i128, kind: IntKind) -> Result<Value, String> {
    if kind.contains(v) {
        Ok(Value::Int(v))
    } else {
        Err(format!("integer overflow: {v} does not fit in {}", kind.name()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_equality_across_kinds() {
        assert_eq!(Value::Int(3), Value::Double(3.0));
        assert_ne!(Value::Int(3), Value::Double(3.5));
        assert_eq!(Value::Char('a'), Value::Str("a".into()));
    }

    #[test]
    fn zero_values() {
        let reg = TypeRegistry::new();
        assert_eq!(Value::zero(&Type::Int(IntKind::I8), &reg), Value::Int(0));
        assert_eq!(
            Value::zero(&Type::Array(Box::new(Type::Bool), Some(2)), &reg),
            Value::Array(vec![Value::Bool(false); 2])
        );
        assert!(matches!(Value::zero(&Type::ActorRef, &reg), Value::Null));
        assert!(!Value::has_zero(&Type::ActorRef, &reg));
    }

    #[test]
    fn display_forms() {
        let reg = TypeRegistry::new();
        assert_eq!(Value::Double(2.5).display(&reg), "2.5");
        assert_eq!(Value::Double(100.0).display(&reg), "100");
        assert_eq!(Value::Timespan(Decimal::new(1500, 0)).display(&reg), "1500ms");
        assert_eq!(
            Value::Array(vec![Value::Int(1), Value::Int(2)]).display(&reg),
            "[1, 2]"
        );
    }
}
