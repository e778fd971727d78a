//! Implicit coercion and unification.

use super::ty::{IntKind, Type, TypeRegistry};
use crate::syntax::ast::RefKind;

fn int_widens(from: IntKind, to: IntKind) -> bool {
    from.signed() == to.signed() && from.bits() <= to.bits()
}

/// `from ↪ to`: a value of `from` can be used where `to` is expected
/// without an explicit conversion.
pub fn coercible(from: &Type, to: &Type, reg: &TypeRegistry) -> bool {
    if from == to {
        return true;
    }
    match (from, to) {
        (Type::Error, _) | (_, Type::Error) => true,
        (Type::Any, _) | (_, Type::Any) => true,
        (Type::Int(a), Type::Int(b)) => int_widens(*a, *b),
        (Type::Int(a), Type::Float) => int_widens(*a, IntKind::I32),
        (Type::Int(a), Type::Double) => int_widens(*a, IntKind::I64),
        (Type::Float, Type::Double) => true,
        (Type::Char, Type::Str) => true,
        (Type::Null, t) => is_reference(t, reg),
        (Type::ConnectionRef, Type::ActorRef) => true,
        (Type::Named(_), Type::ActorRef) => matches!(
            reg.class_kind(from),
            Some(RefKind::Actor | RefKind::Connection)
        ),
        (Type::Named(_), Type::ConnectionRef) => reg.class_kind(from) == Some(RefKind::Connection),
        (Type::Named(_), Type::ObjectRef) => reg.class_kind(from) == Some(RefKind::Object),
        (Type::Array(a, n), Type::Array(b, m)) => {
            (m.is_none() || n == m) && coercible(a, b, reg)
        }
        (Type::List(a), Type::List(b)) | (Type::Set(a), Type::Set(b)) => coercible(a, b, reg),
        (Type::Map(ka, va), Type::Map(kb, vb)) => coercible(ka, kb, reg) && coercible(va, vb, reg),
        _ => positional_coercible(from, to, reg),
    }
}

/// Tuples and records convert into each other elementwise when the arity
/// matches. Two distinct named tuples (or records) do not.
fn positional_coercible(from: &Type, to: &Type, reg: &TypeRegistry) -> bool {
    let both_named = matches!((from, to), (Type::Named(_), Type::Named(_)));
    let same_family = (reg.is_record(from) && reg.is_record(to))
        || (reg.is_tuple_like(from) && reg.is_tuple_like(to) && both_named);
    if same_family {
        return false;
    }
    match (reg.positional(from), reg.positional(to)) {
        (Some(a), Some(b)) => a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| coercible(x, y, reg)),
        _ => false,
    }
}

pub fn is_reference(t: &Type, reg: &TypeRegistry) -> bool {
    matches!(
        t,
        Type::ActorRef | Type::ConnectionRef | Type::ObjectRef | Type::Null
    ) || reg.class_kind(t).is_some()
}

/// Types reachable from `t` by coercion, `t` first. Only the scalar and
/// reference lattices are enumerated; composite types reach themselves.
fn supertypes(t: &Type, reg: &TypeRegistry) -> Vec<Type> {
    use IntKind::*;
    let mut out = vec![t.clone()];
    match t {
        Type::Int(k) => {
            let chain: &[IntKind] = if k.signed() { &[I8, I16, I32, I64] } else { &[U8, U16, U32, U64] };
            out.extend(chain.iter().filter(|w| int_widens(*k, **w) && *w != k).map(|w| Type::Int(*w)));
            if int_widens(*k, I32) {
                out.push(Type::Float);
            }
            if int_widens(*k, I64) {
                out.push(Type::Double);
            }
        }
        Type::Float => out.push(Type::Double),
        Type::Char => out.push(Type::Str),
        Type::ConnectionRef => out.push(Type::ActorRef),
        Type::Named(_) => match reg.class_kind(t) {
            Some(RefKind::Connection) => {
                out.push(Type::ConnectionRef);
                out.push(Type::ActorRef);
            }
            Some(RefKind::Actor) => out.push(Type::ActorRef),
            Some(RefKind::Object) => out.push(Type::ObjectRef),
            None => {}
        },
        _ => {}
    }
    out
}

/// Picks between two mutually coercible tuple-like types: records win over
/// named tuples, which win over anonymous ones; ties go to the smaller id.
fn prefer_positional(a: &Type, b: &Type, reg: &TypeRegistry) -> Type {
    let rank = |t: &Type| match t {
        Type::Named(id) if reg.is_record(t) => (0, id.0),
        Type::Named(id) => (1, id.0),
        _ => (2, 0),
    };
    if rank(a) <= rank(b) {
        a.clone()
    } else {
        b.clone()
    }
}

/// Least common supertype of `a` and `b`, if one exists. `any` unifies with
/// everything and yields the other side.
pub fn unify(a: &Type, b: &Type, reg: &TypeRegistry) -> Option<Type> {
    match (a, b) {
        (Type::Error, _) | (_, Type::Error) => return Some(Type::Error),
        (Type::Any, t) | (t, Type::Any) => return Some(t.clone()),
        (Type::Null, t) | (t, Type::Null) if is_reference(t, reg) => return Some(t.clone()),
        (Type::Array(x, n), Type::Array(y, m)) => {
            let e = unify(x, y, reg)?;
            return Some(Type::Array(Box::new(e), if n == m { *n } else { None }));
        }
        (Type::List(x), Type::List(y)) => return Some(Type::List(Box::new(unify(x, y, reg)?))),
        (Type::Set(x), Type::Set(y)) => return Some(Type::Set(Box::new(unify(x, y, reg)?))),
        (Type::Map(k1, v1), Type::Map(k2, v2)) => {
            return Some(Type::Map(Box::new(unify(k1, k2, reg)?), Box::new(unify(v1, v2, reg)?)))
        }
        (Type::Tuple(xs), Type::Tuple(ys)) if xs.len() == ys.len() => {
            let elems: Option<Vec<Type>> = xs.iter().zip(ys).map(|(x, y)| unify(x, y, reg)).collect();
            return elems.map(Type::Tuple);
        }
        _ => {}
    }
    match (coercible(a, b, reg), coercible(b, a, reg)) {
        (true, true) => return Some(prefer_positional(a, b, reg)),
        (true, false) => return Some(b.clone()),
        (false, true) => return Some(a.clone()),
        _ => {}
    }
    let common: Vec<Type> = supertypes(a, reg)
        .into_iter()
        .filter(|s| coercible(b, s, reg))
        .collect();
    common
        .iter()
        .find(|c| common.iter().all(|o| coercible(c, o, reg)))
        .cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ty::{EnumDef, TypeDef};
    use proptest::prelude::*;

    fn reg() -> TypeRegistry {
        let mut r = TypeRegistry::new();
        r.register(TypeDef::Enum(EnumDef { name: "E".into(), items: vec![("A".into(), 0)] }));
        r.register(TypeDef::Tuple { name: "P".into(), elems: vec![Type::Str, Type::Int(IntKind::I64)] });
        r.register(TypeDef::Record {
            name: "R".into(),
            fields: vec![("name".into(), Type::Str), ("age".into(), Type::Int(IntKind::I64))],
        });
        r.register(TypeDef::Class { name: "A".into(), kind: RefKind::Actor, index: 0 });
        r.register(TypeDef::Class { name: "C".into(), kind: RefKind::Connection, index: 1 });
        r
    }

    fn scalar() -> impl Strategy<Value = Type> {
        use IntKind::*;
        prop_oneof![
            Just(Type::Int(I8)),
            Just(Type::Int(I16)),
            Just(Type::Int(I32)),
            Just(Type::Int(I64)),
            Just(Type::Int(U8)),
            Just(Type::Int(U16)),
            Just(Type::Int(U32)),
            Just(Type::Int(U64)),
            Just(Type::Float),
            Just(Type::Double),
            Just(Type::Bool),
            Just(Type::Char),
            Just(Type::Str),
            Just(Type::Timespan),
            Just(Type::Null),
            Just(Type::ActorRef),
            Just(Type::ConnectionRef),
            Just(Type::ObjectRef),
            (0u32..5).prop_map(|i| Type::Named(crate::types::ty::TypeId(i))),
        ]
    }

    fn any_type() -> impl Strategy<Value = Type> {
        scalar().prop_recursive(2, 8, 3, |inner| {
            prop_oneof![
                (inner.clone(), prop::option::of(0u64..4)).prop_map(|(t, n)| Type::Array(Box::new(t), n)),
                inner.clone().prop_map(|t| Type::List(Box::new(t))),
                inner.clone().prop_map(|t| Type::Set(Box::new(t))),
                (inner.clone(), inner.clone()).prop_map(|(k, v)| Type::Map(Box::new(k), Box::new(v))),
                prop::collection::vec(inner, 1..3).prop_map(Type::Tuple),
            ]
        })
    }

    #[test]
    fn widening_chains() {
        let r = reg();
        use IntKind::*;
        assert!(coercible(&Type::Int(I8), &Type::Int(I64), &r));
        assert!(!coercible(&Type::Int(I64), &Type::Int(I32), &r));
        assert!(!coercible(&Type::Int(U8), &Type::Int(I16), &r));
        assert!(coercible(&Type::Int(I32), &Type::Float, &r));
        assert!(!coercible(&Type::Int(I64), &Type::Float, &r));
        assert!(coercible(&Type::Int(I64), &Type::Double, &r));
        assert!(coercible(&Type::Float, &Type::Double, &r));
        assert!(!coercible(&Type::Double, &Type::Float, &r));
        assert!(coercible(&Type::Char, &Type::Str, &r));
        assert!(!coercible(&Type::Bool, &Type::Int(I64), &r));
        assert!(!coercible(&Type::Int(I64), &Type::Bool, &r));
    }

    #[test]
    fn references() {
        let r = reg();
        let actor_class = r.resolve_name("A").unwrap();
        let conn_class = r.resolve_name("C").unwrap();
        assert!(coercible(&actor_class, &Type::ActorRef, &r));
        assert!(!coercible(&actor_class, &Type::ConnectionRef, &r));
        assert!(coercible(&conn_class, &Type::ActorRef, &r));
        assert!(coercible(&Type::ConnectionRef, &Type::ActorRef, &r));
        assert!(coercible(&Type::Null, &actor_class, &r));
        assert!(!coercible(&Type::Null, &Type::Int(IntKind::I64), &r));
    }

    #[test]
    fn tuple_record_exception() {
        let r = reg();
        let p = r.resolve_name("P").unwrap();
        let rec = r.resolve_name("R").unwrap();
        let anon = Type::Tuple(vec![Type::Str, Type::Int(IntKind::I32)]);
        assert!(coercible(&anon, &rec, &r));
        assert!(coercible(&rec, &p, &r));
        assert!(coercible(&p, &rec, &r));
        assert!(coercible(&anon, &p, &r));
        assert!(!coercible(&Type::Tuple(vec![Type::Str]), &rec, &r));
    }

    #[test]
    fn unify_least() {
        let r = reg();
        use IntKind::*;
        assert_eq!(unify(&Type::Int(I64), &Type::Float, &r), Some(Type::Double));
        assert_eq!(unify(&Type::Int(I32), &Type::Float, &r), Some(Type::Float));
        assert_eq!(unify(&Type::Int(I8), &Type::Int(I32), &r), Some(Type::Int(I32)));
        assert_eq!(unify(&Type::Char, &Type::Str, &r), Some(Type::Str));
        assert_eq!(unify(&Type::Bool, &Type::Str, &r), None);
        assert_eq!(unify(&Type::Int(U8), &Type::Int(I8), &r), None);
        let a = r.resolve_name("A").unwrap();
        let c = r.resolve_name("C").unwrap();
        assert_eq!(unify(&a, &c, &r), Some(Type::ActorRef));
        assert_eq!(unify(&Type::Any, &Type::Bool, &r), Some(Type::Bool));
        assert_eq!(
            unify(
                &Type::Array(Box::new(Type::Int(I64)), Some(2)),
                &Type::Array(Box::new(Type::Double), Some(3)),
                &r
            ),
            Some(Type::Array(Box::new(Type::Double), None))
        );
    }

    proptest! {
        #[test]
        fn coercion_is_reflexive(t in any_type()) {
            prop_assert!(coercible(&t, &t, &reg()));
        }

        #[test]
        fn coercion_is_transitive(a in any_type(), b in any_type(), c in any_type()) {
            let r = reg();
            if coercible(&a, &b, &r) && coercible(&b, &c, &r) {
                // positional conversions compose only through a tuple/record hop;
                // a named tuple may not become another named tuple directly
                let hop = r.positional(&b).is_some() && r.positional(&a).is_some() && r.positional(&c).is_some();
                prop_assert!(coercible(&a, &c, &r) || hop);
            }
        }

        #[test]
        fn unify_is_commutative(a in any_type(), b in any_type()) {
            let r = reg();
            prop_assert_eq!(unify(&a, &b, &r), unify(&b, &a, &r));
        }

        #[test]
        fn unify_is_idempotent(a in any_type()) {
            let r = reg();
            prop_assert_eq!(unify(&a, &a, &r), Some(a.clone()));
        }

        #[test]
        fn unify_is_an_upper_bound(a in scalar(), b in scalar()) {
            let r = reg();
            if let Some(u) = unify(&a, &b, &r) {
                prop_assert!(coercible(&a, &u, &r));
                prop_assert!(coercible(&b, &u, &r));
            }
        }
    }
}
