use crate::syntax::ast::{PrimType, RefKind};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum IntKind {
    I8,
    I16,
    I32,
    I64,
    U8,
    U16,
    U32,
    U64,
}

impl IntKind {
    pub fn signed(self) -> bool {
        matches!(self, IntKind::I8 | IntKind::I16 | IntKind::I32 | IntKind::I64)
    }

    pub fn bits(self) -> u32 {
        match self {
            IntKind::I8 | IntKind::U8 => 8,
            IntKind::I16 | IntKind::U16 => 16,
            IntKind::I32 | IntKind::U32 => 32,
            IntKind::I64 | IntKind::U64 => 64,
        }
    }

    pub fn min(self) -> i128 {
        if self.signed() {
            -(1i128 << (self.bits() - 1))
        } else {
            0
        }
    }

    pub fn max(self) -> i128 {
        if self.signed() {
            (1i128 << (self.bits() - 1)) - 1
        } else {
            (1i128 << self.bits()) - 1
        }
    }

    pub fn contains(self, v: i128) -> bool {
        v >= self.min() && v <= self.max()
    }

    pub fn name(self) -> &'static str {
        match self {
            IntKind::I8 => "int8",
            IntKind::I16 => "int16",
            IntKind::I32 => "int32",
            IntKind::I64 => "int64",
            IntKind::U8 => "uint8",
            IntKind::U16 => "uint16",
            IntKind::U32 => "uint32",
            IntKind::U64 => "uint64",
        }
    }
}

/// Index of a registered enum, tuple, record or class definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TypeId(pub u32);

/// A resolved type. Aliases are expanded away before a `Type` is built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Type {
    /// Placeholder still to be resolved.
    Any,
    /// Result of an expression that already failed to type; silences cascades.
    Error,
    /// Statements and functions without a value.
    Void,
    /// Type of the `null` literal.
    Null,
    Int(IntKind),
    Float,
    Double,
    Bool,
    Char,
    Str,
    Timespan,
    Array(Box<Type>, Option<u64>),
    List(Box<Type>),
    Set(Box<Type>),
    Map(Box<Type>, Box<Type>),
    /// Anonymous tuple, e.g. the type of `tuple(true, 1)`.
    Tuple(Vec<Type>),
    Named(TypeId),
    ActorRef,
    ConnectionRef,
    ObjectRef,
}

impl Type {
    pub fn from_prim(p: PrimType) -> Type {
        match p {
            PrimType::Int8 => Type::Int(IntKind::I8),
            PrimType::Int16 => Type::Int(IntKind::I16),
            PrimType::Int32 => Type::Int(IntKind::I32),
            PrimType::Int64 => Type::Int(IntKind::I64),
            PrimType::Uint8 => Type::Int(IntKind::U8),
            PrimType::Uint16 => Type::Int(IntKind::U16),
            PrimType::Uint32 => Type::Int(IntKind::U32),
            PrimType::Uint64 => Type::Int(IntKind::U64),
            PrimType::Float => Type::Float,
            PrimType::Double => Type::Double,
            PrimType::Bool => Type::Bool,
            PrimType::Char => Type::Char,
            PrimType::String => Type::Str,
            PrimType::Timespan => Type::Timespan,
        }
    }

    pub fn from_ref(r: RefKind) -> Type {
        match r {
            RefKind::Actor => Type::ActorRef,
            RefKind::Connection => Type::ConnectionRef,
            RefKind::Object => Type::ObjectRef,
        }
    }

    /// The type of a bare integer literal: the prelude `int`.
    pub fn default_int() -> Type {
        Type::Int(IntKind::I64)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int(_) | Type::Float | Type::Double)
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Type::Int(_))
    }

    pub fn is_collection(&self) -> bool {
        matches!(
            self,
            Type::Array(..) | Type::List(_) | Type::Set(_) | Type::Map(..)
        )
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Type::Error)
    }

    /// True if `any` occurs anywhere inside the type.
    pub fn contains_any(&self) -> bool {
        match self {
            Type::Any => true,
            Type::Array(e, _) | Type::List(e) | Type::Set(e) => e.contains_any(),
            Type::Map(k, v) => k.contains_any() || v.contains_any(),
            Type::Tuple(ts) => ts.iter().any(Type::contains_any),
            _ => false,
        }
    }

    /// Element type of an array, list or set.
    pub fn elem(&self) -> Option<&Type> {
        match self {
            Type::Array(e, _) | Type::List(e) | Type::Set(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumDef {
    pub name: String,
    pub items: Vec<(String, i64)>,
}

impl EnumDef {
    pub fn code_of(&self, item: &str) -> Option<i64> {
        self.items.iter().find(|(n, _)| n == item).map(|(_, c)| *c)
    }

    pub fn name_of(&self, code: i64) -> Option<&str> {
        self.items
            .iter()
            .find(|(_, c)| *c == code)
            .map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TypeDef {
    Enum(EnumDef),
    Tuple { name: String, elems: Vec<Type> },
    Record { name: String, fields: Vec<(String, Type)> },
    /// `index` points into the analyzed program's class table.
    Class { name: String, kind: RefKind, index: usize },
}

impl TypeDef {
    pub fn name(&self) -> &str {
        match self {
            TypeDef::Enum(e) => &e.name,
            TypeDef::Tuple { name, .. } | TypeDef::Record { name, .. } | TypeDef::Class { name, .. } => {
                name
            }
        }
    }
}

/// What a type name refers to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TypeEntry {
    /// `def A T` without a new id.
    Alias(Type),
    Def(TypeId),
}

/// Registered type definitions plus the name table (aliases included).
#[derive(Debug, Clone, Default, Serialize)]
pub struct TypeRegistry {
    defs: Vec<TypeDef>,
    names: HashMap<String, TypeEntry>,
}

impl TypeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a definition and binds its name; returns the fresh id.
    pub fn register(&mut self, def: TypeDef) -> TypeId {
        let id = TypeId(self.defs.len() as u32);
        self.names.insert(def.name().to_string(), TypeEntry::Def(id));
        self.defs.push(def);
        id
    }

    /// Reserves an id whose definition is filled in later with [`Self::define`].
    pub fn reserve(&mut self, name: &str, placeholder: TypeDef) -> TypeId {
        let id = TypeId(self.defs.len() as u32);
        self.names.insert(name.to_string(), TypeEntry::Def(id));
        self.defs.push(placeholder);
        id
    }

    pub fn define(&mut self, id: TypeId, def: TypeDef) {
        self.defs[id.0 as usize] = def;
    }

    pub fn alias(&mut self, name: &str, target: Type) {
        self.names.insert(name.to_string(), TypeEntry::Alias(target));
    }

    pub fn remove_name(&mut self, name: &str) {
        self.names.remove(name);
    }

    pub fn lookup(&self, name: &str) -> Option<&TypeEntry> {
        self.names.get(name)
    }

    /// Resolves a type name to a type; aliases yield their target.
    pub fn resolve_name(&self, name: &str) -> Option<Type> {
        match self.names.get(name)? {
            TypeEntry::Alias(t) => Some(t.clone()),
            TypeEntry::Def(id) => Some(Type::Named(*id)),
        }
    }

    pub fn get(&self, id: TypeId) -> &TypeDef {
        &self.defs[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn enum_def(&self, id: TypeId) -> Option<&EnumDef> {
        match self.get(id) {
            TypeDef::Enum(e) => Some(e),
            _ => None,
        }
    }

    pub fn class_kind(&self, t: &Type) -> Option<RefKind> {
        match t {
            Type::Named(id) => match self.get(*id) {
                TypeDef::Class { kind, .. } => Some(*kind),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn class_index(&self, t: &Type) -> Option<usize> {
        match t {
            Type::Named(id) => match self.get(*id) {
                TypeDef::Class { index, .. } => Some(*index),
                _ => None,
            },
            _ => None,
        }
    }

    /// Element types of a named or anonymous tuple, or the field types of a record.
    pub fn positional(&self, t: &Type) -> Option<Vec<Type>> {
        match t {
            Type::Tuple(ts) => Some(ts.clone()),
            Type::Named(id) => match self.get(*id) {
                TypeDef::Tuple { elems, .. } => Some(elems.clone()),
                TypeDef::Record { fields, .. } => Some(fields.iter().map(|(_, t)| t.clone()).collect()),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_record(&self, t: &Type) -> bool {
        matches!(t, Type::Named(id) if matches!(self.get(*id), TypeDef::Record { .. }))
    }

    pub fn is_tuple_like(&self, t: &Type) -> bool {
        matches!(t, Type::Tuple(_))
            || matches!(t, Type::Named(id) if matches!(self.get(*id), TypeDef::Tuple { .. }))
    }

    pub fn is_enum(&self, t: &Type) -> bool {
        matches!(t, Type::Named(id) if matches!(self.get(*id), TypeDef::Enum(_)))
    }

    pub fn display(&self, t: &Type) -> String {
        TypeDisplay { reg: self, ty: t }.to_string()
    }
}

struct TypeDisplay<'a> {
    reg: &'a TypeRegistry,
    ty: &'a Type,
}

impl TypeDisplay<'_> {
    fn sub<'b>(&'b self, t: &'b Type) -> TypeDisplay<'b> {
        TypeDisplay { reg: self.reg, ty: t }
    }
}

impl fmt::Display for TypeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ty {
            Type::Any => f.write_str("any"),
            Type::Error => f.write_str("<error>"),
            Type::Void => f.write_str("void"),
            Type::Null => f.write_str("null"),
            Type::Int(k) => f.write_str(k.name()),
            Type::Float => f.write_str("float"),
            Type::Double => f.write_str("double"),
            Type::Bool => f.write_str("bool"),
            Type::Char => f.write_str("char"),
            Type::Str => f.write_str("string"),
            Type::Timespan => f.write_str("timespan"),
            Type::Array(e, None) => write!(f, "array{{{}}}", self.sub(e)),
            Type::Array(e, Some(n)) => write!(f, "array{{{},{n}}}", self.sub(e)),
            Type::List(e) => write!(f, "list{{{}}}", self.sub(e)),
            Type::Set(e) => write!(f, "set{{{}}}", self.sub(e)),
            Type::Map(k, v) => write!(f, "map{{{},{}}}", self.sub(k), self.sub(v)),
            Type::Tuple(ts) => {
                f.write_str("tuple{")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}", self.sub(t))?;
                }
                f.write_str("}")
            }
            Type::Named(id) => {
                if (id.0 as usize) < self.reg.defs.len() {
                    f.write_str(self.reg.get(*id).name())
                } else {
                    write!(f, "<type#{}>", id.0)
                }
            }
            Type::ActorRef => f.write_str("actor"),
            Type::ConnectionRef => f.write_str("connection"),
            Type::ObjectRef => f.write_str("object"),
        }
    }
}
