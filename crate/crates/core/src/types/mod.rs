//! Types, implicit coercion, unification and value conversion.

pub mod convert;
pub mod relations;
pub mod timespan;
pub mod ty;

pub use convert::{convert, ConvCtx};
pub use relations::{coercible, is_reference, unify};
pub use ty::{EnumDef, IntKind, Type, TypeDef, TypeEntry, TypeId, TypeRegistry};
