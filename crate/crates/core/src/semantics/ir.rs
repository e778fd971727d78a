//! Typed, name-resolved program representation produced by the checker.
//!
//! Every expression and statement carries its resolved type and the name of
//! the typing rule that produced it.

use crate::syntax::ast::{Annotation, BinOp, CollectionKind, IterFn, Program, RefKind};
use crate::syntax::token::Span;
use crate::types::{Type, TypeId, TypeRegistry};
use crate::value::Value;
use rust_decimal::Decimal;
use std::collections::{BTreeSet, HashMap};

/// Index of a local variable in the current frame.
pub type Slot = usize;

#[derive(Debug, Clone)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub rule: &'static str,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMode {
    /// array, list or set position
    Seq,
    /// constant tuple position
    Tuple(usize),
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FnRef {
    /// function `.1` of class `.0`
    Class(usize, usize),
    Global(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
    BitNot,
}

#[derive(Debug, Clone)]
pub enum LValue {
    Local(Slot),
    /// Field of the running actor.
    Field(usize),
    Index {
        base: Box<LValue>,
        index: Box<TExpr>,
        mode: IndexMode,
    },
    /// Position in a record or tuple held by `base`.
    Member { base: Box<LValue>, index: usize },
    /// Field of a passive object (reference semantics).
    ObjectField { object: Box<TExpr>, index: usize },
}

#[derive(Debug, Clone)]
pub struct TCases {
    pub selector: TExpr,
    pub arms: Vec<(TExpr, TBlock)>,
    pub otherwise: Option<TBlock>,
}

#[derive(Debug, Clone)]
pub enum TExprKind {
    Const(Value),
    Local(Slot),
    Field(usize),
    SelfRef,
    /// `message.<key>` inside an event response.
    Message(String),
    Member {
        object: Box<TExpr>,
        index: usize,
    },
    Index {
        object: Box<TExpr>,
        index: Box<TExpr>,
        mode: IndexMode,
    },
    Call {
        func: FnRef,
        args: Vec<TExpr>,
    },
    /// Host function. When `write_back` is set the result is also stored
    /// into the first argument (`add`, `push_back`, `removeAt`).
    External {
        name: String,
        args: Vec<TExpr>,
        write_back: Option<Box<LValue>>,
    },
    Prev(usize),
    Now,
    Unary {
        op: UnaryOp,
        operand: Box<TExpr>,
    },
    IncDec {
        target: Box<LValue>,
        delta: i8,
        post: bool,
    },
    /// Operands already carry their common operand type.
    Binary {
        op: BinOp,
        lhs: Box<TExpr>,
        rhs: Box<TExpr>,
    },
    Assign {
        target: Box<LValue>,
        value: Box<TExpr>,
    },
    Cond {
        cond: Box<TExpr>,
        then: Box<TExpr>,
        els: Box<TExpr>,
    },
    Convert {
        operand: Box<TExpr>,
        to: Type,
    },
    Collection {
        kind: CollectionKind,
        elems: Vec<TExpr>,
    },
    MapLit {
        entries: Vec<(TExpr, TExpr)>,
    },
    TupleLit {
        ty: Option<TypeId>,
        elems: Vec<TExpr>,
    },
    RecordLit {
        ty: TypeId,
        fields: Vec<TExpr>,
    },
    /// Class instantiation; `args` follow field order, `None` meaning the
    /// field default. `prealloc` names the main-block slot already holding
    /// the actor's identity.
    Instantiate {
        class: usize,
        args: Vec<Option<TExpr>>,
        prealloc: Option<Slot>,
    },
    Tell {
        receiver: Box<TExpr>,
        event: String,
        args: Vec<TExpr>,
        with: Vec<(String, TExpr)>,
    },
    /// `None` cancels everything.
    Cancel(Option<Vec<String>>),
    Cases(Box<TCases>),
}

impl TExpr {
    pub fn constant(&self) -> Option<&Value> {
        match &self.kind {
            TExprKind::Const(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub ty: Type,
    pub rule: &'static str,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum TStmtKind {
    Let { slot: Slot, init: TExpr },
    Expr(TExpr),
    Return(Option<TExpr>),
    If {
        cond: TExpr,
        then: TBlock,
        els: Option<TBlock>,
    },
    While { cond: TExpr, body: TBlock },
    DoWhile { body: TBlock, cond: TExpr },
    Foreach {
        iter: IterFn,
        collection: TExpr,
        slots: Vec<Slot>,
        /// Declared loop variable types; bound values convert to them.
        var_types: Vec<Type>,
        body: TBlock,
    },
    Break,
    Cases(TCases),
}

#[derive(Debug, Clone)]
pub struct TBlock {
    pub stmts: Vec<TStmt>,
    pub ty: Type,
    pub rule: &'static str,
}

#[derive(Debug, Clone)]
pub struct FunctionInfo {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub body: TBlock,
    /// Slot names; parameters occupy the first slots.
    pub frame: Vec<String>,
    pub span: Span,
}

/// One placeholder-aware parameter of an external signature.
#[derive(Debug, Clone, PartialEq)]
pub enum SigType {
    Concrete(Type),
    Placeholder(String),
}

#[derive(Debug, Clone)]
pub struct ExternalInfo {
    pub name: String,
    pub params: Vec<(String, SigType)>,
    pub ret: SigType,
    pub span: Span,
    /// Declared in the prelude rather than the model.
    pub from_prelude: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyInfo {
    pub name: String,
    pub value: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct FieldInfo {
    pub name: String,
    pub ty: Type,
    pub state: bool,
    pub default: Option<TExpr>,
    pub properties: Vec<PropertyInfo>,
    pub annotations: Vec<Annotation>,
    pub span: Span,
}

impl FieldInfo {
    pub fn property(&self, name: &str) -> Option<&PropertyInfo> {
        self.properties.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub enum Trigger {
    External,
    Periodic { period_ms: Decimal },
    Conditional { cond: TExpr, frame: usize },
}

impl Trigger {
    pub fn name(&self) -> &'static str {
        match self {
            Trigger::External => "external",
            Trigger::Periodic { .. } => "periodic",
            Trigger::Conditional { .. } => "conditional",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResponseInfo {
    pub name: String,
    pub trigger: Trigger,
    pub params: Vec<(String, Type)>,
    pub body: TBlock,
    pub frame: Vec<String>,
    pub annotations: Vec<Annotation>,
    pub properties: Vec<PropertyInfo>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct ConstInfo {
    pub name: String,
    pub ty: Type,
    pub value: Value,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub name: String,
    pub type_id: TypeId,
    pub kind: RefKind,
    pub fields: Vec<FieldInfo>,
    pub consts: Vec<ConstInfo>,
    pub functions: Vec<FunctionInfo>,
    pub responses: Vec<ResponseInfo>,
    pub annotations: Vec<Annotation>,
    /// Frame size needed to evaluate field defaults.
    pub init_frame: usize,
    pub span: Span,
}

impl ClassInfo {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn response(&self, name: &str) -> Option<&ResponseInfo> {
        self.responses.iter().find(|r| r.name == name)
    }

    pub fn response_index(&self, name: &str) -> Option<usize> {
        self.responses.iter().position(|r| r.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct MainInfo {
    pub body: TBlock,
    pub frame: Vec<String>,
    /// Slots of top-level actor declarations, in declaration order; their
    /// identities are allocated before any statement runs.
    pub prealloc: Vec<Slot>,
}

/// The decorated program shared by the runtime and the generators.
#[derive(Debug, Clone)]
pub struct Model {
    pub program: Program,
    pub registry: TypeRegistry,
    pub consts: Vec<ConstInfo>,
    pub classes: Vec<ClassInfo>,
    pub functions: Vec<FunctionInfo>,
    pub externals: Vec<ExternalInfo>,
    pub main: Option<MainInfo>,
    /// Length of one simulation time unit in milliseconds.
    pub sim_time_unit_ms: Decimal,
    pub annotations: Vec<Annotation>,
    pub rules_applied: BTreeSet<&'static str>,
    /// Source spans where a named constant was folded into its value.
    pub const_refs: HashMap<Span, String>,
    /// Explicit casts of named constants, as written, keyed by the span of
    /// the constant they were folded into.
    pub folded_casts: HashMap<Span, TExpr>,
}

impl Model {
    pub fn class(&self, name: &str) -> Option<&ClassInfo> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&ConstInfo> {
        self.consts.iter().find(|c| c.name == name)
    }

    pub fn external(&self, name: &str, arity: usize) -> Option<&ExternalInfo> {
        self.externals
            .iter()
            .find(|e| e.name == name && e.params.len() == arity)
    }
}
