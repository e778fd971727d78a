//! Raw syntax tree produced by the parser. Every node carries its span.

use super::timespan::TimespanComponents;
use super::token::Span;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident {
            name: name.into(),
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Program {
    pub annotations: Vec<Annotation>,
    pub includes: Vec<Include>,
    pub consts: Vec<ConstDecl>,
    pub functions: Vec<FunctionDecl>,
    pub types: Vec<TypeDecl>,
    pub main: Option<MainBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MainBlock {
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Annotation {
    pub name: Ident,
    pub properties: Vec<Property>,
    /// Text between `{=` and `=}`, verbatim.
    pub body: Option<String>,
    pub span: Span,
}

impl Annotation {
    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Property {
    pub name: Ident,
    pub value: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Include {
    pub path: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstDecl {
    pub name: Ident,
    pub ty: TypeExpr,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarDecl {
    pub properties: Vec<Property>,
    pub name: Ident,
    pub ty: TypeExpr,
    pub init: Option<Expr>,
    pub span: Span,
}

impl VarDecl {
    pub fn has_property(&self, name: &str) -> bool {
        self.properties.iter().any(|p| p.name.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: Ident,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionDecl {
    pub annotations: Vec<Annotation>,
    pub external: bool,
    /// May be dotted for externals, e.g. `string.format`.
    pub name: Ident,
    pub params: Vec<Param>,
    pub ret: Option<TypeExpr>,
    pub body: Option<Block>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimType {
    Int8,
    Int16,
    Int32,
    Int64,
    Uint8,
    Uint16,
    Uint32,
    Uint64,
    Float,
    Double,
    Bool,
    Char,
    String,
    Timespan,
}

impl PrimType {
    pub fn from_keyword(kw: &str) -> Option<PrimType> {
        Some(match kw {
            "int8" => PrimType::Int8,
            "int16" => PrimType::Int16,
            "int32" => PrimType::Int32,
            "int64" => PrimType::Int64,
            "uint8" => PrimType::Uint8,
            "uint16" => PrimType::Uint16,
            "uint32" => PrimType::Uint32,
            "uint64" => PrimType::Uint64,
            "float" => PrimType::Float,
            "double" => PrimType::Double,
            "bool" => PrimType::Bool,
            "char" => PrimType::Char,
            "string" => PrimType::String,
            "timespan" => PrimType::Timespan,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            PrimType::Int8 => "int8",
            PrimType::Int16 => "int16",
            PrimType::Int32 => "int32",
            PrimType::Int64 => "int64",
            PrimType::Uint8 => "uint8",
            PrimType::Uint16 => "uint16",
            PrimType::Uint32 => "uint32",
            PrimType::Uint64 => "uint64",
            PrimType::Float => "float",
            PrimType::Double => "double",
            PrimType::Bool => "bool",
            PrimType::Char => "char",
            PrimType::String => "string",
            PrimType::Timespan => "timespan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RefKind {
    Object,
    Actor,
    Connection,
}

impl RefKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RefKind::Object => "object",
            RefKind::Actor => "actor",
            RefKind::Connection => "connection",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TypeExprKind {
    Any,
    Prim { prim: PrimType },
    Ref { of: RefKind },
    Named { name: String },
    /// `#T` in external signatures.
    Placeholder { name: String },
    Array { elem: Option<Box<TypeExpr>>, size: Option<Box<Expr>> },
    List { elem: Option<Box<TypeExpr>> },
    Set { elem: Option<Box<TypeExpr>> },
    Map { kv: Option<(Box<TypeExpr>, Box<TypeExpr>)> },
    Tuple { elems: Vec<TypeExpr> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeExpr {
    pub kind: TypeExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeDecl {
    pub annotations: Vec<Annotation>,
    pub name: Ident,
    pub body: TypeDeclBody,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumItem {
    pub name: Ident,
    pub value: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordField {
    pub name: Ident,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TypeDeclBody {
    Alias { target: TypeExpr },
    Enum { items: Vec<EnumItem> },
    Tuple { elems: Vec<TypeExpr> },
    Record { fields: Vec<RecordField> },
    Class(ClassDecl),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDecl {
    pub class_kind: RefKind,
    pub members: Vec<ClassMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "member", rename_all = "kebab-case")]
pub enum ClassMember {
    Var {
        annotations: Vec<Annotation>,
        decl: VarDecl,
    },
    Const {
        annotations: Vec<Annotation>,
        decl: ConstDecl,
    },
    Function(FunctionDecl),
    Do(DoDecl),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "trigger", rename_all = "kebab-case")]
pub enum DoTrigger {
    Receive { properties: Vec<Property> },
    Every { period: Expr, properties: Vec<Property> },
    On { condition: Expr, properties: Vec<Property> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoDecl {
    pub annotations: Vec<Annotation>,
    pub trigger: DoTrigger,
    pub name: Ident,
    /// `None` when the name has no parenthesized list; `Some(vec![])` for `()`.
    pub params: Option<Vec<Param>>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IterFn {
    Keys,
    Values,
    Pairs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopVar {
    pub name: Ident,
    pub ty: Option<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseArm {
    pub value: Expr,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CasesBody {
    pub selector: Box<Expr>,
    pub arms: Vec<CaseArm>,
    pub otherwise: Option<Vec<Stmt>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "stmt", rename_all = "kebab-case")]
pub enum StmtKind {
    Var(VarDecl),
    Const(ConstDecl),
    Expr { expr: Expr },
    Return { value: Option<Expr> },
    If {
        cond: Expr,
        then: Block,
        els: Option<Block>,
    },
    Cases(CasesBody),
    While { cond: Expr, body: Block },
    DoWhile { body: Block, cond: Expr },
    Foreach {
        vars: Vec<LoopVar>,
        iter: IterFn,
        /// Spelling used in source (`entries` is accepted for `pairs`).
        iter_name: String,
        collection: Expr,
        body: Block,
    },
    Break,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
            UnOp::BitNot => "~",
            UnOp::PreInc | UnOp::PostInc => "++",
            UnOp::PreDec | UnOp::PostDec => "--",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Mod => "%=",
        }
    }

    pub fn binop(self) -> Option<BinOp> {
        match self {
            AssignOp::Assign => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
            AssignOp::Mod => Some(BinOp::Mod),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectionKind {
    Array,
    List,
    Set,
}

impl CollectionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CollectionKind::Array => "array",
            CollectionKind::List => "list",
            CollectionKind::Set => "set",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arg {
    pub name: Option<Ident>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithItem {
    pub key: Ident,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "target", rename_all = "kebab-case")]
pub enum CancelTarget {
    All,
    Names { names: Vec<Ident> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "expr", rename_all = "kebab-case")]
pub enum ExprKind {
    Int { value: u64 },
    /// Decimal literal kept as written so conversions round exactly once.
    Decimal { text: String },
    Bool { value: bool },
    Char { value: char },
    Str { value: String },
    Timespan { value: TimespanComponents },
    Null,
    Ident { name: String },
    SelfRef,
    Member { object: Box<Expr>, field: Ident },
    Index { object: Box<Expr>, index: Box<Expr> },
    Call { callee: Ident, args: Vec<Arg> },
    Unary { op: UnOp, operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { op: AssignOp, target: Box<Expr>, value: Box<Expr> },
    Cond { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    Cast { operand: Box<Expr>, ty: TypeExpr },
    Collection { coll: CollectionKind, elems: Vec<Expr> },
    Map { entries: Vec<(Expr, Expr)> },
    Tuple { elems: Vec<Expr> },
    Tell {
        receiver: Box<Expr>,
        event: Ident,
        args: Option<Vec<Expr>>,
        with: Vec<WithItem>,
    },
    Cancel(CancelTarget),
    Cases(CasesBody),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}
