//! Semantic analysis: symbol resolution, typing, constant folding and the
//! per-class event-response tables.

mod calls;
mod expr;
pub mod fold;
pub mod ir;
mod stmt;

pub use ir::Model;

use crate::diag::Diagnostic;
use crate::syntax::ast::{
    ClassMember, DoTrigger, Program, Property, RefKind, TypeDeclBody, TypeExpr, TypeExprKind,
};
use crate::syntax::token::{FileId, Span};
use crate::syntax::LoadedUnit;
use crate::types::{ConvCtx, EnumDef, Type, TypeDef, TypeEntry, TypeRegistry};
use crate::value::Value;
use fold::{fold, Folded};
use ir::*;
use rust_decimal::Decimal;
use std::collections::{BTreeSet, HashMap};

/// Analyzes a loaded model. Returns the decorated model when there are no
/// errors, plus every diagnostic (warnings included).
pub fn analyze(unit: &LoadedUnit) -> (Option<Model>, Vec<Diagnostic>) {
    analyze_program(&unit.program, unit.prelude_file)
}

pub fn analyze_program(program: &Program, prelude: Option<FileId>) -> (Option<Model>, Vec<Diagnostic>) {
    let mut first = Checker::new(program, prelude, None);
    first.run();
    let (checker, diags) = if first.custom_key_read {
        // `message.<key>` reads need the types of every `with` clause in the
        // program, so a second pass runs with the collected key types.
        let keys = first.with_keys.clone();
        let mut second = Checker::new(program, prelude, Some(keys));
        second.run();
        let d = std::mem::take(&mut second.diags);
        (second, d)
    } else {
        let d = std::mem::take(&mut first.diags);
        (first, d)
    };
    if crate::diag::has_errors(&diags) {
        return (None, diags);
    }
    (Some(checker.finish()), diags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ctx {
    Main,
    Function,
    Response,
    Condition,
    FieldInit,
    Const,
}

#[derive(Debug, Clone)]
pub(crate) struct LocalInfo {
    pub name: String,
    pub ty: Type,
    pub constant: Option<Value>,
    pub span: Span,
}

/// Per-body checking state: locals, scopes, loop depth, return type.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub ctx: Ctx,
    pub class: Option<usize>,
    pub locals: Vec<LocalInfo>,
    pub scopes: Vec<Vec<(String, Slot)>>,
    pub loops: usize,
    pub ret: Option<Type>,
    /// main-block actor declarations allocated up front, keyed by span offset
    pub prealloc: HashMap<u32, Slot>,
}

impl Frame {
    fn new(ctx: Ctx, class: Option<usize>) -> Self {
        Frame {
            ctx,
            class,
            locals: Vec::new(),
            scopes: vec![Vec::new()],
            loops: 0,
            ret: None,
            prealloc: HashMap::new(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.locals.iter().map(|l| l.name.clone()).collect()
    }
}

pub(crate) struct Checker<'a> {
    pub program: &'a Program,
    pub prelude: Option<FileId>,
    pub reg: TypeRegistry,
    pub diags: Vec<Diagnostic>,
    pub rules: BTreeSet<&'static str>,
    pub consts: Vec<ConstInfo>,
    pub classes: Vec<ClassInfo>,
    pub functions: Vec<FunctionInfo>,
    pub function_index: HashMap<String, usize>,
    pub externals: Vec<ExternalInfo>,
    pub unit_ms: Decimal,
    pub with_keys: HashMap<String, Type>,
    pub known_keys: Option<HashMap<String, Type>>,
    pub custom_key_read: bool,
    pub frame: Frame,
    pub main: Option<MainInfo>,
    /// Main-block slot for the actor instantiated by the declaration
    /// currently being checked.
    pub prealloc_hint: Option<Slot>,
    pub const_refs: HashMap<Span, String>,
    pub folded_casts: HashMap<Span, TExpr>,
}


impl<'a> Checker<'a> {
    fn new(program: &'a Program, prelude: Option<FileId>, known_keys: Option<HashMap<String, Type>>) -> Self {
        Checker {
            program,
            prelude,
            reg: TypeRegistry::new(),
            diags: Vec::new(),
            rules: BTreeSet::new(),
            consts: Vec::new(),
            classes: Vec::new(),
            functions: Vec::new(),
            function_index: HashMap::new(),
            externals: Vec::new(),
            unit_ms: Decimal::ONE,
            with_keys: HashMap::new(),
            known_keys,
            custom_key_read: false,
            frame: Frame::new(Ctx::Const, None),
            main: None,
            prealloc_hint: None,
            const_refs: HashMap::new(),
            folded_casts: HashMap::new(),
        }
    }

    pub fn cx(&self) -> ConvCtx<'_> {
        ConvCtx {
            reg: &self.reg,
            unit_ms: self.unit_ms,
        }
    }

    pub fn error(&mut self, span: Span, rule: &str, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(span, rule, msg));
    }

    pub fn warning(&mut self, span: Span, rule: &str, msg: impl Into<String>) {
        self.diags.push(Diagnostic::warning(span, rule, msg));
    }

    pub fn show(&self, t: &Type) -> String {
        self.reg.display(t)
    }

    fn in_prelude(&self, span: Span) -> bool {
        Some(span.file) == self.prelude
    }

    fn run(&mut self) {
        self.register_types();
        self.global_consts();
        self.class_signatures();
        self.function_signatures();
        for ci in 0..self.classes.len() {
            self.class_bodies(ci);
        }
        self.function_bodies();
        self.main_block();
    }

    fn finish(self) -> Model {
        Model {
            program: self.program.clone(),
            registry: self.reg,
            consts: self.consts,
            classes: self.classes,
            functions: self.functions,
            externals: self.externals,
            main: self.main,
            sim_time_unit_ms: self.unit_ms,
            annotations: self.program.annotations.clone(),
            rules_applied: self.rules,
            const_refs: self.const_refs,
            folded_casts: self.folded_casts,
        }
    }

    // ----- types -----

    /// Resolves a written type. Placeholders are only meaningful in external
    /// signatures; elsewhere they are rejected.
    pub fn resolve_type(&mut self, te: &TypeExpr) -> Type {
        match &te.kind {
            TypeExprKind::Any => Type::Any,
            TypeExprKind::Prim { prim } => Type::from_prim(*prim),
            TypeExprKind::Ref { of } => Type::from_ref(*of),
            TypeExprKind::Named { name } => match self.reg.resolve_name(name) {
                Some(t) => {
                    if let Type::Named(_) = t {
                        self.rules.insert("context-diff");
                    } else {
                        self.rules.insert("alias");
                    }
                    t
                }
                None => {
                    self.error(te.span, "alias", format!("unknown type `{name}`"));
                    Type::Error
                }
            },
            TypeExprKind::Placeholder { name } => {
                self.error(te.span, "call-ref", format!("placeholder `#{name}` outside an external signature"));
                Type::Error
            }
            TypeExprKind::Array { elem, size } => {
                let e = elem.as_ref().map(|t| self.resolve_type(t)).unwrap_or(Type::Any);
                let n = size.as_ref().and_then(|s| self.const_size(s));
                Type::Array(Box::new(e), n)
            }
            TypeExprKind::List { elem } => {
                Type::List(Box::new(elem.as_ref().map(|t| self.resolve_type(t)).unwrap_or(Type::Any)))
            }
            TypeExprKind::Set { elem } => {
                Type::Set(Box::new(elem.as_ref().map(|t| self.resolve_type(t)).unwrap_or(Type::Any)))
            }
            TypeExprKind::Map { kv } => match kv {
                Some((k, v)) => {
                    let k = self.resolve_type(k);
                    let v = self.resolve_type(v);
                    Type::Map(Box::new(k), Box::new(v))
                }
                None => Type::Map(Box::new(Type::Any), Box::new(Type::Any)),
            },
            TypeExprKind::Tuple { elems } => Type::Tuple(elems.iter().map(|t| self.resolve_type(t)).collect()),
        }
    }

    fn sig_type(&mut self, te: &TypeExpr) -> SigType {
        match &te.kind {
            TypeExprKind::Placeholder { name } => SigType::Placeholder(name.clone()),
            _ => SigType::Concrete(self.resolve_type(te)),
        }
    }

    fn const_size(&mut self, e: &crate::syntax::ast::Expr) -> Option<u64> {
        let saved = std::mem::replace(&mut self.frame, Frame::new(Ctx::Const, None));
        let t = self.expr(e, Some(&Type::default_int()));
        self.frame = saved;
        match self.fold_value(&t) {
            Some(Value::Int(n)) if n >= 0 => Some(n as u64),
            _ => {
                self.error(e.span, "coerce-coll", "array size must be a non-negative integer constant");
                None
            }
        }
    }

    /// Folds a typed expression, reporting evaluation errors. `None` when
    /// the expression is not constant.
    pub fn fold_value(&mut self, e: &TExpr) -> Option<Value> {
        match fold(e, self.cx()) {
            Folded::Value(v) => Some(v),
            Folded::NotConst => None,
            Folded::Error(m) => {
                self.error(e.span, e.rule, m);
                None
            }
        }
    }

    fn register_types(&mut self) {
        let program = self.program;
        let mut seen: HashMap<String, bool> = HashMap::new();
        let mut ids = Vec::new();
        for decl in &program.types {
            let name = decl.name.name.clone();
            let from_prelude = self.in_prelude(decl.span);
            if let Some(prev_prelude) = seen.get(&name) {
                // a model may redefine a prelude alias; anything else is a clash
                if !*prev_prelude || from_prelude {
                    self.error(decl.name.span, "alias", format!("type `{name}` is defined more than once"));
                    ids.push(None);
                    continue;
                }
            }
            seen.insert(name.clone(), from_prelude);
            let placeholder = TypeDef::Enum(EnumDef { name: name.clone(), items: vec![] });
            let id = match &decl.body {
                TypeDeclBody::Alias { .. } => {
                    self.reg.remove_name(&name);
                    None
                }
                _ => Some(self.reg.reserve(&name, placeholder)),
            };
            ids.push(id);
        }
        // aliases may refer to each other in any order; resolve to a fixpoint
        let mut pending: Vec<usize> = (0..program.types.len())
            .filter(|i| matches!(program.types[*i].body, TypeDeclBody::Alias { .. }))
            .collect();
        loop {
            let before = pending.len();
            pending.retain(|&i| {
                let decl = &program.types[i];
                let TypeDeclBody::Alias { target } = &decl.body else { return false };
                if self.alias_ready(target) {
                    let t = self.resolve_type(target);
                    self.reg.alias(&decl.name.name, t);
                    self.rules.insert("alias");
                    false
                } else {
                    true
                }
            });
            if pending.is_empty() || pending.len() == before {
                break;
            }
        }
        for i in pending {
            let decl = &program.types[i];
            self.error(decl.name.span, "alias", format!("alias `{}` does not resolve (unknown type or cycle)", decl.name.name));
            self.reg.alias(&decl.name.name, Type::Error);
        }
        for (decl, id) in program.types.iter().zip(ids) {
            let Some(id) = id else { continue };
            let def = match &decl.body {
                TypeDeclBody::Enum { items } => {
                    let mut out: Vec<(String, i64)> = Vec::new();
                    let mut next = 0i64;
                    for item in items {
                        let code = match &item.value {
                            Some(v) => {
                                let t = self.expr(v, Some(&Type::default_int()));
                                match self.fold_value(&t) {
                                    Some(Value::Int(c)) => c as i64,
                                    _ => {
                                        self.error(v.span, "conv-int2enum", "enum code must be an integer constant");
                                        next
                                    }
                                }
                            }
                            None => next,
                        };
                        if out.iter().any(|(n, c)| *n == item.name.name || *c == code) {
                            self.error(item.name.span, "conv-int2enum", format!("duplicate enum constant or code `{}`", item.name.name));
                        }
                        out.push((item.name.name.clone(), code));
                        next = code + 1;
                    }
                    TypeDef::Enum(EnumDef { name: decl.name.name.clone(), items: out })
                }
                TypeDeclBody::Tuple { elems } => TypeDef::Tuple {
                    name: decl.name.name.clone(),
                    elems: elems.iter().map(|t| self.resolve_type(t)).collect(),
                },
                TypeDeclBody::Record { fields } => {
                    let mut out: Vec<(String, Type)> = Vec::new();
                    for f in fields {
                        if out.iter().any(|(n, _)| *n == f.name.name) {
                            self.error(f.name.span, "recordval", format!("duplicate field `{}`", f.name.name));
                        }
                        let t = self.resolve_type(&f.ty);
                        out.push((f.name.name.clone(), t));
                    }
                    TypeDef::Record { name: decl.name.name.clone(), fields: out }
                }
                TypeDeclBody::Class(c) => {
                    let index = self.classes.len();
                    self.classes.push(ClassInfo {
                        name: decl.name.name.clone(),
                        type_id: id,
                        kind: c.class_kind,
                        fields: Vec::new(),
                        consts: Vec::new(),
                        functions: Vec::new(),
                        responses: Vec::new(),
                        annotations: decl.annotations.clone(),
                        init_frame: 0,
                        span: decl.span,
                    });
                    TypeDef::Class { name: decl.name.name.clone(), kind: c.class_kind, index }
                }
                TypeDeclBody::Alias { .. } => unreachable!(),
            };
            self.reg.define(id, def);
        }
    }

    fn alias_ready(&self, t: &TypeExpr) -> bool {
        match &t.kind {
            TypeExprKind::Named { name } => self.reg.lookup(name).is_some(),
            TypeExprKind::Array { elem, .. } | TypeExprKind::List { elem } | TypeExprKind::Set { elem } => {
                elem.as_ref().map(|e| self.alias_ready(e)).unwrap_or(true)
            }
            TypeExprKind::Map { kv } => kv
                .as_ref()
                .map(|(k, v)| self.alias_ready(k) && self.alias_ready(v))
                .unwrap_or(true),
            TypeExprKind::Tuple { elems } => elems.iter().all(|e| self.alias_ready(e)),
            _ => true,
        }
    }

    /// Checks and folds a constant initializer against its declared type.
    fn const_value(&mut self, decl: &crate::syntax::ast::ConstDecl) -> (Type, Value) {
        let ty = self.resolve_type(&decl.ty);
        let e = self.expr(&decl.value, Some(&ty));
        let e = self.coerce(e, &ty, "var-decl");
        self.rules.insert("var-decl");
        match fold(&e, self.cx()) {
            Folded::Value(v) => (ty, v),
            Folded::NotConst => {
                if !e.ty.is_error() {
                    self.error(decl.value.span, "var-decl", format!("initializer of constant `{}` is not a constant expression", decl.name.name));
                }
                (ty, Value::Null)
            }
            Folded::Error(m) => {
                self.error(decl.value.span, e.rule, format!("in constant `{}`: {m}", decl.name.name));
                (ty, Value::Null)
            }
        }
    }

    fn global_consts(&mut self) {
        let program = self.program;
        self.frame = Frame::new(Ctx::Const, None);
        // the time unit scales every other timespan conversion, so it goes first
        let order: Vec<usize> = {
            let mut v: Vec<usize> = (0..program.consts.len()).collect();
            v.sort_by_key(|&i| program.consts[i].name.name != "SIM_TIME_UNIT");
            v
        };
        for i in order {
            let decl = &program.consts[i];
            if self.consts.iter().any(|c| c.name == decl.name.name) {
                self.error(decl.name.span, "var-decl", format!("constant `{}` is defined more than once", decl.name.name));
                continue;
            }
            let (ty, value) = self.const_value(decl);
            if decl.name.name == "SIM_TIME_UNIT" {
                match (&ty, &value) {
                    (Type::Timespan, Value::Timespan(ms)) if *ms > Decimal::ZERO => self.unit_ms = *ms,
                    _ => self.error(decl.span, "timespan-to-num", "SIM_TIME_UNIT must be a positive timespan constant"),
                }
            }
            self.consts.push(ConstInfo { name: decl.name.name.clone(), ty, value, span: decl.span });
        }
    }

    fn properties(&mut self, props: &[Property]) -> Vec<PropertyInfo> {
        let mut out = Vec::new();
        for p in props {
            let value = p.value.as_ref().and_then(|e| {
                let t = self.expr(e, None);
                let v = self.fold_value(&t);
                if v.is_none() && !t.ty.is_error() {
                    self.error(e.span, "literal", format!("property `{}` needs a constant value", p.name.name));
                }
                v
            });
            out.push(PropertyInfo { name: p.name.name.clone(), value });
        }
        out
    }

    fn class_signatures(&mut self) {
        let program = self.program;
        for decl in &program.types {
            let TypeDeclBody::Class(class) = &decl.body else { continue };
            let Some(ci) = self.classes.iter().position(|c| c.name == decl.name.name && c.span == decl.span) else {
                continue;
            };
            let mut names: Vec<String> = Vec::new();
            let mut dup = |this: &mut Self, name: &crate::syntax::ast::Ident| {
                if names.contains(&name.name) {
                    this.error(name.span, "var-decl", format!("member `{}` is declared more than once in class `{}`", name.name, decl.name.name));
                    true
                } else {
                    names.push(name.name.clone());
                    false
                }
            };
            self.frame = Frame::new(Ctx::Const, Some(ci));
            for m in &class.members {
                match m {
                    ClassMember::Const { decl: c, .. } => {
                        if dup(self, &c.name) {
                            continue;
                        }
                        let (ty, value) = self.const_value(c);
                        self.classes[ci].consts.push(ConstInfo { name: c.name.name.clone(), ty, value, span: c.span });
                    }
                    ClassMember::Var { annotations, decl: v } => {
                        if dup(self, &v.name) {
                            continue;
                        }
                        let ty = self.resolve_type(&v.ty);
                        let properties = self.properties(&v.properties);
                        self.classes[ci].fields.push(FieldInfo {
                            name: v.name.name.clone(),
                            ty,
                            state: v.has_property("state"),
                            default: None,
                            properties,
                            annotations: annotations.clone(),
                            span: v.span,
                        });
                    }
                    ClassMember::Function(f) => {
                        if dup(self, &f.name) {
                            continue;
                        }
                        let params: Vec<(String, Type)> =
                            f.params.iter().map(|p| (p.name.name.clone(), self.resolve_type(&p.ty))).collect();
                        let ret = f.ret.as_ref().map(|t| self.resolve_type(t)).unwrap_or(Type::Void);
                        if f.external {
                            self.error(f.span, "func-decl", "external functions must be declared at the top level");
                        }
                        self.classes[ci].functions.push(FunctionInfo {
                            name: f.name.name.clone(),
                            params,
                            ret,
                            body: empty_block(),
                            frame: Vec::new(),
                            span: f.span,
                        });
                    }
                    ClassMember::Do(d) => {
                        if dup(self, &d.name) {
                            continue;
                        }
                        if class.class_kind == RefKind::Object {
                            self.error(d.span, "do-recv", "object classes cannot declare event responses");
                        }
                        let params: Vec<(String, Type)> = d
                            .params
                            .iter()
                            .flatten()
                            .map(|p| (p.name.name.clone(), self.resolve_type(&p.ty)))
                            .collect();
                        let props = match &d.trigger {
                            DoTrigger::Receive { properties }
                            | DoTrigger::Every { properties, .. }
                            | DoTrigger::On { properties, .. } => properties.clone(),
                        };
                        let properties = self.properties(&props);
                        let trigger = match &d.trigger {
                            DoTrigger::Receive { .. } => Trigger::External,
                            DoTrigger::Every { .. } => Trigger::Periodic { period_ms: Decimal::ONE },
                            DoTrigger::On { .. } => Trigger::Conditional {
                                cond: TExpr {
                                    kind: TExprKind::Const(Value::Bool(false)),
                                    ty: Type::Bool,
                                    rule: "do-on",
                                    span: d.span,
                                },
                                frame: 0,
                            },
                        };
                        self.classes[ci].responses.push(ResponseInfo {
                            name: d.name.name.clone(),
                            trigger,
                            params,
                            body: empty_block(),
                            frame: Vec::new(),
                            annotations: d.annotations.clone(),
                            properties,
                            span: d.span,
                        });
                    }
                }
            }
        }
    }

    fn function_signatures(&mut self) {
        let program = self.program;
        for f in &program.functions {
            let from_prelude = self.in_prelude(f.span);
            if f.external {
                let params: Vec<(String, SigType)> =
                    f.params.iter().map(|p| (p.name.name.clone(), self.sig_type(&p.ty))).collect();
                let ret = f.ret.as_ref().map(|t| self.sig_type(t)).unwrap_or(SigType::Concrete(Type::Void));
                let arity = params.len();
                if let Some(pos) = self.externals.iter().position(|e| e.name == f.name.name && e.params.len() == arity) {
                    if self.externals[pos].from_prelude && !from_prelude {
                        self.externals.remove(pos);
                    } else {
                        self.error(f.name.span, "func-decl", format!("external `{}` with {arity} parameters is declared more than once", f.name.name));
                        continue;
                    }
                }
                self.externals.push(ExternalInfo { name: f.name.name.clone(), params, ret, span: f.span, from_prelude });
                continue;
            }
            if self.function_index.contains_key(&f.name.name) {
                self.error(f.name.span, "func-decl", format!("function `{}` is defined more than once", f.name.name));
                continue;
            }
            let params: Vec<(String, Type)> =
                f.params.iter().map(|p| (p.name.name.clone(), self.resolve_type(&p.ty))).collect();
            let ret = f.ret.as_ref().map(|t| self.resolve_type(t)).unwrap_or(Type::Void);
            self.function_index.insert(f.name.name.clone(), self.functions.len());
            self.functions.push(FunctionInfo {
                name: f.name.name.clone(),
                params,
                ret,
                body: empty_block(),
                frame: Vec::new(),
                span: f.span,
            });
        }
    }

    /// Opens a fresh frame for a function-like body and binds its parameters.
    fn enter(&mut self, ctx: Ctx, class: Option<usize>, params: &[(String, Type)], spans: &[Span]) {
        self.frame = Frame::new(ctx, class);
        for (i, (name, ty)) in params.iter().enumerate() {
            let span = spans.get(i).copied().unwrap_or_default();
            if params[..i].iter().any(|(n, _)| n == name) {
                let rule = if matches!(ctx, Ctx::Function) { "func-decl" } else { "do-recv" };
                self.error(span, rule, format!("parameter `{name}` is declared twice"));
            }
            self.declare(name, ty.clone(), None, span);
        }
    }

    fn class_bodies(&mut self, ci: usize) {
        let program = self.program;
        let Some(decl) = program.types.iter().find(|d| d.span == self.classes[ci].span) else { return };
        let TypeDeclBody::Class(class) = &decl.body else { return };
        // field defaults
        self.frame = Frame::new(Ctx::FieldInit, Some(ci));
        for m in &class.members {
            let ClassMember::Var { decl: v, .. } = m else { continue };
            let Some(fi) = self.classes[ci].field_index(&v.name.name) else { continue };
            if let Some(init) = &v.init {
                let fty = self.classes[ci].fields[fi].ty.clone();
                let e = if fty.contains_any() {
                    let e = self.expr(init, None);
                    let refined = self.refine(&fty, &e.ty, init.span);
                    self.classes[ci].fields[fi].ty = refined.clone();
                    self.coerce(e, &refined, "var-decl")
                } else {
                    let e = self.expr(init, Some(&fty));
                    self.coerce(e, &fty, "var-decl")
                };
                self.rules.insert("var-decl");
                self.classes[ci].fields[fi].default = Some(e);
            } else {
                self.rules.insert("var-decl-novalue");
            }
        }
        self.classes[ci].init_frame = self.frame.locals.len();
        for m in &class.members {
            match m {
                ClassMember::Function(f) => {
                    let Some(fi) = self.classes[ci].functions.iter().position(|x| x.span == f.span) else { continue };
                    let info = self.classes[ci].functions[fi].clone();
                    let spans: Vec<Span> = f.params.iter().map(|p| p.name.span).collect();
                    self.enter(Ctx::Function, Some(ci), &info.params, &spans);
                    self.frame.ret = Some(info.ret.clone());
                    if let Some(body) = &f.body {
                        let b = self.function_body(body, &info.ret, &f.name.name);
                        let func = &mut self.classes[ci].functions[fi];
                        func.body = b;
                    }
                    self.classes[ci].functions[fi].frame = self.frame.names();
                }
                ClassMember::Do(d) => self.response_body(ci, d),
                _ => {}
            }
        }
        let fields = self.classes[ci].fields.clone();
        for f in fields {
            if f.ty.contains_any() {
                self.error(f.span, "assign-any", format!("type of field `{}` is still unresolved `any`", f.name));
            }
        }
    }

    fn response_body(&mut self, ci: usize, d: &crate::syntax::ast::DoDecl) {
        let Some(ri) = self.classes[ci].responses.iter().position(|r| r.span == d.span) else { return };
        let params = self.classes[ci].responses[ri].params.clone();
        match &d.trigger {
            DoTrigger::Every { period, .. } => {
                self.rules.insert("do-every");
                self.frame = Frame::new(Ctx::Condition, Some(ci));
                let e = self.expr(period, Some(&Type::Timespan));
                let e = self.coerce(e, &Type::Timespan, "do-every");
                let period_ms = match self.fold_value(&e) {
                    Some(Value::Timespan(ms)) if ms > Decimal::ZERO => ms,
                    Some(_) => {
                        self.error(period.span, "do-every", "period must be a positive timespan");
                        Decimal::ONE
                    }
                    None => {
                        if !e.ty.is_error() {
                            self.error(period.span, "do-every", "period must be a constant timespan");
                        }
                        Decimal::ONE
                    }
                };
                if !params.is_empty() {
                    self.error(d.name.span, "do-every", "periodic responses take no parameters");
                }
                self.classes[ci].responses[ri].trigger = Trigger::Periodic { period_ms };
            }
            DoTrigger::On { condition, .. } => {
                self.rules.insert("do-on");
                self.frame = Frame::new(Ctx::Condition, Some(ci));
                let e = self.expr(condition, Some(&Type::Bool));
                let e = self.coerce(e, &Type::Bool, "do-on");
                if !e.ty.is_error() && !self.reads_state(&e, ci) {
                    self.warning(condition.span, "do-on", format!("condition of `{}` reads no state variable", d.name.name));
                }
                if !params.is_empty() {
                    self.error(d.name.span, "do-on", "conditional responses take no parameters");
                }
                let frame = self.frame.locals.len();
                self.classes[ci].responses[ri].trigger = Trigger::Conditional { cond: e, frame };
            }
            DoTrigger::Receive { .. } => {
                self.rules.insert("do-recv");
                if d.name.name == "initialize" && !params.is_empty() {
                    self.error(d.name.span, "do-recv", "`initialize` takes no parameters");
                }
            }
        }
        let spans: Vec<Span> = d.params.iter().flatten().map(|p| p.name.span).collect();
        self.enter(Ctx::Response, Some(ci), &params, &spans);
        let body = self.block(&d.body);
        self.classes[ci].responses[ri].body = body;
        self.classes[ci].responses[ri].frame = self.frame.names();
    }

    fn reads_state(&self, e: &TExpr, ci: usize) -> bool {
        let mut found = false;
        visit_expr(e, &mut |x| match &x.kind {
            TExprKind::Prev(_) => found = true,
            TExprKind::Field(i) if self.classes[ci].fields[*i].state => found = true,
            TExprKind::Call { func: FnRef::Class(..), .. } => found = true,
            _ => {}
        });
        found
    }

    fn function_body(&mut self, body: &crate::syntax::ast::Block, ret: &Type, name: &str) -> TBlock {
        let b = self.block(body);
        self.rules.insert("func-decl");
        if *ret != Type::Void && !crate::types::coercible(&b.ty, ret, &self.reg) {
            self.error(
                body.span,
                "func-decl",
                format!(
                    "body of `{name}` has type {} ({}), which does not coerce to the declared {}",
                    self.show(&b.ty),
                    b.rule,
                    self.show(ret)
                ),
            );
        }
        b
    }

    fn function_bodies(&mut self) {
        let program = self.program;
        for f in &program.functions {
            if f.external {
                continue;
            }
            let Some(&fi) = self.function_index.get(&f.name.name) else { continue };
            if self.functions[fi].span != f.span {
                continue;
            }
            let info = self.functions[fi].clone();
            let spans: Vec<Span> = f.params.iter().map(|p| p.name.span).collect();
            self.enter(Ctx::Function, None, &info.params, &spans);
            self.frame.ret = Some(info.ret.clone());
            if let Some(body) = &f.body {
                let b = self.function_body(body, &info.ret, &f.name.name);
                self.functions[fi].body = b;
            }
            self.functions[fi].frame = self.frame.names();
        }
    }

    fn main_block(&mut self) {
        let program = self.program;
        let Some(main) = &program.main else { return };
        self.frame = Frame::new(Ctx::Main, None);
        // phase one: every top-level actor declaration is visible from the start
        let mut prealloc = Vec::new();
        for s in &main.body.stmts {
            let crate::syntax::ast::StmtKind::Var(v) = &s.kind else { continue };
            let Some(init) = &v.init else { continue };
            let crate::syntax::ast::ExprKind::Call { callee, .. } = &init.kind else { continue };
            let is_actor = matches!(
                self.reg.lookup(&callee.name),
                Some(TypeEntry::Def(id)) if matches!(self.reg.get(*id), TypeDef::Class { kind: RefKind::Actor | RefKind::Connection, .. })
            );
            if !is_actor {
                continue;
            }
            if self.frame.scopes[0].iter().any(|(n, _)| *n == v.name.name) {
                continue;
            }
            let ty = self.resolve_type(&v.ty);
            let slot = self.declare(&v.name.name, ty, None, v.name.span);
            self.frame.prealloc.insert(v.span.offset, slot);
            prealloc.push(slot);
        }
        let body = self.block_in_scope(&main.body);
        self.check_resolved(0);
        self.main = Some(MainInfo { body, frame: self.frame.names(), prealloc });
    }

    /// Adds a local to the innermost scope and returns its slot.
    pub fn declare(&mut self, name: &str, ty: Type, constant: Option<Value>, span: Span) -> Slot {
        let slot = self.frame.locals.len();
        self.frame.locals.push(LocalInfo { name: name.to_string(), ty, constant, span });
        self.frame.scopes.last_mut().unwrap().push((name.to_string(), slot));
        slot
    }

    pub fn lookup_local(&self, name: &str) -> Option<Slot> {
        self.frame
            .scopes
            .iter()
            .rev()
            .find_map(|s| s.iter().rev().find(|(n, _)| n == name).map(|(_, slot)| *slot))
    }

    /// Replaces `any` parts of a declared type by the corresponding parts of
    /// the assigned value's type.
    pub fn refine(&mut self, declared: &Type, actual: &Type, span: Span) -> Type {
        self.rules.insert("assign-any");
        let out = refine_type(declared, actual);
        if !crate::types::coercible(actual, &out, &self.reg) {
            self.error(
                span,
                "assign-any",
                format!("value of type {} does not fit {}", self.show(actual), self.show(declared)),
            );
        }
        out
    }
}

fn refine_type(declared: &Type, actual: &Type) -> Type {
    match (declared, actual) {
        (Type::Any, a) => a.clone(),
        (Type::Array(d, n), Type::Array(a, _)) => Type::Array(Box::new(refine_type(d, a)), *n),
        (Type::List(d), Type::List(a) | Type::Array(a, _) | Type::Set(a)) => Type::List(Box::new(refine_type(d, a))),
        (Type::Set(d), Type::Set(a) | Type::Array(a, _) | Type::List(a)) => Type::Set(Box::new(refine_type(d, a))),
        (Type::Array(d, n), Type::List(a) | Type::Set(a)) => Type::Array(Box::new(refine_type(d, a)), *n),
        (Type::Map(dk, dv), Type::Map(ak, av)) => {
            Type::Map(Box::new(refine_type(dk, ak)), Box::new(refine_type(dv, av)))
        }
        (Type::Tuple(ds), Type::Tuple(as_)) if ds.len() == as_.len() => {
            Type::Tuple(ds.iter().zip(as_).map(|(d, a)| refine_type(d, a)).collect())
        }
        (d, _) => d.clone(),
    }
}

pub(crate) fn empty_block() -> TBlock {
    TBlock { stmts: Vec::new(), ty: Type::Any, rule: "seq-any" }
}

/// Calls `f` on every expression node reachable from `e`, including those
/// inside nested `cases` blocks.
pub fn visit_expr(e: &TExpr, f: &mut dyn FnMut(&TExpr)) {
    f(e);
    let mut go = |x: &TExpr| visit_expr(x, f);
    match &e.kind {
        TExprKind::Member { object, .. } => go(object),
        TExprKind::Index { object, index, .. } => {
            go(object);
            go(index);
        }
        TExprKind::Call { args, .. } | TExprKind::External { args, .. } => args.iter().for_each(go),
        TExprKind::Unary { operand, .. } | TExprKind::Convert { operand, .. } => go(operand),
        TExprKind::Binary { lhs, rhs, .. } => {
            go(lhs);
            go(rhs);
        }
        TExprKind::Assign { value, .. } => go(value),
        TExprKind::Cond { cond, then, els } => {
            go(cond);
            go(then);
            go(els);
        }
        TExprKind::Collection { elems, .. } | TExprKind::TupleLit { elems, .. } => elems.iter().for_each(go),
        TExprKind::RecordLit { fields, .. } => fields.iter().for_each(go),
        TExprKind::MapLit { entries } => entries.iter().for_each(|(k, v)| {
            go(k);
            go(v);
        }),
        TExprKind::Instantiate { args, .. } => args.iter().flatten().for_each(go),
        TExprKind::Tell { receiver, args, with, .. } => {
            go(receiver);
            args.iter().for_each(&mut go);
            with.iter().for_each(|(_, v)| go(v));
        }
        TExprKind::Cases(c) => {
            go(&c.selector);
            for (v, b) in &c.arms {
                go(v);
                visit_block(b, &mut go);
            }
            if let Some(b) = &c.otherwise {
                visit_block(b, &mut go);
            }
        }
        _ => {}
    }
}

fn visit_block(b: &TBlock, f: &mut dyn FnMut(&TExpr)) {
    for s in &b.stmts {
        visit_stmt(s, f);
    }
}

/// Calls `f` on every expression inside a statement.
pub fn visit_stmt(s: &TStmt, f: &mut dyn FnMut(&TExpr)) {
    match &s.kind {
        TStmtKind::Let { init, .. } => visit_expr(init, f),
        TStmtKind::Expr(e) => visit_expr(e, f),
        TStmtKind::Return(e) => {
            if let Some(e) = e {
                visit_expr(e, f)
            }
        }
        TStmtKind::If { cond, then, els } => {
            visit_expr(cond, f);
            visit_block(then, f);
            if let Some(b) = els {
                visit_block(b, f);
            }
        }
        TStmtKind::While { cond, body } | TStmtKind::DoWhile { body, cond } => {
            visit_expr(cond, f);
            visit_block(body, f);
        }
        TStmtKind::Foreach { collection, body, .. } => {
            visit_expr(collection, f);
            visit_block(body, f);
        }
        TStmtKind::Break => {}
        TStmtKind::Cases(c) => {
            visit_expr(&c.selector, f);
            for (v, b) in &c.arms {
                visit_expr(v, f);
                visit_block(b, f);
            }
            if let Some(b) = &c.otherwise {
                visit_block(b, f);
            }
        }
    }
}

pub fn visit_body(b: &TBlock, f: &mut dyn FnMut(&TExpr)) {
    visit_block(b, f)
}
