//! Timed Rebeca generator.
//!
//! Supported fragment: actor and connection classes with scalar fields
//! (optionally `discretize`d), typed actor references (as known rebecs),
//! `do[every]` and receive responses, class functions, `tell` with `after`
//! or `deadline`, and arithmetic / conditional bodies. Everything else is
//! reported as an unsupported feature with its span.
//!
//! All time values are emitted as integer milliseconds, the unit of the
//! generated `after()` delays.

use super::{GenOptions, GenerationReport, Unsupported};
use crate::semantics::ir::*;
use crate::syntax::ast::{BinOp, ClassMember, DoTrigger, ExprKind, RefKind, TypeDeclBody};
use crate::syntax::token::Span;
use crate::types::{IntKind, Type};
use crate::value::Value;
use rust_decimal::Decimal;
use std::fmt::Write as _;

pub const DEFAULT_QUEUE: u64 = 2;
pub const DEFAULT_SCALE: i64 = 100_000;

/// Generated source plus the report of what was mapped.
#[derive(Debug, Clone)]
pub struct RebecaOutput {
    pub source: String,
    pub report: GenerationReport,
}

pub fn generate(model: &Model, opts: &GenOptions) -> Result<RebecaOutput, Vec<Unsupported>> {
    let mut g = Gen {
        model,
        scale: opts.scale,
        out: String::new(),
        errors: Vec::new(),
        report: GenerationReport::new("rebeca"),
    };
    g.program();
    if g.errors.is_empty() {
        Ok(RebecaOutput { source: g.out, report: g.report })
    } else {
        Err(g.errors)
    }
}

/// Where a name in a body resolves to.
#[derive(Clone, Copy, PartialEq)]
enum Scope {
    /// Message server: discretized fields live in same-named locals.
    Msgsrv,
    /// Method: discretized fields must not be touched.
    Method,
    Main,
}

struct Body<'c> {
    class: Option<&'c ClassInfo>,
    frame: &'c [String],
    scope: Scope,
}

struct Gen<'m> {
    model: &'m Model,
    scale: i64,
    out: String,
    errors: Vec<Unsupported>,
    report: GenerationReport,
}

fn discretized(f: &FieldInfo) -> bool {
    f.property("discretize").is_some()
}

fn is_reference(t: &Type) -> bool {
    matches!(t, Type::Named(_) | Type::ActorRef | Type::ConnectionRef | Type::ObjectRef)
}

fn double_text(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::BitOr => 3,
        BinOp::BitXor => 4,
        BinOp::BitAnd => 5,
        BinOp::Eq | BinOp::Ne => 6,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
        BinOp::Shl | BinOp::Shr => 8,
        BinOp::Add | BinOp::Sub => 9,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 10,
    }
}

const PREC_UNARY: u8 = 11;
const PREC_ATOM: u8 = 12;

impl<'m> Gen<'m> {
    fn unsupported(&mut self, span: Span, construct: &str, message: impl Into<String>) {
        self.errors.push(Unsupported {
            construct: construct.to_string(),
            span,
            message: message.into(),
        });
    }

    fn unit_ms(&self) -> Decimal {
        self.model.sim_time_unit_ms
    }

    fn type_name(&mut self, t: &Type, span: Span) -> String {
        match t {
            Type::Int(IntKind::I8 | IntKind::U8) => "byte".into(),
            Type::Int(IntKind::I16 | IntKind::U16) => "short".into(),
            Type::Int(_) => "int".into(),
            Type::Float => "float".into(),
            Type::Double => "double".into(),
            Type::Bool => "boolean".into(),
            Type::Timespan => "int".into(),
            Type::Named(id) if self.actor_class_of(*id).is_some() => self.model.classes[self.actor_class_of(*id).unwrap()].name.clone(),
            other => {
                let shown = self.model.registry.display(other);
                self.unsupported(span, "type", format!("type `{shown}` has no Rebeca counterpart"));
                "int".into()
            }
        }
    }

    fn actor_class_of(&self, id: crate::types::TypeId) -> Option<usize> {
        self.model
            .classes
            .iter()
            .position(|c| c.type_id == id && c.kind != RefKind::Object)
    }

    fn ms_text(&mut self, ms: Decimal, span: Span) -> String {
        if ms.fract().is_zero() {
            ms.normalize().to_string()
        } else {
            self.unsupported(span, "timespan", format!("{}ms is not a whole number of milliseconds", ms.normalize()));
            "0".into()
        }
    }

    fn value_text(&mut self, v: &Value, span: Span) -> String {
        match v {
            Value::Int(n) => n.to_string(),
            Value::Float(x) => format!("{}f", double_text(*x as f64)),
            Value::Double(x) => double_text(*x),
            Value::Bool(b) => b.to_string(),
            Value::Timespan(ms) => self.ms_text(*ms, span),
            other => {
                let shown = other.display(&self.model.registry);
                self.unsupported(span, "literal", format!("value `{shown}` has no Rebeca counterpart"));
                "0".into()
            }
        }
    }

    // ----- program -----

    fn program(&mut self) {
        let model = self.model;
        self.out.push_str("// Timed Rebeca model generated from M\n");
        let _ = writeln!(
            self.out,
            "// time values are integer milliseconds; SIM_TIME_UNIT is {}ms",
            self.unit_ms().normalize()
        );
        for f in &model.functions {
            self.report.skipped.push(format!("function {} (global functions are not mapped)", f.name));
        }
        self.env();
        for ci in 0..model.classes.len() {
            let c = &model.classes[ci];
            match c.kind {
                RefKind::Object => {
                    self.unsupported(c.span, "class[object]", format!("passive class `{}`", c.name));
                }
                _ => self.class(c),
            }
        }
        self.main();
        self.property_block();
    }

    fn env(&mut self) {
        let model = self.model;
        self.out.push('\n');
        for c in &model.consts {
            let ty = match &c.ty {
                Type::Timespan => "int".to_string(),
                Type::Str | Type::Char => {
                    self.unsupported(c.span, "const", format!("constant `{}` of text type", c.name));
                    continue;
                }
                t => self.type_name(t, c.span),
            };
            let v = self.value_text(&c.value, c.span);
            let _ = writeln!(self.out, "env {ty} {} = {v};", c.name);
            self.report.mapped.push(format!("const {} -> env {ty} {}", c.name, c.name));
        }
    }

    fn queue_size(&mut self, c: &ClassInfo) -> u64 {
        for a in &c.annotations {
            if a.name.name != "rebeca" {
                continue;
            }
            if let Some(p) = a.property("queue") {
                match p.value.as_ref().map(|e| &e.kind) {
                    Some(ExprKind::Int { value }) if *value > 0 => return *value,
                    _ => self.unsupported(a.span, "@rebeca", "queue size must be a positive integer literal"),
                }
            }
        }
        DEFAULT_QUEUE
    }

    fn period_text(&mut self, c: &ClassInfo, r: &ResponseInfo, period_ms: Decimal) -> String {
        for t in &self.model.program.types {
            let TypeDeclBody::Class(decl) = &t.body else { continue };
            if t.name.name != c.name {
                continue;
            }
            for m in &decl.members {
                if let ClassMember::Do(d) = m {
                    if d.span == r.span {
                        if let DoTrigger::Every { period, .. } = &d.trigger {
                            if let ExprKind::Ident { name } = &period.kind {
                                if self.model.constant(name).is_some_and(|k| k.ty == Type::Timespan) {
                                    return name.clone();
                                }
                            }
                        }
                    }
                }
            }
        }
        self.ms_text(period_ms, r.span)
    }

    fn class(&mut self, c: &'m ClassInfo) {
        let queue = self.queue_size(c);
        let _ = writeln!(self.out, "\nreactiveclass {}({queue}) {{", c.name);
        self.report.mapped.push(format!("class {} -> reactiveclass {}({queue})", c.name, c.name));

        let known: Vec<&FieldInfo> = c.fields.iter().filter(|f| is_reference(&f.ty)).collect();
        if !known.is_empty() {
            self.out.push_str("    knownrebecs {\n");
            for f in &known {
                let ty = self.type_name(&f.ty, f.span);
                let _ = writeln!(self.out, "        {ty} {};", f.name);
                self.report.mapped.push(format!("field {}.{} -> known rebec", c.name, f.name));
            }
            self.out.push_str("    }\n\n");
        }

        let any_disc = c.fields.iter().any(discretized);
        self.out.push_str("    statevars {\n");
        let mut snapshots = Vec::new();
        for f in c.fields.iter().filter(|f| !is_reference(&f.ty)) {
            if discretized(f) {
                if !matches!(f.ty, Type::Double | Type::Float) {
                    self.unsupported(f.span, "discretize", format!("`{}` is not a floating-point field", f.name));
                }
                if let Some(Some(v)) = f.property("discretize").map(|p| &p.value) {
                    if *v != Value::Str("real2int".into()) {
                        self.unsupported(f.span, "discretize", format!("unknown discretization scheme {}", v.display(&self.model.registry)));
                    }
                }
                let _ = writeln!(self.out, "        int {}_;", f.name);
                self.report.mapped.push(format!("field {}.{} -> statevar int {}_ (discretized)", c.name, f.name, f.name));
            } else {
                let ty = self.type_name(&f.ty, f.span);
                let _ = writeln!(self.out, "        {ty} {};", f.name);
                self.report.mapped.push(format!("field {}.{} -> statevar {ty} {}", c.name, f.name, f.name));
            }
            if let Some(p) = f.property("snapshot") {
                match &p.value {
                    Some(Value::Str(name)) if discretized(f) => snapshots.push((name.clone(), f.name.clone())),
                    _ => self.unsupported(f.span, "snapshot", "snapshot needs a name and a discretized field"),
                }
            }
        }
        for (snap, _) in &snapshots {
            let _ = writeln!(self.out, "        int {snap}_; //to facilitate LTL checks");
            self.report.mapped.push(format!("snapshot {snap} -> statevar int {snap}_"));
        }
        self.out.push_str("    }\n");

        // constructor
        let params: Vec<&FieldInfo> = c.fields.iter().filter(|f| !is_reference(&f.ty)).collect();
        let mut sig = Vec::new();
        for f in &params {
            let ty = self.type_name(&f.ty, f.span);
            sig.push(format!("{ty} {}", f.name));
        }
        let _ = writeln!(self.out, "\n    {}({}) {{", c.name, sig.join(", "));
        for f in &params {
            if discretized(f) {
                let _ = writeln!(self.out, "        {}_ = discretize({});", f.name, f.name);
            } else {
                let _ = writeln!(self.out, "        self.{} = {};", f.name, f.name);
            }
        }
        for (snap, field) in &snapshots {
            let _ = writeln!(self.out, "        {snap}_ = {field}_;");
        }
        if let Some(r) = c.response("initialize") {
            if matches!(r.trigger, Trigger::External) {
                self.out.push_str("        self.initialize();\n");
            }
        }
        let mut periods = Vec::new();
        for r in &c.responses {
            if let Trigger::Periodic { period_ms } = r.trigger {
                let p = self.period_text(c, r, period_ms);
                let _ = writeln!(self.out, "        self.{}() after({p});", r.name);
                periods.push((r.name.clone(), p));
            }
        }
        self.out.push_str("    }\n");

        for r in &c.responses {
            self.response(c, r, &periods);
        }
        for f in &c.functions {
            self.method(c, f);
        }
        if any_disc {
            let scale = self.scale;
            let _ = write!(
                self.out,
                "\n    int discretize(double x){{\n      return (int)(x*{scale}.0);\n    }}\n\n    double undiscretize(int x){{\n      return (double)(x)/{scale}.0;\n    }}\n"
            );
            self.report.mapped.push(format!("discretize helpers for {} (scale {scale})", c.name));
        }
        self.out.push_str("}\n");
    }

    fn response(&mut self, c: &'m ClassInfo, r: &'m ResponseInfo, periods: &[(String, String)]) {
        let kind = match &r.trigger {
            Trigger::Conditional { .. } => {
                self.unsupported(r.span, "do[on]", format!("conditional response `{}`", r.name));
                return;
            }
            Trigger::Periodic { .. } => "periodic",
            Trigger::External => "receive",
        };
        let mut sig = Vec::new();
        for (n, t) in &r.params {
            let ty = self.type_name(t, r.span);
            sig.push(format!("{ty} {n}"));
        }
        let _ = writeln!(self.out, "\n    msgsrv {}({}) {{", r.name, sig.join(", "));
        let disc: Vec<&FieldInfo> = c.fields.iter().filter(|f| discretized(f)).collect();
        for f in &disc {
            let ty = self.type_name(&f.ty, f.span);
            let _ = writeln!(self.out, "        {ty} {} = undiscretize(self.{}_);", f.name, f.name);
        }
        if !disc.is_empty() {
            self.out.push('\n');
        }
        for name in r.frame.iter().skip(r.params.len()) {
            if disc.iter().any(|f| f.name == *name) {
                self.unsupported(r.span, "local", format!("local `{name}` hides discretized field `{name}`"));
            }
        }
        let body = Body { class: Some(c), frame: &r.frame, scope: Scope::Msgsrv };
        self.block(&body, &r.body, 2);
        if !disc.is_empty() {
            self.out.push('\n');
        }
        for f in &disc {
            let _ = writeln!(self.out, "        self.{}_ = discretize({});", f.name, f.name);
        }
        if let Some((_, p)) = periods.iter().find(|(n, _)| *n == r.name) {
            let _ = writeln!(self.out, "\n        self.{}() after({p});", r.name);
        }
        self.out.push_str("    }\n");
        self.report.mapped.push(format!("response {}.{} -> msgsrv {} ({kind})", c.name, r.name, r.name));
    }

    fn method(&mut self, c: &'m ClassInfo, f: &'m FunctionInfo) {
        let ret = match f.ret {
            Type::Void => "void".to_string(),
            ref t => self.type_name(t, f.span),
        };
        let mut sig = Vec::new();
        for (n, t) in &f.params {
            let ty = self.type_name(t, f.span);
            sig.push(format!("{ty} {n}"));
        }
        let _ = writeln!(self.out, "\n    {ret} {}({}){{", f.name, sig.join(", "));
        let body = Body { class: Some(c), frame: &f.frame, scope: Scope::Method };
        self.block(&body, &f.body, 2);
        self.out.push_str("    }\n");
        self.report.mapped.push(format!("function {}.{} -> method {}", c.name, f.name, f.name));
    }

    fn main(&mut self) {
        let model = self.model;
        let Some(main) = &model.main else { return };
        self.out.push_str("\nmain {\n");
        let body = Body { class: None, frame: &main.frame, scope: Scope::Main };
        for s in &main.body.stmts {
            let TStmtKind::Let { slot, init } = &s.kind else {
                self.unsupported(s.span, "main", "only actor instantiations are mapped in main");
                continue;
            };
            let mut init = init;
            while let TExprKind::Convert { operand, .. } = &init.kind {
                init = operand;
            }
            let TExprKind::Instantiate { class, args, .. } = &init.kind else {
                self.unsupported(s.span, "main", "only actor instantiations are mapped in main");
                continue;
            };
            let c = &model.classes[*class];
            if c.kind == RefKind::Object {
                continue;
            }
            let mut known = Vec::new();
            let mut ctor = Vec::new();
            for (fi, f) in c.fields.iter().enumerate() {
                let arg = args.get(fi).and_then(|a| a.as_ref()).or(f.default.as_ref());
                let text = match arg {
                    Some(e) => self.expr(&body, e, 0),
                    None if is_reference(&f.ty) => {
                        self.unsupported(s.span, "main", format!("reference `{}` is not bound", f.name));
                        String::new()
                    }
                    None => self.zero(&f.ty, f.span),
                };
                if is_reference(&f.ty) {
                    known.push(text);
                } else {
                    ctor.push(text);
                }
            }
            let name = &main.frame[*slot];
            let _ = writeln!(self.out, "    {} {name}({}):({});", c.name, known.join(", "), ctor.join(", "));
            self.report.mapped.push(format!("main {name} -> {} {name}", c.name));
        }
        self.out.push_str("}\n");
    }

    fn zero(&mut self, t: &Type, span: Span) -> String {
        match t {
            Type::Double => "0.0".into(),
            Type::Float => "0.0f".into(),
            Type::Bool => "false".into(),
            Type::Int(_) | Type::Timespan => "0".into(),
            other => {
                let shown = self.model.registry.display(other);
                self.unsupported(span, "type", format!("no default value for `{shown}`"));
                "0".into()
            }
        }
    }

    fn property_block(&mut self) {
        let model = self.model;
        for a in &model.annotations {
            if a.name.name == "property" {
                match &a.body {
                    Some(text) => {
                        let _ = writeln!(self.out, "\n{}", text.trim());
                        self.report.mapped.push("@property -> property block".into());
                    }
                    None => self.unsupported(a.span, "@property", "annotation has no {= =} body"),
                }
            } else {
                self.report.skipped.push(format!("annotation @{}", a.name.name));
            }
        }
    }

    // ----- statements -----

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("    ");
        }
    }

    fn block(&mut self, b: &Body, block: &TBlock, depth: usize) {
        for s in &block.stmts {
            self.stmt(b, s, depth);
        }
    }

    fn stmt(&mut self, b: &Body, s: &TStmt, depth: usize) {
        match &s.kind {
            TStmtKind::Let { slot, init } => {
                let ty = self.type_name(&init.ty, s.span);
                let e = self.expr(b, init, 0);
                self.indent(depth);
                let _ = writeln!(self.out, "{ty} {} = {e};", b.frame[*slot]);
            }
            TStmtKind::Expr(e) => {
                let text = self.expr(b, e, 0);
                self.indent(depth);
                let _ = writeln!(self.out, "{text};");
            }
            TStmtKind::Return(e) => {
                if b.scope == Scope::Msgsrv {
                    self.unsupported(s.span, "return", "return inside a response skips the state write-back");
                }
                let text = e.as_ref().map(|e| self.expr(b, e, 0));
                self.indent(depth);
                match text {
                    Some(t) => {
                        let _ = writeln!(self.out, "return {t};");
                    }
                    None => self.out.push_str("return;\n"),
                }
            }
            TStmtKind::If { cond, then, els } => {
                self.indent(depth);
                self.if_chain(b, cond, then, els.as_ref(), depth);
            }
            TStmtKind::While { cond, body } => {
                let c = self.expr(b, cond, 0);
                self.indent(depth);
                let _ = writeln!(self.out, "while ({c}) {{");
                self.block(b, body, depth + 1);
                self.indent(depth);
                self.out.push_str("}\n");
            }
            TStmtKind::Break => {
                self.indent(depth);
                self.out.push_str("break;\n");
            }
            TStmtKind::DoWhile { .. } => self.unsupported(s.span, "do-while", "do-while loop"),
            TStmtKind::Foreach { .. } => self.unsupported(s.span, "foreach", "iteration over a collection"),
            TStmtKind::Cases(_) => self.unsupported(s.span, "cases", "cases statement"),
        }
    }

    fn if_chain(&mut self, b: &Body, cond: &TExpr, then: &TBlock, els: Option<&TBlock>, depth: usize) {
        let c = self.expr(b, cond, 0);
        let _ = writeln!(self.out, "if ({c}) {{");
        self.block(b, then, depth + 1);
        self.indent(depth);
        match els {
            None => self.out.push_str("}\n"),
            Some(e) => {
                if let [TStmt { kind: TStmtKind::If { cond, then, els }, .. }] = e.stmts.as_slice() {
                    self.out.push_str("} else ");
                    self.if_chain(b, cond, then, els.as_ref(), depth);
                } else {
                    self.out.push_str("} else {\n");
                    self.block(b, e, depth + 1);
                    self.indent(depth);
                    self.out.push_str("}\n");
                }
            }
        }
    }

    // ----- expressions -----

    fn field_text(&mut self, b: &Body, index: usize, span: Span, write: bool) -> String {
        let Some(c) = b.class else {
            self.unsupported(span, "field", "field access outside a class");
            return String::new();
        };
        let f = &c.fields[index];
        if discretized(f) {
            match b.scope {
                Scope::Msgsrv => f.name.clone(),
                _ => {
                    let what = if write { "write to" } else { "read of" };
                    self.unsupported(span, "discretize", format!("{what} discretized field `{}` outside a response", f.name));
                    f.name.clone()
                }
            }
        } else if is_reference(&f.ty) {
            if write {
                self.unsupported(span, "field", format!("assignment to known rebec `{}`", f.name));
            }
            f.name.clone()
        } else {
            format!("self.{}", f.name)
        }
    }

    fn lvalue(&mut self, b: &Body, lv: &LValue, span: Span) -> String {
        match lv {
            LValue::Local(slot) => b.frame[*slot].clone(),
            LValue::Field(i) => self.field_text(b, *i, span, true),
            _ => {
                self.unsupported(span, "assignment", "assignment into a composite value");
                String::new()
            }
        }
    }

    /// Renders `e`; wraps it in parentheses when its precedence is below `min`.
    fn expr(&mut self, b: &Body, e: &TExpr, min: u8) -> String {
        let (text, p) = self.expr_prec(b, e);
        if p < min {
            format!("({text})")
        } else {
            text
        }
    }

    fn expr_prec(&mut self, b: &Body, e: &TExpr) -> (String, u8) {
        match &e.kind {
            TExprKind::Const(v) => {
                if let Some(name) = self.model.const_refs.get(&e.span) {
                    return (name.clone(), PREC_ATOM);
                }
                if let Some(original) = self.model.folded_casts.get(&e.span) {
                    return self.expr_prec(b, original);
                }
                let text = self.value_text(v, e.span);
                let p = if text.starts_with('-') { PREC_UNARY } else { PREC_ATOM };
                (text, p)
            }
            TExprKind::Local(slot) => (b.frame[*slot].clone(), PREC_ATOM),
            TExprKind::Field(i) => (self.field_text(b, *i, e.span, false), PREC_ATOM),
            TExprKind::SelfRef => ("self".into(), PREC_ATOM),
            TExprKind::Message(key) if key == "sender" => ("sender".into(), PREC_ATOM),
            TExprKind::Call { func: FnRef::Class(_, fi), args } => {
                let Some(c) = b.class else { return (String::new(), PREC_ATOM) };
                let name = c.functions[*fi].name.clone();
                let args: Vec<String> = args.iter().map(|a| self.expr(b, a, 0)).collect();
                (format!("{name}({})", args.join(", ")), PREC_ATOM)
            }
            TExprKind::Unary { op, operand } => {
                let sym = match op {
                    UnaryOp::Neg => "-",
                    UnaryOp::Not => "!",
                    UnaryOp::BitNot => "~",
                };
                (format!("{sym}{}", self.expr(b, operand, PREC_UNARY)), PREC_UNARY)
            }
            TExprKind::IncDec { target, delta, post } => {
                let t = self.lvalue(b, target, e.span);
                let op = if *delta > 0 { "++" } else { "--" };
                let text = if *post { format!("{t}{op}") } else { format!("{op}{t}") };
                (text, PREC_UNARY)
            }
            TExprKind::Binary { op, lhs, rhs } => {
                if let Some(t) = self.time_ratio(b, *op, lhs, rhs) {
                    return (t, prec(BinOp::Div));
                }
                let p = prec(*op);
                let l = self.expr(b, lhs, p);
                let r = self.expr(b, rhs, p + 1);
                (format!("{l} {} {r}", op.symbol()), p)
            }
            TExprKind::Assign { target, value } => {
                let t = self.lvalue(b, target, e.span);
                let v = self.expr(b, value, 0);
                (format!("{t} = {v}"), 0)
            }
            TExprKind::Cond { cond, then, els } => {
                let c = self.expr(b, cond, 1);
                let t = self.expr(b, then, 1);
                let f = self.expr(b, els, 1);
                (format!("{c} ? {t} : {f}"), 0)
            }
            TExprKind::Convert { operand, to } => self.convert(b, operand, to, e.span),
            TExprKind::Tell { receiver, event, args, with } => (self.tell(b, receiver, event, args, with, e.span), 0),
            TExprKind::Cancel(_) => {
                self.unsupported(e.span, "cancel", "Timed Rebeca has no message cancellation");
                (String::new(), PREC_ATOM)
            }
            TExprKind::External { name, .. } => {
                self.unsupported(e.span, "external", format!("external function `{name}`"));
                (String::new(), PREC_ATOM)
            }
            TExprKind::Call { func: FnRef::Global(fi), .. } => {
                let name = self.model.functions[*fi].name.clone();
                self.unsupported(e.span, "function", format!("global function `{name}`"));
                (String::new(), PREC_ATOM)
            }
            other => {
                let what = match other {
                    TExprKind::Message(_) => "message attribute",
                    TExprKind::Member { .. } => "member access",
                    TExprKind::Index { .. } => "indexing",
                    TExprKind::Prev(_) => "prev()",
                    TExprKind::Now => "now()",
                    TExprKind::Collection { .. } | TExprKind::MapLit { .. } => "collections",
                    TExprKind::TupleLit { .. } | TExprKind::RecordLit { .. } => "tuples and records",
                    TExprKind::Instantiate { .. } => "dynamic instantiation",
                    TExprKind::Cases(_) => "cases expression",
                    _ => "expression",
                };
                self.unsupported(e.span, what, format!("{what} is outside the Rebeca fragment"));
                (String::new(), PREC_ATOM)
            }
        }
    }

    /// `(a as double) / (b as double)` with timespans `a` and `b` is unit
    /// free, so both sides are emitted in milliseconds.
    fn time_ratio(&mut self, b: &Body, op: BinOp, lhs: &TExpr, rhs: &TExpr) -> Option<String> {
        if op != BinOp::Div {
            return None;
        }
        let inner = |e: &'_ TExpr| -> Option<(TExpr, Type)> {
            let e = self.model.folded_casts.get(&e.span).unwrap_or(e);
            match &e.kind {
                TExprKind::Convert { operand, to } if operand.ty == Type::Timespan && to.is_numeric() => {
                    Some(((**operand).clone(), to.clone()))
                }
                _ => None,
            }
        };
        let (a, ta) = inner(lhs)?;
        let (c, tc) = inner(rhs)?;
        let ta = self.type_name(&ta, lhs.span);
        let tc = self.type_name(&tc, rhs.span);
        let l = self.expr(b, &a, 0);
        let r = self.expr(b, &c, PREC_ATOM);
        Some(format!("({ta})({l})/({tc}){r}"))
    }

    fn unit_text(&self) -> String {
        if self.model.constant("SIM_TIME_UNIT").is_some() {
            "SIM_TIME_UNIT".into()
        } else {
            self.unit_ms().normalize().to_string()
        }
    }

    fn convert(&mut self, b: &Body, operand: &TExpr, to: &Type, span: Span) -> (String, u8) {
        let from = &operand.ty;
        let target = self.type_name(to, span);
        match (from, to) {
            (Type::Timespan, t) if t.is_numeric() => {
                // milliseconds to SIM_TIME_UNIT units
                let inner = self.expr(b, operand, 0);
                let unit = self.unit_text();
                let ratio = format!("(double)({inner})/(double){unit}");
                if *t == Type::Double {
                    (ratio, prec(BinOp::Div))
                } else {
                    (format!("({target})({ratio})"), PREC_UNARY)
                }
            }
            (f, Type::Timespan) if f.is_numeric() => {
                let inner = self.expr(b, operand, prec(BinOp::Mul));
                let unit = self.unit_text();
                (format!("(int)({inner}*{unit})"), PREC_UNARY)
            }
            (f, t) if f == t => self.expr_prec(b, operand),
            (f, t) if (f.is_numeric() || *f == Type::Char) && t.is_numeric() => {
                let inner = self.expr(b, operand, 0);
                (format!("({target})({inner})"), PREC_UNARY)
            }
            (Type::Named(_) | Type::ActorRef | Type::ConnectionRef, _) => self.expr_prec(b, operand),
            _ => {
                let (f, t) = (self.model.registry.display(from), self.model.registry.display(to));
                self.unsupported(span, "conversion", format!("conversion from {f} to {t}"));
                (String::new(), PREC_ATOM)
            }
        }
    }

    fn tell(&mut self, b: &Body, receiver: &TExpr, event: &str, args: &[TExpr], with: &[(String, TExpr)], span: Span) -> String {
        let recv = self.expr(b, receiver, PREC_ATOM);
        let target_class = match &receiver.ty {
            Type::Named(id) => self.actor_class_of(*id),
            _ => None,
        };
        match target_class {
            Some(ci) => {
                if let Some(r) = self.model.classes[ci].response(event) {
                    if !matches!(r.trigger, Trigger::External) {
                        self.unsupported(span, "tell", format!("`{event}` is not a receive response"));
                    }
                }
            }
            None => self.unsupported(span, "tell", "receiver of unknown class"),
        }
        let args: Vec<String> = args.iter().map(|a| self.expr(b, a, 0)).collect();
        let mut text = format!("{recv}.{event}({})", args.join(", "));
        for (k, v) in with {
            match k.as_str() {
                "after" | "deadline" => {
                    let v = self.expr(b, v, 0);
                    let _ = write!(text, " {k}({v})");
                }
                other => self.unsupported(v.span, "with", format!("message attribute `{other}`")),
            }
        }
        text
    }
}
