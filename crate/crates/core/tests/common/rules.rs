//! Typing-rule probes: one accepting program per rule and, where the rule
//! can reject, one rejecting program.

use mlang::syntax::LoadOptions;

pub struct Probe {
    pub name: &'static str,
    pub rule: &'static str,
    pub pass: &'static str,
    pub fail: Option<&'static str>,
}

pub const PROBES: &[Probe] = &[
    // ----- coercion and conversion -----
    Probe { name: "generic_coercion", rule: "generic-coercion",
        pass: "main { var d:double = 1; var i:int64 = 2 as int8; }",
        fail: None },
    Probe { name: "explicit_conversion", rule: "explicit-conversion",
        pass: "main { var d:double = 2.7; var i:int = d as int; var s:int = 3 as int; }",
        fail: Some("main { var d:double = 1.5; var i:int = d; }") },
    Probe { name: "explicit_conversion_impossible", rule: "explicit-conversion",
        pass: "main { var i:int = 1 as int; }",
        fail: Some("main { var i:int = \"x\" as int; }") },
    Probe { name: "coerce_rec2tup", rule: "generic-coercion",
        pass: "def P record{x:int; y:int;}; def Q tuple{int,int}; main { var p:P = P(x:1, y:2); var q:Q = p; }",
        fail: None },
    Probe { name: "conv_numeric", rule: "conv-numeric",
        pass: "main { var d:double = 2.5; var f:float = d as float; var b:int8 = 100.7 as int8; }",
        fail: None },
    Probe { name: "conv_int2enum", rule: "conv-int2enum",
        pass: "def modes enum{OFF=0,ON}; main { var m:modes = 1 as modes; }",
        fail: Some("def modes enum{OFF=0,ON}; main { var m:modes = 5 as modes; }") },
    Probe { name: "conv_enum2int", rule: "conv-enum2int",
        pass: "def modes enum{OFF=0,ON}; main { var m:modes = modes.ON; var i:int = m as int; }",
        fail: None },
    Probe { name: "alias", rule: "alias",
        pass: "def Meters int32; main { var m:Meters = 3; var i:int32 = m; }",
        fail: Some("def Meters nosuch; main { var m:Meters = 3; }") },
    Probe { name: "context_diff", rule: "context-diff",
        pass: "def P record{x:int;}; main { var p:P = P(x:1); var b:bool = p == p; }",
        fail: Some("def P record{x:int;}; def R record{x:int;}; main { var p:P = P(x:1); var r:R = R(x:1); var b:bool = p == r; }") },

    // ----- literals -----
    Probe { name: "literal", rule: "literal",
        pass: "main { var c:char = 'a'; var s:string = c; var t:timespan = 1.5s; var d:double = 1e3; }",
        fail: None },
    Probe { name: "coerce_coll", rule: "coerce-coll",
        pass: "main { var a:array{double} = array(1.1, 2, 3); var l:list{int} = list(1, 2); }",
        fail: Some("main { var a:array{int} = array(1, true); }") },
    Probe { name: "tupleval_inline", rule: "tupleval-inline",
        pass: "main { var t:any = tuple(1, true); var b:bool = t[1]; }",
        fail: None },
    Probe { name: "tupleval_def", rule: "tupleval-def",
        pass: "def Q tuple{int,double}; main { var q:Q = Q(1, 2.5); }",
        fail: Some("def Q tuple{int,double}; main { var q:Q = Q(1, \"x\"); }") },
    Probe { name: "recordval", rule: "recordval",
        pass: "def P record{x:int; y:int;}; main { var p:P = P(x:1, y:2); }",
        fail: Some("def P record{x:int; y:int;}; main { var p:P = P(x:1, y:\"s\"); }") },
    Probe { name: "classval", rule: "classval",
        pass: "def A class[actor] { var[state] x:int = 0; }; main { var a:actor = A(x:3); }",
        fail: Some("def A class[actor] { var[state] x:int = 0; }; main { var a:actor = A(x:\"s\"); }") },

    // ----- expressions -----
    Probe { name: "assign", rule: "assign",
        pass: "main { var a:int; a = 4; }",
        fail: Some("main { var a:int = 3; a = \"s\"; }") },
    Probe { name: "assign_any", rule: "assign-any",
        pass: "main { var a:any = 3; var b:int = a; }",
        fail: Some("main { var a:any; }") },
    Probe { name: "assign_ext", rule: "assign-ext",
        pass: "main { var a:int = 3; a += 2; a *= 4; }",
        fail: None },
    Probe { name: "ifexpr_true", rule: "ifexpr-true",
        pass: "main { var x:int = true ? 1 : 2; }",
        fail: None },
    Probe { name: "ifexpr_false", rule: "ifexpr-false",
        pass: "main { var y:string = false ? 1 : \"a\"; }",
        fail: None },
    Probe { name: "ifexpr_undecided", rule: "ifexpr-undecided",
        pass: "main { var c:bool = false; var z:double = c ? 1 : 2.5; }",
        fail: Some("main { var c:bool = false; var z:int = c ? 1 : \"s\"; }") },
    Probe { name: "member", rule: "member",
        pass: "def P record{x:int; y:int;}; main { var p:P = P(x:1, y:2); var z:int = p.x; }",
        fail: Some("def P record{x:int; y:int;}; main { var p:P = P(x:1, y:2); var z:int = p.w; }") },
    Probe { name: "member_enum", rule: "member-enum",
        pass: "def modes enum{OFF=0,ON}; main { var k:modes = modes.ON; }",
        fail: Some("def modes enum{OFF=0,ON}; main { var k:modes = modes.DIM; }") },
    Probe { name: "index_int", rule: "index-int",
        pass: "main { var a:array{int} = array(1,2,3); var x:int = a[0]; }",
        fail: Some("main { var a:array{int} = array(1,2); var x:int = a[\"k\"]; }") },
    Probe { name: "index_tuple", rule: "index-tuple",
        pass: "def Q tuple{int,bool}; main { var q:Q = Q(1, true); var b:bool = q[1]; }",
        fail: Some("main { var t:any = tuple(1, true); var b:bool = t[2]; }") },
    Probe { name: "index_key", rule: "index-key",
        pass: "main { var m:map{string,int} = {\"a\":1}; var x:int = m[\"a\"]; }",
        fail: Some("main { var m:map{string,int} = {\"a\":1}; var x:int = m[1]; }") },
    Probe { name: "call_ref", rule: "call-ref",
        pass: "function f(x:int):int { return x + 1; } main { var y:int = f(2); }",
        fail: Some("function f(x:int):int { return x + 1; } main { var y:int = f(\"s\"); }") },
    Probe { name: "binary_arith1", rule: "binary-arith1",
        pass: "main { var a:int = 1 + 2; }",
        fail: Some("main { var a:int = 1 + true; }") },
    Probe { name: "binary_arith2", rule: "binary-arith2",
        pass: "main { var a:double = 1.5; var b:int = 2; var c:double = a + b; }",
        fail: None },
    Probe { name: "binary_div", rule: "binary-div",
        pass: "main { var a:double = 1 / 2; }",
        fail: Some("main { var a:double = 1 / \"x\"; }") },
    Probe { name: "binary_mod", rule: "binary-mod",
        pass: "main { var a:int = 7 % 2; }",
        fail: Some("main { var a:double = 7.0 % 2; }") },
    Probe { name: "unary_arith", rule: "unary-arith",
        pass: "main { var b:int = 2; var a:int = -b; }",
        fail: Some("main { var a:bool = -true; }") },
    Probe { name: "binary_logic", rule: "binary-logic",
        pass: "main { var a:bool = true && false; }",
        fail: Some("main { var a:bool = 1 && false; }") },
    Probe { name: "unary_logic", rule: "unary-logic",
        pass: "main { var a:bool = !false; }",
        fail: Some("main { var a:bool = !1; }") },
    Probe { name: "bitwise_binary", rule: "bitwise-binary",
        pass: "main { var a:int = 6 & 3; }",
        fail: Some("main { var a:int = 6.0 | 3; }") },
    Probe { name: "bitwise_unary", rule: "bitwise-unary",
        pass: "main { var a:int = ~6; }",
        fail: Some("main { var a:int = ~6.0; }") },
    Probe { name: "shift", rule: "shift",
        pass: "main { var a:int = 1 << (2 as uint8); }",
        fail: Some("main { var a:int = 1 << -2; }") },
    Probe { name: "cmp_eq", rule: "cmp-eq",
        pass: "main { var a:bool = 1 == 2; }",
        fail: Some("main { var a:bool = 1 == \"x\"; }") },
    Probe { name: "cmp_rel", rule: "cmp-rel",
        pass: "main { var a:bool = 1 < 2.5; }",
        fail: Some("main { var a:bool = true < false; }") },

    // ----- statements -----
    Probe { name: "var_decl", rule: "var-decl",
        pass: "main { var a:int = 1; }",
        fail: Some("main { var a:int = 3; var a:int = 4; }") },
    Probe { name: "var_decl_novalue", rule: "var-decl-novalue",
        pass: "main { var a:int; }",
        fail: None },
    Probe { name: "seq_any", rule: "seq-any",
        pass: "main { var a:int = 1; a = 2; }",
        fail: None },
    Probe { name: "seq_nonany", rule: "seq-nonany",
        pass: "function f():int { var a:int = 1; if (true) { return a; } }",
        fail: None },
    Probe { name: "return_value", rule: "return",
        pass: "function f(x:int):int { return x; }",
        fail: Some("function f(x:int):int { return \"s\"; }") },
    Probe { name: "return_any", rule: "return-any",
        pass: "def A class[actor] { do go { return; } };",
        fail: Some("function f():int { return; }") },
    Probe { name: "break_any", rule: "break-any",
        pass: "main { while (true) { break; } }",
        fail: None },
    Probe { name: "func_decl", rule: "func-decl",
        pass: "function f(x:int):int { return x; }",
        fail: Some("function g(x:int, x:int):int { return x; }") },
    Probe { name: "do_every", rule: "do-every",
        pass: "def A class[actor] { do[every(1s)] t { } };",
        fail: Some("def A class[actor] { do[every(0s)] t { } };") },
    Probe { name: "do_on", rule: "do-on",
        pass: "def A class[actor] { var[state] x:int = 0; do[on(x > 3)] big { } };",
        fail: Some("def A class[actor] { var[state] x:int = 0; do[on(1)] t { } };") },
    Probe { name: "do_recv", rule: "do-recv",
        pass: "def A class[actor] { do go(n:int) { } };",
        fail: Some("def A class[actor] { do go(n:int, n:int) { } };") },
    Probe { name: "if_true", rule: "if-true",
        pass: "main { if (true) { var x:int = 1; } }",
        fail: None },
    Probe { name: "if_false", rule: "if-false",
        pass: "main { if (false) { var x:int = 1; } }",
        fail: None },
    Probe { name: "ifelse_false", rule: "ifelse-false",
        pass: "main { if (false) { var y:int = 2; } else { var z:int = 3; } }",
        fail: None },
    Probe { name: "if_undecided", rule: "if-undecided",
        pass: "main { var c:bool = false; if (c) { } }",
        fail: Some("main { if (1) { } }") },
    Probe { name: "cases_one", rule: "cases-one",
        pass: "main { cases (2) { case 1: println(\"a\"); case 2: println(\"b\"); otherwise: println(\"c\"); } }",
        fail: Some("main { cases (2) { case \"x\": println(\"a\"); otherwise: println(\"c\"); } }") },
    Probe { name: "cases_other", rule: "cases-other",
        pass: "main { cases (3) { case 1: println(\"a\"); otherwise: println(\"c\"); } }",
        fail: None },
    Probe { name: "while_true", rule: "while-true",
        pass: "main { while (true) { break; } }",
        fail: None },
    Probe { name: "while_nottrue", rule: "while-nottrue",
        pass: "main { var i:int = 0; while (i < 3) { i = i + 1; } }",
        fail: Some("main { while (1) { } }") },
    Probe { name: "foreach_keys", rule: "foreach-keys",
        pass: "main { var a:array{int} = array(1,2); foreach (var k:int in keys(a)) { } }",
        fail: Some("main { var a:array{int} = array(1,2); foreach (var k:string in keys(a)) { } }") },
    Probe { name: "foreach_values", rule: "foreach-values",
        pass: "main { var a:array{int} = array(1,2); foreach (var v:int in values(a)) { } }",
        fail: Some("main { var a:array{int} = array(1,2); foreach (var v:string in values(a)) { } }") },
    Probe { name: "foreach_pairs", rule: "foreach-pairs",
        pass: "main { var m:map{string,int} = {\"a\":1}; foreach (var k:string, v:int in pairs(m)) { } }",
        fail: Some("main { var m:map{string,int} = {\"a\":1}; foreach (var k:int, v:int in pairs(m)) { } }") },
    Probe { name: "tell", rule: "tell",
        pass: "def A class[actor] { do go(n:int) { self!go(1) with(after:2s, deadline:3s); } };",
        fail: Some("def A class[actor] { do go(n:int) { self!nosuch; } };") },
    Probe { name: "tell_args", rule: "tell",
        pass: "def A class[actor] { do go(n:int) { self!go(n); } };",
        fail: Some("def A class[actor] { do go(n:int) { self!go(\"s\"); } };") },
    Probe { name: "tell_typed_field", rule: "tell",
        pass: "def A class[actor] { do ping { } }; def B class[actor] { var a:A; do go { a!ping; } };",
        fail: Some("def A class[actor] { do ping { } }; def B class[actor] { var a:A; do go { a!nosuch; } };") },
    Probe { name: "cancel_all", rule: "cancel-all",
        pass: "def A class[actor] { do go { cancel *; } };",
        fail: None },
    Probe { name: "cancel_names", rule: "cancel-names",
        pass: "def A class[actor] { do go { cancel go; } };",
        fail: Some("def A class[actor] { do go { cancel nosuch; } };") },

    // ----- timespan -----
    Probe { name: "timespan_arith", rule: "timespan-arith",
        pass: "main { var a:timespan = 1s + 5ms; var b:timespan = a - 1ms; }",
        fail: None },
    Probe { name: "cmp_timespan", rule: "cmp-timespan",
        pass: "main { var b:bool = 1s > 999ms; }",
        fail: None },
    Probe { name: "num_to_timespan", rule: "num-to-timespan",
        pass: "main { var t:timespan = 2 as timespan; }",
        fail: None },
    Probe { name: "timespan_to_num", rule: "timespan-to-num",
        pass: "main { var n:double = 2s as double; }",
        fail: None },
    Probe { name: "string_concat", rule: "string-concat",
        pass: "main { var s:string = \"a\" + \"b\"; }",
        fail: None },
];

fn compile(src: &str) -> mlang::Compilation {
    mlang::compile_source("probe.m", src, &LoadOptions::default())
}

/// The accepting program checks cleanly and reports the rule as applied.
pub fn accepts(rule: &str, src: &str) -> Result<(), String> {
    let c = compile(src);
    if c.has_errors() {
        return Err(format!("{rule}: unexpected errors\n{}", c.render_diagnostics()));
    }
    let model = c.model.expect("model");
    if !model.rules_applied.contains(rule) {
        return Err(format!("{rule} not applied; applied: {:?}", model.rules_applied));
    }
    Ok(())
}

/// The rejecting program produces an error carrying the rule name.
pub fn rejects(rule: &str, src: &str) -> Result<(), String> {
    let c = compile(src);
    if c.diagnostics.iter().any(|d| d.is_error() && d.rule == rule) {
        Ok(())
    } else {
        Err(format!("expected an error naming {rule}, got:\n{}", c.render_diagnostics()))
    }
}

/// Runs every probe; returns the failures.
pub fn check_all() -> Vec<String> {
    let mut failures = Vec::new();
    for p in PROBES {
        if let Err(e) = accepts(p.rule, p.pass) {
            failures.push(format!("{} (accept): {e}", p.name));
        }
        if let Some(bad) = p.fail {
            if let Err(e) = rejects(p.rule, bad) {
                failures.push(format!("{} (reject): {e}", p.name));
            }
        }
    }
    failures
}
