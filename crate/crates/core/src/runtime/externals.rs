//! Host implementations of the functions declared `external` in the
//! prelude, keyed by name and arity.

use crate::types::TypeRegistry;
use crate::value::Value;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// What a host function may touch besides its arguments.
pub struct HostCtx<'a> {
    pub reg: &'a TypeRegistry,
    /// Current time in simulation units.
    pub now: f64,
    pub rng: &'a mut ChaCha8Rng,
    pub output: &'a mut Vec<String>,
    pub terminate: &'a mut bool,
}

pub type HostFn = fn(&mut HostCtx, Vec<Value>) -> Result<Value, String>;

pub type Registry = BTreeMap<(&'static str, usize), HostFn>;

pub fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(build)
}

pub fn lookup(name: &str, arity: usize) -> Option<HostFn> {
    registry().iter().find(|((n, a), _)| *n == name && *a == arity).map(|(_, f)| *f)
}

/// `name/arity` for every registered function, sorted.
pub fn list() -> Vec<String> {
    registry().keys().map(|(n, a)| format!("{n}/{a}")).collect()
}

fn build() -> Registry {
    let mut r: Registry = BTreeMap::new();
    r.insert(("println", 1), println);
    r.insert(("print", 1), print);
    r.insert(("toString", 1), to_string);
    for arity in 1..=6 {
        r.insert(("string.format", arity), format);
    }
    r.insert(("pow", 2), pow);
    r.insert(("abs", 1), abs);
    r.insert(("min", 2), min);
    r.insert(("max", 2), max);
    r.insert(("length", 1), length);
    r.insert(("keys", 1), keys);
    r.insert(("values", 1), values);
    r.insert(("pairs", 1), pairs);
    r.insert(("entries", 1), pairs);
    r.insert(("add", 2), add);
    r.insert(("push_back", 2), add);
    r.insert(("removeAt", 2), remove_at);
    r.insert(("reverse", 1), reverse);
    r.insert(("contains", 2), contains);
    r.insert(("now", 0), now);
    r.insert(("terminate", 0), terminate);
    r.insert(("random", 0), random);
    r.insert(("prev", 1), prev);
    r
}

fn println(cx: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    cx.output.push(format!("{}\n", a[0].display(cx.reg)));
    Ok(Value::Void)
}

fn print(cx: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    cx.output.push(a[0].display(cx.reg));
    Ok(Value::Void)
}

fn to_string(cx: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    Ok(Value::Str(a[0].display(cx.reg)))
}

/// printf-style `%s`, `%d`, `%f` (with optional precision) and `%%`.
fn format(cx: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    let Value::Str(f) = &a[0] else { return Err("format string must be a string".into()) };
    let mut args = a[1..].iter();
    let mut out = String::new();
    let mut chars = f.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        let mut precision = None;
        if chars.peek() == Some(&'.') {
            chars.next();
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            precision = Some(digits.parse::<usize>().map_err(|_| "bad precision in format")?);
        }
        let spec = chars.next().ok_or("format string ends with `%`")?;
        if spec == '%' {
            out.push('%');
            continue;
        }
        let v = args.next().ok_or_else(|| format!("missing argument for `%{spec}`"))?;
        match spec {
            's' => out.push_str(&v.display(cx.reg)),
            'd' => match v {
                Value::Int(i) => out.push_str(&i.to_string()),
                other => {
                    let x = other.as_f64().ok_or_else(|| format!("`%d` needs a number, found {}", other.kind_name()))?;
                    out.push_str(&(x.trunc() as i128).to_string());
                }
            },
            'f' => {
                let x = v.as_f64().ok_or_else(|| format!("`%f` needs a number, found {}", v.kind_name()))?;
                out.push_str(&format!("{:.*}", precision.unwrap_or(6), x));
            }
            other => return Err(format!("unsupported format `%{other}`")),
        }
    }
    Ok(Value::Str(out))
}

fn pow(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    match (a[0].as_f64(), a[1].as_f64()) {
        (Some(x), Some(y)) => Ok(Value::Double(x.powf(y))),
        _ => Err("`pow` needs numbers".into()),
    }
}

fn abs(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    match &a[0] {
        Value::Int(i) => Ok(Value::Int(i.abs())),
        Value::Float(f) => Ok(Value::Float(f.abs())),
        Value::Double(d) => Ok(Value::Double(d.abs())),
        Value::Timespan(t) => Ok(Value::Timespan(t.abs())),
        v => Err(format!("`abs` needs a number, found {}", v.kind_name())),
    }
}

fn pick(a: Vec<Value>, want_less: bool) -> Result<Value, String> {
    let (x, y) = (&a[0], &a[1]);
    let less = match (x, y) {
        (Value::Int(p), Value::Int(q)) => p < q,
        (Value::Timespan(p), Value::Timespan(q)) => p < q,
        _ => match (x.as_f64(), y.as_f64()) {
            (Some(p), Some(q)) => p < q,
            _ => return Err(format!("cannot compare {} and {}", x.kind_name(), y.kind_name())),
        },
    };
    let mut a = a;
    Ok(if less == want_less { a.swap_remove(0) } else { a.swap_remove(1) })
}

fn min(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    pick(a, true)
}

fn max(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    pick(a, false)
}

fn length(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    let n = match &a[0] {
        Value::Str(s) => s.chars().count(),
        Value::Map(m) => m.len(),
        v => v.items().ok_or_else(|| format!("`length` needs a collection, found {}", v.kind_name()))?.len(),
    };
    Ok(Value::Int(n as i128))
}

fn keys(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    match &a[0] {
        Value::Map(m) => Ok(Value::List(m.iter().map(|(k, _)| k.clone()).collect())),
        Value::Array(v) | Value::List(v) | Value::Set(v) => Ok(Value::List((0..v.len()).map(|i| Value::Int(i as i128)).collect())),
        v => Err(format!("`keys` needs a collection, found {}", v.kind_name())),
    }
}

fn values(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    match a.into_iter().next().unwrap() {
        Value::Map(m) => Ok(Value::List(m.into_iter().map(|(_, v)| v).collect())),
        Value::Array(v) | Value::List(v) | Value::Set(v) => Ok(Value::List(v)),
        v => Err(format!("`values` needs a collection, found {}", v.kind_name())),
    }
}

fn pairs(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    match a.into_iter().next().unwrap() {
        Value::Map(m) => Ok(Value::List(m.into_iter().map(|(k, v)| Value::Tuple(None, vec![k, v])).collect())),
        Value::Array(v) | Value::List(v) | Value::Set(v) => Ok(Value::List(
            v.into_iter().enumerate().map(|(i, x)| Value::Tuple(None, vec![Value::Int(i as i128), x])).collect(),
        )),
        v => Err(format!("`pairs` needs a collection, found {}", v.kind_name())),
    }
}

fn add(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    let mut it = a.into_iter();
    let (coll, e) = (it.next().unwrap(), it.next().unwrap());
    match coll {
        Value::Array(mut v) => {
            v.push(e);
            Ok(Value::Array(v))
        }
        Value::List(mut v) => {
            v.push(e);
            Ok(Value::List(v))
        }
        Value::Set(mut v) => {
            if !v.contains(&e) {
                v.push(e);
            }
            Ok(Value::Set(v))
        }
        v => Err(format!("cannot add to a {} value", v.kind_name())),
    }
}

fn remove_at(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    let mut it = a.into_iter();
    let (coll, i) = (it.next().unwrap(), it.next().unwrap());
    let i = i.as_int().ok_or("index must be an integer")?;
    let take = |mut v: Vec<Value>| -> Result<Vec<Value>, String> {
        if i < 0 || i as usize >= v.len() {
            return Err(format!("index {i} out of bounds for length {}", v.len()));
        }
        v.remove(i as usize);
        Ok(v)
    };
    match coll {
        Value::Array(v) => Ok(Value::Array(take(v)?)),
        Value::List(v) => Ok(Value::List(take(v)?)),
        Value::Set(v) => Ok(Value::Set(take(v)?)),
        Value::Str(s) => {
            let chars: Vec<Value> = s.chars().map(Value::Char).collect();
            let kept = take(chars)?;
            Ok(Value::Str(kept.iter().filter_map(|c| if let Value::Char(c) = c { Some(*c) } else { None }).collect()))
        }
        v => Err(format!("`removeAt` needs an array or list, found {}", v.kind_name())),
    }
}

fn reverse(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    match a.into_iter().next().unwrap() {
        Value::Array(mut v) => {
            v.reverse();
            Ok(Value::Array(v))
        }
        Value::List(mut v) => {
            v.reverse();
            Ok(Value::List(v))
        }
        Value::Str(s) => Ok(Value::Str(s.chars().rev().collect())),
        v => Err(format!("`reverse` needs an array or list, found {}", v.kind_name())),
    }
}

fn contains(_: &mut HostCtx, a: Vec<Value>) -> Result<Value, String> {
    let found = match (&a[0], &a[1]) {
        (Value::Map(m), k) => m.iter().any(|(x, _)| x == k),
        (Value::Str(s), Value::Str(t)) => s.contains(t.as_str()),
        (Value::Str(s), Value::Char(c)) => s.contains(*c),
        (c, e) => c.items().ok_or_else(|| format!("`contains` needs a collection, found {}", c.kind_name()))?.contains(e),
    };
    Ok(Value::Bool(found))
}

fn now(cx: &mut HostCtx, _: Vec<Value>) -> Result<Value, String> {
    Ok(Value::Double(cx.now))
}

fn terminate(cx: &mut HostCtx, _: Vec<Value>) -> Result<Value, String> {
    *cx.terminate = true;
    Ok(Value::Void)
}

fn random(cx: &mut HostCtx, _: Vec<Value>) -> Result<Value, String> {
    Ok(Value::Double(cx.rng.gen::<f64>()))
}

/// `prev` is resolved by the analyzer against the actor's state series;
/// reaching the host means it was applied to something without history.
fn prev(_: &mut HostCtx, _: Vec<Value>) -> Result<Value, String> {
    Err("`prev` is only defined on state variables".into())
}
