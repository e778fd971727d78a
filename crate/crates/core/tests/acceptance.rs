//! Acceptance criteria. Runs without the test harness so each criterion's
//! PASS/FAIL line is always printed; exits non-zero if any criterion fails.

mod common;

use common::rebeca::{self, Rebec, Value as RValue};
use mlang::codegen::{self, GenOptions};
use mlang::runtime::trace::{Action, TraceEvent};
use mlang::runtime::{run, RunConfig, RunResult, StopReason};
use mlang::semantics::Model;
use mlang::syntax::{parse_timespan, LoadOptions};
use mlang::types::timespan::to_units;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

const CORPUS: [&str; 6] = ["watertank.m", "talker.m", "coffeemachine.m", "bicycle.m", "trafficlight.m", "ball.m"];

// wall-clock budgets per criterion
const LIMIT_CHECK: Duration = Duration::from_secs(1);
const LIMIT_COFFEE: Duration = Duration::from_secs(1);
const LIMIT_TANK: Duration = Duration::from_secs(1);
const LIMIT_BALL: Duration = Duration::from_secs(2);
const LIMIT_ORACLE: Duration = Duration::from_secs(10);

const CROSS_STEPS: usize = 100;
const ORACLE_CASES: u64 = 1000;

type Outcome = Result<String, String>;

fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn corpus_model(name: &str) -> Result<Model, String> {
    let c = mlang::compile_file(&corpus_path(name), &LoadOptions::default())?;
    let text = c.render_diagnostics();
    c.model.ok_or_else(|| format!("{name}:\n{text}"))
}

fn source_model(text: &str) -> Result<Model, String> {
    let c = mlang::compile_source("case.m", text, &LoadOptions::default());
    let text = c.render_diagnostics();
    c.model.ok_or(text)
}

fn dec(s: &str) -> Decimal {
    Decimal::from_str(s).unwrap()
}

fn dispatches<'a>(r: &'a RunResult) -> impl Iterator<Item = &'a TraceEvent> + 'a {
    r.trace.iter().filter(|e| e.action == Action::Dispatch)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(format!("{out} [{took:.2?}]"))
}

fn corpus_compiles() -> Outcome {
    within(LIMIT_CHECK, || {
        for name in CORPUS {
            let c = mlang::compile_file(&corpus_path(name), &LoadOptions::default())?;
            let errors = c.diagnostics.iter().filter(|d| d.is_error()).count();
            ensure(errors == 0, || format!("{name}: {errors} errors\n{}", c.render_diagnostics()))?;
        }
        let probes = [
            ("binary-arith1", "main { var x:int = 1 + true; }"),
            ("explicit-conversion", "main { var d:double = 1.5; var i:int = d; }"),
            ("tell", "def A class[actor] { do ping { } }; def B class[actor] { var a:A; do go { a!nosuch; } };"),
        ];
        for (rule, src) in probes {
            common::rules::rejects(rule, src)?;
        }
        Ok(format!("{} models clean, {} probes rejected by rule", CORPUS.len(), probes.len()))
    })
}

fn coffee_schedule() -> Outcome {
    within(LIMIT_COFFEE, || {
        let r = run(&corpus_model("coffeemachine.m")?, RunConfig::default());
        let eps = dec("0.000000001");
        let of = |ev: &str| dispatches(&r).filter(|e| e.ev == ev).collect::<Vec<_>>();
        let starts = of("startstop");
        ensure(starts.len() == 1 && starts[0].t == dec("5000"), || format!("startstop at {:?}", starts.iter().map(|e| e.t).collect::<Vec<_>>()))?;
        let drips: Vec<Decimal> = of("drip").iter().map(|e| e.t).collect();
        let expect: Vec<Decimal> = (0..30).map(|k| dec("5000") + eps + Decimal::from(100 * k)).collect();
        ensure(drips == expect, || format!("drip times {drips:?}"))?;
        let mut series: Vec<i64> = Vec::new();
        for e in dispatches(&r) {
            for d in e.deltas.iter().filter(|d| d.var == "drippedAmount") {
                series.push(d.new.as_i64().unwrap());
            }
        }
        let mut expect_series: Vec<i64> = (1..=30).map(|k| 5 * k).collect();
        expect_series.push(0);
        ensure(series == expect_series, || format!("drippedAmount series {series:?}"))?;
        let (stops, dones) = (of("stop"), of("done"));
        ensure(stops.len() == 1 && dones.len() == 1, || "stop and done must each occur once".into())?;
        ensure(stops[0].t == dec("7900") + eps + eps && dones[0].t == dec("7900") + eps + eps + eps, || "stop/done times".into())?;
        ensure(r.stop == StopReason::QueueEmpty, || format!("stop reason {}", r.stop.name()))?;
        Ok(format!("30 drips from 5000+e every 100, stop {} done {}", stops[0].t, dones[0].t))
    })
}

fn tank_edge_trigger() -> Outcome {
    within(LIMIT_TANK, || {
        let cfg = RunConfig { max_events: 1100, ..RunConfig::default() };
        let r = run(&corpus_model("watertank.m")?, cfg);
        ensure(r.dispatched == 1100, || format!("{} events", r.dispatched))?;
        let shuts: Vec<_> = dispatches(&r).filter(|e| e.ev == "shutValve").collect();
        ensure(shuts.len() == 1, || format!("{} shutValve dispatches", shuts.len()))?;
        let later = dispatches(&r).filter(|e| e.ev == "readTankLevel" && e.t > shuts[0].t).count();
        ensure(later >= 10, || format!("only {later} ticks after the shut"))?;
        Ok(format!("one shutValve at {}, none in the {later} ticks after", shuts[0].t))
    })
}

fn ball_physics() -> Outcome {
    within(LIMIT_BALL, || {
        let cfg = RunConfig { max_time_ms: Some(dec("30000")), ..RunConfig::default() };
        let r = run(&corpus_model("ball.m")?, cfg);
        let (mut y, mut v) = (10.0_f64, 0.0_f64);
        let mut ys = vec![y];
        let mut bounces = 0;
        for e in dispatches(&r).filter(|e| e.ev == "update") {
            let v_pre = v;
            for d in &e.deltas {
                let x = d.new.as_f64().unwrap();
                if d.var == "y" {
                    y = x;
                } else {
                    v = x;
                }
            }
            ensure(y >= 0.0, || format!("y = {y} at {}", e.t))?;
            // a bounce zeroes y and flips v; the velocity it flips is the
            // pre-step one after one step of gravity
            let falling = v_pre - 9.81 * (10.0 / 1000.0);
            if y == 0.0 && v >= 0.0 && falling < 0.0 {
                bounces += 1;
                let exact = Decimal::from_str(&format!("{}", v.abs())).unwrap();
                let want = Decimal::from_str(&format!("{}", 0.9 * falling.abs())).unwrap();
                ensure(exact == want, || format!("bounce at {}: |v| {exact} vs 0.9*{}", e.t, falling.abs()))?;
            }
            ys.push(y);
        }
        let maxima: Vec<f64> = ys.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2]).map(|w| w[1]).collect();
        ensure(maxima.windows(2).all(|w| w[1] < w[0]), || format!("maxima {maxima:?}"))?;
        ensure(bounces > 0, || "no bounces".into())?;
        Ok(format!("{} events, {bounces} bounces, {} maxima decreasing", r.dispatched, maxima.len()))
    })
}

const TIE_MODEL: &str = r#"
def A class[actor] {
    var[state] armed:bool = false;
    do initialize {
        self!arm with(after:1s - 1ns);
        self!ext with(after:1s);
    }
    do arm { armed = true; self!arm with(after:1s); }
    do ext { self!ext with(after:1s); }
    do[on(armed)] cond { armed = false; }
    do[every(1s)] tick { }
};
main { var a:actor = A(); }
"#;

fn tie_breaking() -> Outcome {
    let m = source_model(TIE_MODEL)?;
    // one nanosecond in 1ms units, so `arm` lands one step before the round
    let eps = dec("0.000001");
    let cfg = RunConfig { epsilon: eps, max_time_ms: Some(dec("3500")), ..RunConfig::default() };
    let r = run(&m, cfg);
    for k in 1..=3 {
        let base = Decimal::from(1000 * k);
        let got: Vec<(Decimal, &str)> = dispatches(&r).filter(|e| e.t >= base && e.t < base + dec("1")).map(|e| (e.t, e.ev.as_str())).collect();
        let want = vec![(base, "ext"), (base + eps, "cond"), (base + eps + eps, "tick")];
        ensure(got == want, || format!("round {k}: {got:?}"))?;
    }
    Ok("external, conditional, periodic in three rounds, each one epsilon apart".into())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in CORPUS {
        let m = corpus_model(name)?;
        let mut files = Vec::new();
        for run_no in 0..2 {
            let cfg = RunConfig { seed: 7, max_time_ms: Some(dec("20000")), max_events: 5000, ..RunConfig::default() };
            let path = dir.path().join(format!("{name}.{run_no}.jsonl"));
            std::fs::write(&path, run(&m, cfg).trace_jsonl()).map_err(|e| e.to_string())?;
            files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(files[0] == files[1], || format!("{name}: traces differ"))?;
    }
    Ok(format!("{} models, identical trace files", CORPUS.len()))
}

fn timespan_scaling() -> Outcome {
    // length of each unit in nanoseconds, kept separate from the library's table
    let ns_per: HashMap<&str, i64> = [("d", 86_400_000_000_000), ("h", 3_600_000_000_000), ("m", 60_000_000_000), ("s", 1_000_000_000), ("ms", 1_000_000), ("us", 1_000), ("ns", 1)]
        .into_iter()
        .collect();
    let parts = [("1.1", "d"), ("2.2", "h"), ("3", "m"), ("4", "s"), ("5", "ms"), ("6", "us"), ("7", "ns")];
    let oracle_ns: Decimal = parts.iter().map(|(n, u)| dec(n) * Decimal::from(ns_per[u])).sum();
    let oracle = oracle_ns / Decimal::from(ns_per["ms"]);
    ensure(oracle == dec("103144005.006007"), || format!("oracle gives {oracle}"))?;
    let ts = parse_timespan("1.1d2.2h3m4s5ms6us7ns").ok_or("literal does not parse")?;
    let unit = Decimal::ONE;
    let got = to_units(ts.total_millis(), unit);
    ensure(got == oracle, || format!("to_units gives {got}"))?;
    let s = to_units(parse_timespan("1s").unwrap().total_millis(), unit);
    let ms = to_units(parse_timespan("1ms").unwrap().total_millis(), unit);
    ensure(s == Decimal::from(1000) && ms == Decimal::ONE, || format!("scale(1s)={s}, scale(1ms)={ms}"))?;
    Ok(format!("{got} units; 1s = {s}, 1ms = {ms}"))
}

fn typing_rules() -> Outcome {
    let failures = common::rules::check_all();
    ensure(failures.is_empty(), || failures.join("\n"))?;
    let rules: BTreeSet<_> = common::rules::PROBES.iter().map(|p| p.rule).collect();
    let with_fail: BTreeSet<_> = common::rules::PROBES.iter().filter(|p| p.fail.is_some()).map(|p| p.rule).collect();
    ensure(rules.len() >= 30, || format!("only {} rules", rules.len()))?;
    Ok(format!(
        "{} probes over {} rules, {} rules with a rejecting probe",
        common::rules::PROBES.len(),
        rules.len(),
        with_fail.len()
    ))
}

fn rebeca_golden() -> Outcome {
    let m = corpus_model("ball.m")?;
    let text = codegen::generate("rebeca", &m, &GenOptions::default()).map_err(|e| e.to_string())?.text;
    let golden = std::fs::read_to_string(corpus_path("ball.rebeca")).map_err(|e| e.to_string())?;
    let (got, want) = (rebeca::parse(&text), rebeca::parse(&golden));
    let env: BTreeSet<&str> = got.env.keys().map(String::as_str).collect();
    ensure(env == BTreeSet::from(["SIM_TIME_UNIT", "g", "r", "period", "initY"]), || format!("env {env:?}"))?;
    let vars: BTreeSet<&str> = got.statevars.iter().map(String::as_str).collect();
    ensure(vars == BTreeSet::from(["y_", "v_", "initY_"]), || format!("statevars {vars:?}"))?;
    ensure(got.env == want.env && got.statevars == want.statevars, || "differs from golden".into())?;
    for f in ["discretize", "undiscretize", "dt"] {
        ensure(got.methods.contains_key(f), || format!("missing {f}"))?;
    }

    // the update server reschedules itself after `period`
    let mut ball = Rebec::new(&got);
    ball.fields.insert("y_".into(), RValue::Int(0));
    ball.fields.insert("v_".into(), RValue::Int(0));
    ball.serve("update", HashMap::new());
    let period = match got.env["period"] {
        RValue::Int(p) => p,
        v => return Err(format!("period {v:?}")),
    };
    ensure(ball.sent == vec![("update".to_string(), period)], || format!("sends {:?}", ball.sent))?;

    // cross-validation: feed each pre-step state from the M run into the
    // Rebeca update server and compare the discretized results
    let cfg = RunConfig { max_events: CROSS_STEPS as u64 + 1, ..RunConfig::default() };
    let r = run(&m, cfg);
    let (mut y, mut v) = (10.0_f64, 0.0_f64);
    let mut steps = 0;
    for e in dispatches(&r).filter(|e| e.ev == "update") {
        let (y0, v0) = (y, v);
        for d in &e.deltas {
            let x = d.new.as_f64().unwrap();
            if d.var == "y" {
                y = x;
            } else {
                v = x;
            }
        }
        let mut rb = Rebec::new(&got);
        let locals = HashMap::from([("y".to_string(), RValue::Real(y0)), ("v".to_string(), RValue::Real(v0))]);
        rb.serve("update", locals);
        let dy = rb.call("discretize", vec![RValue::Real(y)]).unwrap();
        let dv = rb.call("discretize", vec![RValue::Real(v)]).unwrap();
        ensure(rb.fields["y_"] == dy && rb.fields["v_"] == dv, || {
            format!("step {steps}: rebeca ({:?}, {:?}) vs M ({dy:?}, {dv:?})", rb.fields["y_"], rb.fields["v_"])
        })?;
        steps += 1;
    }
    ensure(steps == CROSS_STEPS, || format!("{steps} steps"))?;
    Ok(format!("env, statevars, helpers and self-call match; {steps} steps agree exactly"))
}

/// A random system: three actors, each message `m{k}` sent either by an
/// actor's `initialize` or by the handler of an earlier message.
#[derive(Debug)]
struct Case {
    receiver: Vec<usize>,
    delay: Vec<i64>,
    /// `None` for messages sent by `initialize` of `root_sender`.
    parent: Vec<Option<usize>>,
    root_sender: Vec<usize>,
    tick: [Option<i64>; 3],
    cond: [Option<i64>; 3],
}

impl Case {
    fn random(rng: &mut ChaCha8Rng) -> Case {
        let n = rng.gen_range(1..=10);
        let mut c = Case { receiver: vec![], delay: vec![], parent: vec![], root_sender: vec![], tick: [None; 3], cond: [None; 3] };
        for k in 0..n {
            c.receiver.push(rng.gen_range(0..3));
            c.delay.push(rng.gen_range(0..3));
            c.parent.push(if k == 0 || rng.gen_bool(0.4) { None } else { Some(rng.gen_range(0..k)) });
            c.root_sender.push(rng.gen_range(0..3));
        }
        for a in 0..3 {
            c.tick[a] = rng.gen_bool(0.5).then(|| rng.gen_range(1..4));
            c.cond[a] = rng.gen_bool(0.5).then(|| rng.gen_range(1..4));
        }
        c
    }

    /// Messages sent by `initialize` of actor `a` (`None`) or by message `k`.
    fn children(&self, from: Option<usize>, a: usize) -> Vec<usize> {
        (0..self.receiver.len())
            .filter(|&j| match from {
                None => self.parent[j].is_none() && self.root_sender[j] == a,
                Some(k) => self.parent[j] == Some(k),
            })
            .collect()
    }

    fn sender(&self, j: usize) -> usize {
        match self.parent[j] {
            None => self.root_sender[j],
            Some(k) => self.receiver[k],
        }
    }

    fn source(&self) -> String {
        let mut s = String::new();
        let sends = |list: Vec<usize>, me: usize| -> String {
            list.iter()
                .map(|&j| {
                    let to = if self.receiver[j] == me { "self".to_string() } else { format!("p{}", self.receiver[j]) };
                    format!(" {to}!m{j} with(after:{}ms);", self.delay[j])
                })
                .collect()
        };
        for a in 0..3 {
            s += &format!("def A{a} class[actor] {{\n var[state] n:int = 0;\n");
            for p in (0..3).filter(|&p| p != a) {
                s += &format!(" var p{p}:actor;\n");
            }
            s += &format!(" do initialize {{{} }}\n", sends(self.children(None, a), a));
            for k in (0..self.receiver.len()).filter(|&k| self.receiver[k] == a) {
                s += &format!(" do m{k} {{ n = n + 1;{} }}\n", sends(self.children(Some(k), a), a));
            }
            if let Some(p) = self.tick[a] {
                s += &format!(" do[every({p}ms)] tick {{ n = n + 1; }}\n");
            }
            if let Some(k) = self.cond[a] {
                s += &format!(" do[on(n >= {k})] c {{ n = 0 - 1000; }}\n");
            }
            s += "};\n";
        }
        s += "main {\n var a0:actor = A0(p1:a1, p2:a2);\n var a1:actor = A1(p0:a0, p2:a2);\n var a2:actor = A2(p0:a0, p1:a1);\n}\n";
        s
    }
}

#[derive(Debug, Clone)]
struct Pending {
    t: Decimal,
    seq: u64,
    to: usize,
    ev: String,
    prio: u8,
}

/// Direct executor of the scheduling rules: take the earliest bag, keep one
/// message per receiver by priority (random among equals), advance the clock
/// to the bag time or by epsilon, run the reactions in receiver order.
/// Returns the dispatch log and how many random choices were made.
fn brute_force(case: &Case, seed: u64, eps: Decimal, max_time: Decimal) -> (Vec<(Decimal, usize, String)>, usize) {
    const INIT: u8 = 3;
    const EXT: u8 = 2;
    const COND: u8 = 1;
    const PER: u8 = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queue: Vec<Pending> = Vec::new();
    let mut seq = 0;
    let mut push = |queue: &mut Vec<Pending>, t: Decimal, to: usize, ev: String, prio: u8| {
        queue.push(Pending { t, seq, to, ev, prio });
        seq += 1;
    };
    for a in 0..3 {
        push(&mut queue, Decimal::ZERO, a, "initialize".into(), INIT);
        if let Some(p) = case.tick[a] {
            push(&mut queue, Decimal::from(p), a, "tick".into(), PER);
        }
    }
    let mut now = Decimal::NEGATIVE_ONE;
    let mut n = [0i64; 3];
    let mut log = Vec::new();
    let mut draws = 0;
    while let Some(tmin) = queue.iter().map(|m| m.t).min() {
        let t = if tmin > now { tmin } else { now + eps };
        if t > max_time {
            break;
        }
        let mut by_to: BTreeMap<usize, Vec<Pending>> = BTreeMap::new();
        let mut bag: Vec<Pending> = queue.iter().filter(|m| m.t == tmin).cloned().collect();
        bag.sort_by_key(|m| m.seq);
        for m in bag {
            by_to.entry(m.to).or_default().push(m);
        }
        let mut chosen = Vec::new();
        for (_, ms) in by_to {
            let best = ms.iter().map(|m| m.prio).max().unwrap();
            let cands: Vec<&Pending> = ms.iter().filter(|m| m.prio == best).collect();
            let i = if cands.len() > 1 {
                draws += 1;
                rng.gen_range(0..cands.len())
            } else {
                0
            };
            chosen.push(cands[i].clone());
        }
        queue.retain(|m| !chosen.iter().any(|c| c.seq == m.seq));
        now = t;
        for m in chosen {
            let a = m.to;
            log.push((now, a, m.ev.clone()));
            let sent = match m.ev.as_str() {
                "initialize" => case.children(None, a),
                "tick" => {
                    n[a] += 1;
                    vec![]
                }
                "c" => {
                    n[a] = -1000;
                    vec![]
                }
                ev => {
                    n[a] += 1;
                    case.children(Some(ev[1..].parse().unwrap()), a)
                }
            };
            for j in sent {
                push(&mut queue, now + Decimal::from(case.delay[j]), case.receiver[j], format!("m{j}"), EXT);
            }
            if let Some(k) = case.cond[a] {
                if n[a] >= k && !queue.iter().any(|q| q.to == a && q.prio == COND) {
                    push(&mut queue, now + eps, a, "c".into(), COND);
                }
            }
            if m.prio == PER {
                push(&mut queue, now + Decimal::from(case.tick[a].unwrap()), a, "tick".into(), PER);
            }
        }
    }
    (log, draws)
}

fn scheduler_micro_oracle() -> Outcome {
    within(LIMIT_ORACLE, || {
        let eps = dec("0.000000001");
        let max_time = dec("15");
        let mut draws = 0;
        for case_no in 0..ORACLE_CASES {
            let mut rng = ChaCha8Rng::seed_from_u64(case_no);
            let case = Case::random(&mut rng);
            debug_assert!((0..case.receiver.len()).all(|j| case.sender(j) < 3));
            let src = case.source();
            let m = source_model(&src).map_err(|d| format!("case {case_no} does not compile:\n{d}\n{src}"))?;
            let cfg = RunConfig { seed: case_no, epsilon: eps, max_time_ms: Some(max_time), ..RunConfig::default() };
            let r = run(&m, cfg);
            ensure(r.error.is_none(), || format!("case {case_no}: runtime error"))?;
            let got: Vec<(Decimal, usize, String)> = dispatches(&r).map(|e| (e.t, e.actor as usize, e.ev.clone())).collect();
            let (want, d) = brute_force(&case, case_no, eps, max_time);
            draws += d;
            ensure(got == want, || format!("case {case_no}:\n{src}\nscheduler {got:?}\noracle    {want:?}"))?;
        }
        Ok(format!("{ORACLE_CASES} random systems agree ({draws} random tie-breaks)"))
    })
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("corpus compiles and probes name their rules", corpus_compiles),
        ("coffee machine schedule", coffee_schedule),
        ("water tank edge trigger", tank_edge_trigger),
        ("bouncing ball physics", ball_physics),
        ("tie-breaking priority", tie_breaking),
        ("determinism", determinism),
        ("timespan arithmetic", timespan_scaling),
        ("typing rule suite", typing_rules),
        ("rebeca golden and cross-validation", rebeca_golden),
        ("scheduler micro-oracle", scheduler_micro_oracle),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
