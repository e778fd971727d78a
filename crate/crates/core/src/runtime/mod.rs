//! Discrete-event execution of a decorated model: logical clock, global
//! message queue with tie-breaking, run-to-completion reactions, state time
//! series, conditional scans and periodic rescheduling.

pub mod actor;
pub mod externals;
mod interp;
pub mod queue;
pub mod trace;

pub use actor::ActorInstance;
pub use queue::{GlobalQueue, Message, TriggerKind};
pub use trace::{Action, Delta, TraceEvent, TraceHeader};

use crate::semantics::ir::{Model, Trigger};
use crate::syntax::token::{SourceMap, Span};
use crate::types::timespan::to_units;
use crate::value::Value;
use interp::{Exec, Fault};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde_json::{Map, Value as Json};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Default micro-timestep, in simulation units.
pub fn default_epsilon() -> Decimal {
    Decimal::new(1, 9)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub epsilon: Decimal,
    /// Stop before dispatching anything later than this (milliseconds).
    pub max_time_ms: Option<Decimal>,
    pub max_events: u64,
    /// Keep only the last two entries of every state series.
    pub truncate_history: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            epsilon: default_epsilon(),
            max_time_ms: None,
            max_events: 1_000_000,
            truncate_history: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    QueueEmpty,
    MaxTime,
    MaxEvents,
    TerminateCalled,
    RuntimeError,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::QueueEmpty => "queue-empty",
            StopReason::MaxTime => "max-time",
            StopReason::MaxEvents => "max-events",
            StopReason::TerminateCalled => "terminate-called",
            StopReason::RuntimeError => "runtime-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeError {
    pub message: String,
    pub actor: Option<u32>,
    /// Simulation time of the failure.
    pub time: Decimal,
    pub span: Option<Span>,
}

impl RuntimeError {
    /// `error file:line:col runtime message` when the location is known.
    pub fn render(&self, sources: &SourceMap) -> String {
        let who = match self.actor {
            Some(a) => format!(" (actor #{a} at t={})", trace::time_text(self.time)),
            None => format!(" (at t={})", trace::time_text(self.time)),
        };
        match self.span {
            Some(s) => format!(
                "error {}:{}:{} runtime {}{who}",
                sources.path(s.file),
                s.line,
                s.column,
                self.message
            ),
            None => format!("error runtime {}{who}", self.message),
        }
    }
}

#[derive(Debug)]
pub struct RunResult {
    pub header: TraceHeader,
    pub trace: Vec<TraceEvent>,
    /// Text written by `print`/`println`, in order.
    pub output: Vec<String>,
    pub stop: StopReason,
    pub error: Option<RuntimeError>,
    pub dispatched: u64,
    pub clock: Vec<Decimal>,
    pub actors: Vec<ActorInstance>,
}

impl RunResult {
    pub fn final_time(&self) -> Decimal {
        *self.clock.last().unwrap_or(&Decimal::NEGATIVE_ONE)
    }

    pub fn trace_jsonl(&self) -> String {
        trace::to_jsonl(&self.header, &self.trace)
    }

    pub fn dispatches(&self) -> impl Iterator<Item = &TraceEvent> {
        self.trace.iter().filter(|e| e.action == Action::Dispatch)
    }
}

/// sha256 of the model's syntax tree.
pub fn model_hash(model: &Model) -> String {
    let text = serde_json::to_string(&model.program).expect("program serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Picks at most one message per receiver from a same-instant bag: highest
/// trigger priority first, then a uniform draw among equals. Draws happen in
/// receiver order and only when there is a real choice. Returns the keys
/// `(t_assume, seq)` of the chosen messages in receiver order.
pub fn tie_break(bag: &[&Message], rng: &mut ChaCha8Rng) -> Vec<(Decimal, u64)> {
    let mut by_receiver: BTreeMap<u32, Vec<&Message>> = BTreeMap::new();
    for m in bag {
        by_receiver.entry(m.receiver).or_default().push(m);
    }
    let mut out = Vec::new();
    for (_, mut ms) in by_receiver {
        ms.sort_by_key(|m| m.seq);
        let best = ms.iter().map(|m| m.kind.priority()).max().unwrap();
        let cands: Vec<&&Message> = ms.iter().filter(|m| m.kind.priority() == best).collect();
        let pick = if cands.len() > 1 { rng.gen_range(0..cands.len()) } else { 0 };
        out.push((cands[pick].t_assume, cands[pick].seq));
    }
    out
}

pub struct System<'m> {
    pub model: &'m Model,
    pub cfg: RunConfig,
    pub clock: Vec<Decimal>,
    pub queue: GlobalQueue,
    pub actors: Vec<Option<ActorInstance>>,
    pub rng: ChaCha8Rng,
    pub trace: Vec<TraceEvent>,
    pub output: Vec<String>,
    pub dispatched: u64,
    next_seq: u64,
    next_id: u32,
    terminate_requested: bool,
    stop: Option<StopReason>,
    max_time: Option<Decimal>,
}

impl<'m> System<'m> {
    /// Builds the initial system: runs the main block at time -1, records
    /// constructor state, and queues the start messages.
    pub fn new(model: &'m Model, cfg: RunConfig) -> Result<Self, RuntimeError> {
        let max_time = cfg.max_time_ms.map(|ms| to_units(ms, model.sim_time_unit_ms));
        let mut sys = System {
            model,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            clock: vec![Decimal::NEGATIVE_ONE],
            queue: GlobalQueue::default(),
            actors: Vec::new(),
            trace: Vec::new(),
            output: Vec::new(),
            dispatched: 0,
            next_seq: 0,
            next_id: 0,
            terminate_requested: false,
            stop: None,
            max_time,
        };
        if let Some(main) = &model.main {
            let mut locals = vec![Value::Void; main.frame.len()];
            for &slot in &main.prealloc {
                locals[slot] = Value::Actor(sys.alloc_id());
            }
            let mut ex = Exec::new(&mut sys, None, None, None, locals);
            let r = ex.exec_block(&main.body);
            if let Err(f) = r {
                return Err(sys.fault(f, None));
            }
        }
        Ok(sys)
    }

    pub fn now(&self) -> Decimal {
        *self.clock.last().unwrap()
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn actor(&self, id: u32) -> Option<&ActorInstance> {
        self.actors.get(id as usize).and_then(|a| a.as_ref())
    }

    pub(crate) fn unit_ms(&self) -> Decimal {
        self.model.sim_time_unit_ms
    }

    pub(crate) fn alloc_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn fault(&self, f: Fault, actor: Option<u32>) -> RuntimeError {
        RuntimeError { message: f.message, actor, time: self.now(), span: f.span }
    }

    /// Registers a constructed actor and queues its start message and the
    /// first occurrence of each periodic response.
    pub(crate) fn spawn(&mut self, id: u32, class: usize, fields: Vec<Value>) {
        let info = &self.model.classes[class];
        let series = info
            .fields
            .iter()
            .zip(&fields)
            .map(|(f, v)| f.state.then(|| vec![(Decimal::NEGATIVE_ONE, v.clone())]))
            .collect();
        let idx = id as usize;
        if self.actors.len() <= idx {
            self.actors.resize(idx + 1, None);
        }
        self.actors[idx] = Some(ActorInstance { id, class, fields, series });
        let now = self.now();
        let base = now.max(Decimal::ZERO);
        self.enqueue(id, id, "initialize", now, base, TriggerKind::Initialize, vec![], vec![], true);
        for r in &info.responses {
            if let Trigger::Periodic { period_ms } = r.trigger {
                let t = base + to_units(period_ms, self.unit_ms());
                self.enqueue(id, id, &r.name, now, t, TriggerKind::Periodic, vec![], vec![], true);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn enqueue(
        &mut self,
        sender: u32,
        receiver: u32,
        event: &str,
        t_send: Decimal,
        t_assume: Decimal,
        kind: TriggerKind,
        payload: Vec<(String, Value)>,
        with: Vec<(String, Value)>,
        scheduled: bool,
    ) {
        let seq = self.next_seq;
        self.next_seq += 1;
        let m = Message {
            seq,
            sender,
            receiver,
            event: event.to_string(),
            t_send,
            t_assume,
            kind,
            payload,
            with,
            scheduled,
        };
        self.trace.push(TraceEvent {
            t: self.now(),
            actor: sender,
            ev: m.event.clone(),
            kind: kind.name().into(),
            action: Action::Send,
            payload: self.payload_json(&m),
            deltas: vec![],
            to: Some(receiver),
            at: Some(t_assume),
        });
        self.queue.push(m);
    }

    fn payload_json(&self, m: &Message) -> Json {
        let reg = &self.model.registry;
        let mut obj = Map::new();
        for (k, v) in &m.payload {
            obj.insert(k.clone(), v.to_json(reg));
        }
        for (k, v) in &m.with {
            if k != "after" && k != "deadline" {
                obj.insert(k.clone(), v.to_json(reg));
            }
        }
        Json::Object(obj)
    }

    /// A user `tell`: binds the arguments to the receiver's formals and
    /// queues the message `after` milliseconds from now.
    pub(crate) fn send(
        &mut self,
        sender: u32,
        receiver: u32,
        event: &str,
        args: Vec<Value>,
        with: Vec<(String, Value)>,
        after_ms: Decimal,
    ) -> Result<(), String> {
        if after_ms < Decimal::ZERO {
            return Err(format!("negative delay `after:{}ms`", after_ms.normalize()));
        }
        let target = self
            .actor(receiver)
            .ok_or_else(|| format!("actor #{receiver} does not exist"))?;
        let class = &self.model.classes[target.class];
        let (kind, payload) = match class.response(event) {
            Some(r) => {
                if r.params.len() != args.len() {
                    return Err(format!(
                        "`{}.{event}` takes {} arguments, {} given",
                        class.name,
                        r.params.len(),
                        args.len()
                    ));
                }
                let cx = crate::types::ConvCtx { reg: &self.model.registry, unit_ms: self.unit_ms() };
                let mut payload = Vec::new();
                for ((name, ty), v) in r.params.iter().zip(args) {
                    let v = crate::types::convert(v, ty, cx)
                        .map_err(|e| format!("argument `{name}` of `{}.{event}`: {e}", class.name))?;
                    payload.push((name.clone(), v));
                }
                let kind = match r.trigger {
                    Trigger::External => TriggerKind::External,
                    Trigger::Periodic { .. } => TriggerKind::Periodic,
                    Trigger::Conditional { .. } => TriggerKind::Conditional,
                };
                (kind, payload)
            }
            None if event == "initialize" && args.is_empty() => (TriggerKind::External, vec![]),
            None => return Err(format!("unknown event `{event}` for class `{}`", class.name)),
        };
        let now = self.now();
        let t = now + to_units(after_ms, self.unit_ms());
        self.enqueue(sender, receiver, event, now, t, kind, payload, with, false);
        Ok(())
    }

    /// Removes the running actor's queued messages, all of them or those
    /// for the named events.
    pub(crate) fn cancel(&mut self, actor: u32, names: Option<&[String]>) -> usize {
        let removed = self.queue.remove_where(|m| {
            m.receiver == actor && names.is_none_or(|ns| ns.contains(&m.event))
        });
        self.trace.push(TraceEvent {
            t: self.now(),
            actor,
            ev: names.map_or("*".to_string(), |ns| ns.join(",")),
            kind: "external".into(),
            action: Action::Cancel,
            payload: serde_json::json!({ "removed": removed }),
            deltas: vec![],
            to: None,
            at: None,
        });
        removed
    }

    pub(crate) fn request_terminate(&mut self) {
        self.terminate_requested = true;
    }

    /// One iteration of the main loop. Returns false once the run is over.
    pub fn step(&mut self) -> Result<bool, RuntimeError> {
        if self.stop.is_some() {
            return Ok(false);
        }
        let Some(t_next) = self.queue.min_time() else {
            self.stop = Some(StopReason::QueueEmpty);
            return Ok(false);
        };
        if self.dispatched >= self.cfg.max_events {
            self.stop = Some(StopReason::MaxEvents);
            return Ok(false);
        }
        let now = self.now();
        let t = if t_next > now { t_next } else { now + self.cfg.epsilon };
        if self.max_time.is_some_and(|mt| t > mt) {
            self.stop = Some(StopReason::MaxTime);
            return Ok(false);
        }
        let chosen = {
            let bag = self.queue.min_bag();
            tie_break(&bag, &mut self.rng)
        };
        let selected: Vec<Message> = chosen
            .into_iter()
            .map(|(ta, seq)| self.queue.remove(ta, seq).expect("selected message is queued"))
            .collect();
        self.clock.push(t);
        for m in selected {
            self.dispatched += 1;
            if let Err(e) = self.react(m) {
                self.stop = Some(StopReason::RuntimeError);
                return Err(e);
            }
        }
        if self.terminate_requested {
            self.queue.clear();
            self.stop = Some(StopReason::TerminateCalled);
            return Ok(false);
        }
        Ok(true)
    }

    /// Runs one reaction, then the conditional scan and the periodic
    /// rescheduling for the receiving actor.
    fn react(&mut self, m: Message) -> Result<(), RuntimeError> {
        let model = self.model;
        let id = m.receiver;
        let ci = self.actor(id).expect("receiver exists").class;
        let class = &model.classes[ci];
        let at = self.trace.len();
        let payload = self.payload_json(&m);
        self.trace.push(TraceEvent {
            t: self.now(),
            actor: id,
            ev: m.event.clone(),
            kind: m.kind.name().into(),
            action: Action::Dispatch,
            payload,
            deltas: vec![],
            to: None,
            at: None,
        });
        if let Some(r) = class.response(&m.event) {
            let mut locals = vec![Value::Void; r.frame.len()];
            for (i, (_, v)) in m.payload.iter().enumerate() {
                locals[i] = v.clone();
            }
            let mut ex = Exec::new(self, Some(id), Some(ci), Some(&m), locals);
            if let Err(f) = ex.exec_block(&r.body) {
                self.commit(id, at);
                return Err(self.fault(f, Some(id)));
            }
        }
        self.commit(id, at);
        if self.terminate_requested {
            self.queue.clear();
            self.trace.push(TraceEvent {
                t: self.now(),
                actor: id,
                ev: m.event.clone(),
                kind: m.kind.name().into(),
                action: Action::Terminate,
                payload: Json::Object(Map::new()),
                deltas: vec![],
                to: None,
                at: None,
            });
            return Ok(());
        }
        self.scan(id, ci)?;
        if m.kind == TriggerKind::Periodic && m.scheduled {
            if let Some(Trigger::Periodic { period_ms }) = class.response(&m.event).map(|r| &r.trigger) {
                let now = self.now();
                let t = now + to_units(*period_ms, self.unit_ms());
                self.enqueue(id, id, &m.event, now, t, TriggerKind::Periodic, vec![], vec![], true);
            }
        }
        Ok(())
    }

    /// Records changed state fields at the current instant and attaches the
    /// deltas to the dispatch record at `at`.
    fn commit(&mut self, id: u32, at: usize) {
        let now = self.now();
        let keep = self.cfg.truncate_history.then_some(2);
        let model = self.model;
        let actor = self.actors[id as usize].as_mut().unwrap();
        let class = &model.classes[actor.class];
        let mut deltas = Vec::new();
        for (i, f) in class.fields.iter().enumerate() {
            if !f.state {
                continue;
            }
            if let Some(old) = actor.commit(i, now, keep) {
                deltas.push(Delta {
                    var: f.name.clone(),
                    old: old.to_json(&model.registry),
                    new: actor.fields[i].to_json(&model.registry),
                });
            }
        }
        self.trace[at].deltas = deltas;
    }

    /// Evaluates every conditional response of the actor and queues those
    /// whose guard holds, unless one is already waiting.
    fn scan(&mut self, id: u32, ci: usize) -> Result<(), RuntimeError> {
        let model = self.model;
        for r in &model.classes[ci].responses {
            let Trigger::Conditional { cond, frame } = &r.trigger else { continue };
            let locals = vec![Value::Void; *frame];
            let mut ex = Exec::new(self, Some(id), Some(ci), None, locals);
            let holds = match ex.eval(cond) {
                Ok(Value::Bool(b)) => b,
                Ok(v) => {
                    let f = Fault { message: format!("condition of `{}` is {}, not bool", r.name, v.kind_name()), span: Some(cond.span) };
                    return Err(self.fault(f, Some(id)));
                }
                Err(f) => return Err(self.fault(f, Some(id))),
            };
            if !holds {
                continue;
            }
            let waiting = self
                .queue
                .any(|m| m.receiver == id && m.event == r.name && m.kind == TriggerKind::Conditional);
            if !waiting {
                let now = self.now();
                let t = now + self.cfg.epsilon;
                self.enqueue(id, id, &r.name, now, t, TriggerKind::Conditional, vec![], vec![], true);
            }
        }
        Ok(())
    }

    pub fn header(&self) -> TraceHeader {
        TraceHeader {
            schema: trace::TRACE_SCHEMA_VERSION.into(),
            model_hash: model_hash(self.model),
            seed: self.cfg.seed,
            epsilon: self.cfg.epsilon,
            sim_time_unit_ms: self.model.sim_time_unit_ms,
        }
    }

    /// Steps until the run stops.
    pub fn run(mut self) -> RunResult {
        let mut error = None;
        loop {
            match self.step() {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    error = Some(e);
                    break;
                }
            }
        }
        self.finish(error)
    }

    fn finish(self, error: Option<RuntimeError>) -> RunResult {
        RunResult {
            header: self.header(),
            trace: self.trace,
            output: self.output,
            stop: self.stop.unwrap_or(StopReason::RuntimeError),
            error,
            dispatched: self.dispatched,
            clock: self.clock,
            actors: self.actors.into_iter().flatten().collect(),
        }
    }
}

/// Initializes and runs a model to completion.
pub fn run(model: &Model, cfg: RunConfig) -> RunResult {
    let seed = cfg.seed;
    let epsilon = cfg.epsilon;
    match System::new(model, cfg) {
        Ok(sys) => sys.run(),
        Err(e) => RunResult {
            header: TraceHeader {
                schema: trace::TRACE_SCHEMA_VERSION.into(),
                model_hash: model_hash(model),
                seed,
                epsilon,
                sim_time_unit_ms: model.sim_time_unit_ms,
            },
            trace: Vec::new(),
            output: Vec::new(),
            stop: StopReason::RuntimeError,
            error: Some(e),
            dispatched: 0,
            clock: vec![Decimal::NEGATIVE_ONE],
            actors: Vec::new(),
        },
    }
}
