//! Small-step evaluation over peer instances with latency accounting.
//!
//! A [`Config`] is a stack of frames. The bottom frame runs `main` on the
//! instances of the main peer; each `get P' { t }` pushes a frame that
//! evaluates `t` on one chosen instance of `P'`, charging the requester
//! `L(P,P')`. When the top frame reaches a value it is popped and the
//! value replaces the pending `get`; the requester is charged the remote
//! frame's latency plus `L(P',P)`. Every other step is local and free.
//!
//! Evaluation is call-by-value. Where several redexes are available (the
//! two sides of an application or a `cons`) and where a `get` may go to
//! several instances, [`step`] returns one successor per choice.

mod enumerate;

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::syntax::{PeerType, Program, Term};
use crate::topology::{LatencyMatrix, PeerInstance};

pub use enumerate::{check_soundness, check_soundness_with, enumerate_runs, Enumeration, SoundnessOptions, Verdict};

/// Default step budget for a single run.
pub const DEFAULT_FUEL: usize = 10_000;
/// Default bound on configurations explored by enumeration.
pub const DEFAULT_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("stuck term on {peer}: {term}")]
    StuckTerm { peer: PeerType, term: String },
    #[error("unknown peer `{0}`")]
    UnknownPeer(String),
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(usize),
    #[error("exploration stopped after {0} configurations")]
    CapExceeded(usize),
    #[error("program does not typecheck: {0}")]
    IllTyped(String),
    #[error("latency bound `{0}` is not closed")]
    OpenBound(String),
}

/// Position of a subterm: child indices along evaluation positions.
pub type Path = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    pub peer: PeerType,
    pub instances: Vec<PeerInstance>,
    pub term: Term,
    pub latency: u64,
    /// Location of the `get` this frame is waiting on, if any.
    pub pending: Option<Path>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    frames: Vec<Frame>,
}

impl Config {
    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn top(&self) -> &Frame {
        self.frames.last().expect("a configuration always has a frame")
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// The final value, once the bottom frame is the only one left and holds one.
    pub fn result(&self) -> Option<RunResult> {
        match self.frames.as_slice() {
            [f] if f.term.is_value() => Some(RunResult {
                value: f.term.clone(),
                latency: f.latency,
            }),
            _ => None,
        }
    }

    /// Sum of all frame latencies; never decreases along a step.
    pub fn committed(&self) -> u64 {
        self.frames.iter().map(|f| f.latency).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RunResult {
    pub value: Term,
    pub latency: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RedexKind {
    Beta,
    FixUnroll,
    If,
    Case,
    SuccFold,
    Unfold,
    Get,
    Return,
}

impl fmt::Display for RedexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RedexKind::Beta => "beta",
            RedexKind::FixUnroll => "fix",
            RedexKind::If => "if",
            RedexKind::Case => "case",
            RedexKind::SuccFold => "succ",
            RedexKind::Unfold => "unfold",
            RedexKind::Get => "get",
            RedexKind::Return => "return",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Leftmost-innermost redex, first instance.
    Leftmost,
    /// Uniform choice among successors from a seeded generator.
    Seeded(u64),
    /// Explore every reduction sequence and report the worst latency.
    Enumerate { cap: usize },
}

/// One step of a trace, observed after the step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub kind: RedexKind,
    pub depth: usize,
    /// Instances of the top frame.
    pub instances: Vec<String>,
    /// Latency of the top frame.
    pub latency: u64,
    /// `(frame id, latency)` for every live frame, bottom first. Ids are
    /// unique within a trace.
    pub frames: Vec<(u64, u64)>,
    pub committed: u64,
}

impl fmt::Display for TraceEvent {
    /// `<frame-depth> <peer-instances> <latency> <redex-kind>`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {{{}}} {} {}",
            self.depth,
            self.instances.join(","),
            self.latency,
            self.kind
        )
    }
}

/// Placed definitions and the topology, shared by all steps of a program.
#[derive(Clone, Debug)]
pub struct Machine<'a> {
    topo: &'a LatencyMatrix,
    defs: BTreeMap<String, (PeerType, Term)>,
}

impl<'a> Machine<'a> {
    pub fn new(p: &Program, topo: &'a LatencyMatrix) -> Self {
        let defs = p
            .defs
            .iter()
            .map(|d| (d.name.clone(), (d.peer.clone(), d.body.clone())))
            .collect();
        Machine { topo, defs }
    }

    pub fn topology(&self) -> &LatencyMatrix {
        self.topo
    }

    pub fn initial(&self, p: &Program) -> Result<Config, RuntimeError> {
        let instances = self
            .topo
            .instances(&p.main_peer)
            .map_err(|_| RuntimeError::UnknownPeer(p.main_peer.0.clone()))?
            .to_vec();
        Ok(Config {
            frames: vec![Frame {
                peer: p.main_peer.clone(),
                instances,
                term: p.main.clone(),
                latency: 0,
                pending: None,
            }],
        })
    }

    fn weight(&self, from: &PeerType, to: &PeerType) -> Result<u64, RuntimeError> {
        self.topo.weight(from, to).map_err(|e| match e {
            crate::topology::TopologyError::UnknownPeer(p) => RuntimeError::UnknownPeer(p),
            other => RuntimeError::UnknownPeer(other.to_string()),
        })
    }
}

/// A successor configuration and the step that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Successor {
    pub config: Config,
    pub kind: RedexKind,
}

fn child_mut(t: &mut Term, i: u8) -> &mut Term {
    match (t, i) {
        (Term::SuccT(a), 0)
        | (Term::Cons(a, _), 0)
        | (Term::App(a, _), 0)
        | (Term::If { cond: a, .. }, 0)
        | (Term::CaseList { scrutinee: a, .. }, 0) => a,
        (Term::Cons(_, b), 1) | (Term::App(_, b), 1) => b,
        (t, i) => unreachable!("no evaluation position {i} in {t}"),
    }
}

fn at_mut<'t>(mut t: &'t mut Term, path: &[u8]) -> &'t mut Term {
    for &i in path {
        t = child_mut(t, i);
    }
    t
}

fn at<'t>(t: &'t Term, path: &[u8]) -> &'t Term {
    let mut t = t;
    for &i in path {
        t = match (t, i) {
            (Term::SuccT(a), 0)
            | (Term::Cons(a, _), 0)
            | (Term::App(a, _), 0)
            | (Term::If { cond: a, .. }, 0)
            | (Term::CaseList { scrutinee: a, .. }, 0) => a,
            (Term::Cons(_, b), 1) | (Term::App(_, b), 1) => b,
            (t, i) => unreachable!("no evaluation position {i} in {t}"),
        };
    }
    t
}

/// Redex positions of `t`, leftmost-innermost first. Returns `false` if
/// some non-value subterm has no redex (the term is stuck).
fn redexes(t: &Term, path: &mut Path, out: &mut Vec<(Path, RedexKind)>) -> bool {
    let mut here = |kind| {
        out.push((path.clone(), kind));
        true
    };
    match t {
        _ if t.is_value() => true,
        Term::Var(_) => here(RedexKind::Unfold),
        Term::Get { .. } => here(RedexKind::Get),
        Term::SuccT(a) => match **a {
            Term::NatLit(_) => here(RedexKind::SuccFold),
            _ => descend(a, 0, path, out),
        },
        Term::If { cond, .. } => match **cond {
            Term::BoolLit(_) => here(RedexKind::If),
            _ => descend(cond, 0, path, out),
        },
        Term::CaseList { scrutinee, .. } => {
            if scrutinee.is_value() {
                here(RedexKind::Case)
            } else {
                descend(scrutinee, 0, path, out)
            }
        }
        Term::Cons(h, tl) => {
            let mut ok = true;
            if !h.is_value() {
                ok &= descend(h, 0, path, out);
            }
            if !tl.is_value() {
                ok &= descend(tl, 1, path, out);
            }
            ok
        }
        Term::App(f, a) => {
            if f.is_value() && a.is_value() {
                return match **f {
                    Term::Lam { .. } => here(RedexKind::Beta),
                    Term::Fix { .. } => here(RedexKind::FixUnroll),
                    _ => false,
                };
            }
            let mut ok = true;
            if !f.is_value() {
                ok &= descend(f, 0, path, out);
            }
            if !a.is_value() {
                ok &= descend(a, 1, path, out);
            }
            ok
        }
        _ => false,
    }
}

fn descend(t: &Term, i: u8, path: &mut Path, out: &mut Vec<(Path, RedexKind)>) -> bool {
    path.push(i);
    let ok = redexes(t, path, out);
    path.pop();
    ok
}

/// Contracts a local redex; `None` if it is not one after all.
fn contract(m: &Machine, peer: &PeerType, t: &Term) -> Option<Term> {
    match t {
        Term::Var(x) => match m.defs.get(x) {
            Some((p, body)) if p == peer => Some(body.clone()),
            _ => None,
        },
        Term::SuccT(a) => match **a {
            Term::NatLit(n) => n.checked_add(1).map(Term::NatLit),
            _ => None,
        },
        Term::If {
            cond,
            then_branch,
            else_branch,
        } => match **cond {
            Term::BoolLit(true) => Some((**then_branch).clone()),
            Term::BoolLit(false) => Some((**else_branch).clone()),
            _ => None,
        },
        Term::CaseList {
            scrutinee,
            nil_branch,
            head,
            tail,
            cons_branch,
        } => match &**scrutinee {
            Term::Nil(_) => Some((**nil_branch).clone()),
            Term::Cons(h, tl) => Some(cons_branch.subst(head, h).subst(tail, tl)),
            _ => None,
        },
        Term::App(f, a) => match &**f {
            Term::Lam { param, body, .. } => Some(body.subst(param, a)),
            Term::Fix {
                self_name,
                param,
                body,
                ..
            } => Some(body.subst(self_name, f).subst(param, a)),
            _ => None,
        },
        _ => None,
    }
}

/// All configurations reachable in one step. Empty iff `c` is final.
pub fn step(m: &Machine, c: &Config) -> Result<Vec<Successor>, RuntimeError> {
    let top = c.top();
    let stuck = || RuntimeError::StuckTerm {
        peer: top.peer.clone(),
        term: top.term.to_string(),
    };

    if top.term.is_value() {
        if c.depth() == 1 {
            return Ok(Vec::new());
        }
        let mut frames = c.frames.clone();
        let done = frames.pop().expect("depth checked");
        let below = frames.last_mut().expect("depth checked");
        let path = below.pending.take().ok_or_else(stuck)?;
        *at_mut(&mut below.term, &path) = done.term;
        below.latency += done.latency + m.weight(&done.peer, &below.peer)?;
        return Ok(vec![Successor {
            config: Config { frames },
            kind: RedexKind::Return,
        }]);
    }

    let mut found = Vec::new();
    if !redexes(&top.term, &mut Vec::new(), &mut found) || found.is_empty() {
        return Err(stuck());
    }

    let mut out = Vec::new();
    for (path, kind) in found {
        if kind == RedexKind::Get {
            let Term::Get { target, body } = at(&top.term, &path) else {
                unreachable!("redex kind matches term");
            };
            let request = m.weight(&top.peer, target)?;
            let instances = m
                .topo
                .instances(target)
                .map_err(|_| RuntimeError::UnknownPeer(target.0.clone()))?;
            for inst in instances {
                let mut frames = c.frames.clone();
                let requester = frames.last_mut().expect("nonempty");
                requester.latency += request;
                requester.pending = Some(path.clone());
                frames.push(Frame {
                    peer: target.clone(),
                    instances: vec![inst.clone()],
                    term: (**body).clone(),
                    latency: 0,
                    pending: None,
                });
                out.push(Successor {
                    config: Config { frames },
                    kind,
                });
            }
        } else {
            let next = contract(m, &top.peer, at(&top.term, &path)).ok_or_else(stuck)?;
            let mut frames = c.frames.clone();
            *at_mut(&mut frames.last_mut().expect("nonempty").term, &path) = next;
            out.push(Successor {
                config: Config { frames },
                kind,
            });
        }
    }
    Ok(out)
}

/// Builds trace events along a sequence of steps, assigning frame ids.
#[derive(Clone, Debug, Default)]
pub struct Tracer {
    ids: Vec<u64>,
    next_id: u64,
    pub events: Vec<TraceEvent>,
}

impl Tracer {
    pub fn new() -> Self {
        Tracer {
            ids: vec![0],
            next_id: 1,
            events: Vec::new(),
        }
    }

    pub fn record(&mut self, kind: RedexKind, after: &Config) {
        while self.ids.len() < after.depth() {
            self.ids.push(self.next_id);
            self.next_id += 1;
        }
        self.ids.truncate(after.depth());
        let top = after.top();
        self.events.push(TraceEvent {
            kind,
            depth: after.depth(),
            instances: top.instances.iter().map(|i| i.id.clone()).collect(),
            latency: top.latency,
            frames: self
                .ids
                .iter()
                .zip(after.frames())
                .map(|(&id, f)| (id, f.latency))
                .collect(),
            committed: after.committed(),
        });
    }
}

/// Steps where some frame's latency, or the committed total, went down.
pub fn monotonicity_violations(trace: &[TraceEvent]) -> Vec<usize> {
    let mut last: BTreeMap<u64, u64> = BTreeMap::new();
    let mut committed = 0;
    let mut bad = Vec::new();
    for (i, e) in trace.iter().enumerate() {
        let mut ok = e.committed >= committed;
        committed = e.committed;
        for &(id, l) in &e.frames {
            if last.get(&id).is_some_and(|&prev| l < prev) {
                ok = false;
            }
            last.insert(id, l);
        }
        if !ok {
            bad.push(i);
        }
    }
    bad
}

/// Runs `p` to a value, choosing among successors by `strat`.
pub fn run(p: &Program, topo: &LatencyMatrix, strat: Strategy, fuel: usize) -> Result<RunResult, RuntimeError> {
    run_traced(p, topo, strat, fuel).map(|(r, _)| r)
}

/// Like [`run`], also returning one event per step taken.
pub fn run_traced(
    p: &Program,
    topo: &LatencyMatrix,
    strat: Strategy,
    fuel: usize,
) -> Result<(RunResult, Vec<TraceEvent>), RuntimeError> {
    if let Strategy::Enumerate { cap } = strat {
        let all = enumerate_runs(p, topo, fuel, cap)?;
        if all.capped {
            return Err(RuntimeError::CapExceeded(all.explored));
        }
        if all.fuel_exhausted > 0 {
            return Err(RuntimeError::FuelExhausted(fuel));
        }
        let worst = all
            .terminals()
            .iter()
            .enumerate()
            .max_by_key(|(_, r)| r.latency)
            .map(|(i, _)| i)
            .expect("a run that neither stalls nor exceeds its budget ends in a value");
        return Ok((all.terminals()[worst].clone(), all.trace(worst)));
    }
    let m = Machine::new(p, topo);
    let mut c = m.initial(p)?;
    let mut rng = match strat {
        Strategy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut tracer = Tracer::new();
    for _ in 0..fuel {
        let mut next = step(&m, &c)?;
        if next.is_empty() {
            break;
        }
        let pick = match rng.as_mut() {
            Some(r) => r.gen_range(0..next.len()),
            None => 0,
        };
        let s = next.swap_remove(pick);
        tracer.record(s.kind, &s.config);
        c = s.config;
    }
    match c.result() {
        Some(r) => Ok((r, tracer.events)),
        None => Err(RuntimeError::FuelExhausted(fuel)),
    }
}
