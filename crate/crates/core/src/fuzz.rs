//! Random well-typed programs for checking bounds against runs.
//!
//! Programs are built top-down from the type they must have, so nearly all
//! of them typecheck; the few that do not are reported as generator
//! failures and replaced by a fresh attempt. Recursive definitions follow a
//! fixed structurally-recursive template over lists whose declared bound is
//! derived from the synthesized cost of its pieces.
//!
//! Every program is determined by `(seed, index)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{ArithTerm, AssumptionSet};
use crate::runtime::{check_soundness_with, SoundnessOptions, Verdict};
use crate::syntax::{BasicType, PeerType, PlacedDef, Pos, Program, SizedType, Term};
use crate::topology::LatencyMatrix;
use crate::typer::{typecheck_program, typecheck_term, LocalEnv, PlacedEnv};

/// Attempts per program index before giving up on it.
pub const MAX_ATTEMPTS: u64 = 16;

const PEER_NAMES: [&str; 3] = ["Client", "Server", "Db"];
const WEIGHTS: [u64; 3] = [0, 2, 100];
const MAX_DEPTH: usize = 6;
const MAX_LIST: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Unit,
    Bool,
    Nat,
    List,
}

impl Ty {
    const DATA: [Ty; 4] = [Ty::Unit, Ty::Bool, Ty::Nat, Ty::List];

    fn basic(self) -> BasicType {
        match self {
            Ty::Unit => BasicType::Unit,
            Ty::Bool => BasicType::Bool,
            Ty::Nat => BasicType::Nat,
            Ty::List => BasicType::list(BasicType::Nat),
        }
    }
}

#[derive(Clone, Debug)]
enum DefKind {
    Data(Ty),
    /// A recursive function from `List[Nat]` to the given type.
    ListFun(Ty),
}

#[derive(Clone, Debug)]
struct DefInfo {
    name: String,
    peer: PeerType,
    kind: DefKind,
}

#[derive(Clone, Debug)]
struct Local {
    name: String,
    ty: Ty,
    /// A list element bound by `case`; its size may not leave the case,
    /// so it is only used as the head of a `cons`.
    head: bool,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    topo: &'a LatencyMatrix,
    defs: Vec<DefInfo>,
    placed: PlacedEnv,
    fresh: usize,
}

fn peer_rng(seed: u64, index: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index * MAX_ATTEMPTS + attempt);
    rng
}

/// A random topology: two or three peers, one or two instances each,
/// weights drawn from `{0, 2, 100}`.
pub fn random_topology(rng: &mut impl Rng) -> LatencyMatrix {
    let n = rng.gen_range(2..=3);
    let mut b = LatencyMatrix::builder();
    for name in &PEER_NAMES[..n] {
        b.peer(name).expect("distinct names");
    }
    for name in &PEER_NAMES[..n] {
        for i in 1..=rng.gen_range(1..=2) {
            b.instance(&format!("{}{i}", name.to_lowercase()), name)
                .expect("distinct instances");
        }
    }
    for from in &PEER_NAMES[..n] {
        for to in &PEER_NAMES[..n] {
            if from == to && rng.gen_bool(0.7) {
                continue;
            }
            let w = *WEIGHTS.choose(rng).expect("nonempty");
            b.lat(from, to, w).expect("declared peers");
        }
    }
    b.build().expect("complete by construction")
}

impl<'a> Gen<'a> {
    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn peer(&mut self) -> PeerType {
        self.topo.peers().choose(&mut self.rng).expect("nonempty").clone()
    }

    fn nat_lit(&mut self) -> Term {
        Term::NatLit(self.rng.gen_range(0..=5))
    }

    fn list_lit(&mut self) -> Term {
        let n = self.rng.gen_range(0..=MAX_LIST);
        let items: Vec<u64> = (0..n).map(|_| self.rng.gen_range(0..=5)).collect();
        Term::nat_list(&items)
    }

    fn data_defs(&self, peer: &PeerType, ty: Ty) -> Vec<String> {
        self.defs
            .iter()
            .filter(|d| d.peer == *peer && matches!(d.kind, DefKind::Data(t) if t == ty))
            .map(|d| d.name.clone())
            .collect()
    }

    fn fun_defs(&self, peer: &PeerType, ty: Ty) -> Vec<String> {
        self.defs
            .iter()
            .filter(|d| d.peer == *peer && matches!(d.kind, DefKind::ListFun(t) if t == ty))
            .map(|d| d.name.clone())
            .collect()
    }

    fn leaf(&mut self, ty: Ty, peer: &PeerType, locals: &[Local]) -> Term {
        let mut names: Vec<String> = locals
            .iter()
            .filter(|l| l.ty == ty && !l.head)
            .map(|l| l.name.clone())
            .collect();
        names.extend(self.data_defs(peer, ty));
        if !names.is_empty() && self.rng.gen_bool(0.4) {
            return Term::var(names.choose(&mut self.rng).expect("nonempty").clone());
        }
        match ty {
            Ty::Unit => Term::UnitLit,
            Ty::Bool => Term::BoolLit(self.rng.gen()),
            Ty::Nat => self.nat_lit(),
            Ty::List => self.list_lit(),
        }
    }

    fn term(&mut self, ty: Ty, peer: &PeerType, locals: &[Local], depth: usize) -> Term {
        if depth == 0 {
            return self.leaf(ty, peer, locals);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 | 1 => self.leaf(ty, peer, locals),
            2 | 3 => {
                let target = self.peer();
                let body = self.term(ty, &target, &[], d);
                Term::get(target.0, body)
            }
            4 => {
                let c = self.term(Ty::Bool, peer, locals, d);
                let a = self.term(ty, peer, locals, d);
                let b = self.term(ty, peer, locals, d);
                Term::if_(c, a, b)
            }
            5 => {
                let scrutinee = self.term(Ty::List, peer, locals, d);
                let nil = self.term(ty, peer, locals, d);
                let head = self.fresh("h");
                let tail = self.fresh("t");
                let mut inner = locals.to_vec();
                inner.push(Local {
                    name: head.clone(),
                    ty: Ty::Nat,
                    head: true,
                });
                inner.push(Local {
                    name: tail.clone(),
                    ty: Ty::List,
                    head: false,
                });
                let cons = self.term(ty, peer, &inner, d);
                Term::CaseList {
                    scrutinee: Box::new(scrutinee),
                    nil_branch: Box::new(nil),
                    head,
                    tail,
                    cons_branch: Box::new(cons),
                }
            }
            6 => {
                let arg_ty = *Ty::DATA.choose(&mut self.rng).expect("nonempty");
                let param = self.fresh("y");
                let size_var = self.fresh("r");
                let mut inner = locals.to_vec();
                inner.push(Local {
                    name: param.clone(),
                    ty: arg_ty,
                    head: false,
                });
                let body = self.term(ty, peer, &inner, d);
                let arg = self.term(arg_ty, peer, locals, d);
                Term::app(Term::lam(param, arg_ty.basic(), size_var, body), arg)
            }
            _ => self.shaped(ty, peer, locals, d),
        }
    }

    /// Constructors specific to the requested type.
    fn shaped(&mut self, ty: Ty, peer: &PeerType, locals: &[Local], d: usize) -> Term {
        let funs = self.fun_defs(peer, ty);
        if !funs.is_empty() && self.rng.gen_bool(0.5) {
            let f = funs.choose(&mut self.rng).expect("nonempty").clone();
            let arg = self.term(Ty::List, peer, locals, d);
            return Term::app(Term::var(f), arg);
        }
        match ty {
            Ty::Nat => Term::succ(self.term(Ty::Nat, peer, locals, d)),
            Ty::List => {
                let heads: Vec<String> = locals
                    .iter()
                    .filter(|l| l.ty == Ty::Nat)
                    .map(|l| l.name.clone())
                    .collect();
                let h = if !heads.is_empty() && self.rng.gen_bool(0.5) {
                    Term::var(heads.choose(&mut self.rng).expect("nonempty").clone())
                } else {
                    self.term(Ty::Nat, peer, locals, d)
                };
                Term::cons(h, self.term(Ty::List, peer, locals, d))
            }
            _ => self.leaf(ty, peer, locals),
        }
    }

    fn synth(&self, peer: &PeerType, t: &Term) -> Option<SizedType> {
        typecheck_term(self.topo, &self.placed, &LocalEnv::new(), &AssumptionSet::new(), peer, t).ok()
    }

    fn constant(&self, a: &ArithTerm) -> Option<u64> {
        let n = a.simplified().as_literal()?;
        u64::try_from(n).ok()
    }

    /// `fix f (x : List[Nat] @ s) : (R, s*m + c, s*k + a) =>
    ///    case x of nil => NIL | cons(h, t) => (fun (u : Nat @ z) => BODY) COST`
    fn list_fun(&mut self, peer: &PeerType, result: Ty) -> Option<(Term, SizedType)> {
        let nil = self.term(result, peer, &[], 2);
        let cost = self.term(Ty::Nat, peer, &[], 2);
        let cond = self.term(Ty::Bool, peer, &[], 1);
        let nil_ty = self.synth(peer, &nil)?;
        let cost_ty = self.synth(peer, &cost)?;
        let cond_ty = self.synth(peer, &cond)?;
        let (nil_size, nil_lat) = (self.constant(&nil_ty.size)?, self.constant(&nil_ty.latency)?);
        let cost_lat = self.constant(&cost_ty.latency)?;
        let cond_lat = self.constant(&cond_ty.latency)?;

        let recur = Term::app(Term::var("f"), Term::var("t"));
        let (body, growth, step) = match (result, self.rng.gen_range(0..4)) {
            (Ty::Nat, 0) | (Ty::List, 0) => (recur, 0, cost_lat),
            (Ty::Nat, 1) => (Term::succ(recur), 1, cost_lat),
            (Ty::Nat, 2) => (Term::succ(Term::succ(recur)), 2, cost_lat),
            (Ty::Nat, _) => (
                Term::if_(cond, recur.clone(), Term::succ(recur)),
                1,
                cost_lat + cond_lat,
            ),
            (Ty::List, 1) | (Ty::List, 2) => (Term::cons(Term::var("h"), recur), 1, cost_lat),
            (Ty::List, _) => (
                Term::if_(cond, recur.clone(), Term::cons(Term::var("h"), recur)),
                1,
                cost_lat + cond_lat,
            ),
            _ => return None,
        };
        let slack = u64::from(self.rng.gen_bool(0.25));
        let s = || ArithTerm::var("s");
        let size = ArithTerm::add(ArithTerm::mul(s(), (growth + slack).into()), nil_size.into());
        let latency = ArithTerm::add(ArithTerm::mul(s(), (step + slack).into()), nil_lat.into());
        let result_ty = SizedType::new(result.basic(), size, latency);
        let cons_branch = Term::app(Term::lam("u", BasicType::Nat, "z", body), cost);
        let fix = Term::Fix {
            self_name: "f".into(),
            param: "x".into(),
            param_type: Ty::List.basic(),
            size_var: "s".into(),
            result: result_ty.clone(),
            body: Box::new(Term::CaseList {
                scrutinee: Box::new(Term::var("x")),
                nil_branch: Box::new(nil),
                head: "h".into(),
                tail: "t".into(),
                cons_branch: Box::new(cons_branch),
            }),
        };
        let annotation = SizedType::new(
            BasicType::fun("s", Ty::List.basic(), s(), result_ty),
            ArithTerm::Zero,
            ArithTerm::Zero,
        );
        Some((fix, annotation))
    }

    fn program(&mut self) -> Program {
        let mut defs = Vec::new();
        for i in 0..self.rng.gen_range(0..=3) {
            let name = format!("d{i}");
            let peer = self.peer();
            let made = if self.rng.gen_bool(0.5) {
                let result = *[Ty::Nat, Ty::List].choose(&mut self.rng).expect("nonempty");
                self.list_fun(&peer, result).map(|(t, a)| (t, a, DefKind::ListFun(result)))
            } else {
                let ty = *Ty::DATA.choose(&mut self.rng).expect("nonempty");
                let body = self.term(ty, &peer, &[], 3);
                self.synth(&peer, &body).map(|a| (body, a, DefKind::Data(ty)))
            };
            let Some((body, annotation, kind)) = made else {
                continue;
            };
            self.placed.insert(name.clone(), peer.clone(), annotation.clone());
            self.defs.push(DefInfo {
                name: name.clone(),
                peer: peer.clone(),
                kind,
            });
            defs.push(PlacedDef {
                peer,
                name,
                annotation,
                body,
                pos: Pos {
                    line: defs.len() as u32 + 1,
                    col: 1,
                },
            });
        }
        let funs: Vec<DefInfo> = self
            .defs
            .iter()
            .filter(|d| matches!(d.kind, DefKind::ListFun(_)))
            .cloned()
            .collect();
        let depth = self.rng.gen_range(3..=MAX_DEPTH);
        let (main_peer, main) = match funs.choose(&mut self.rng).cloned() {
            // Drive a recursive definition directly, possibly from afar.
            Some(f) if self.rng.gen_bool(0.5) => {
                let arg = self.term(Ty::List, &f.peer, &[], 3);
                let call = Term::app(Term::var(f.name), arg);
                let from = self.peer();
                if from == f.peer {
                    (from, call)
                } else {
                    (from, Term::get(f.peer.0, call))
                }
            }
            _ => {
                let peer = self.peer();
                let ty = *Ty::DATA.choose(&mut self.rng).expect("nonempty");
                let main = self.term(ty, &peer, &[], depth);
                (peer, main)
            }
        };
        Program {
            main_pos: Pos {
                line: defs.len() as u32 + 1,
                col: 1,
            },
            defs,
            main_peer,
            main,
        }
    }
}

/// Why one attempt at a program index was discarded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorFailure {
    pub index: u64,
    pub attempt: u64,
    pub reason: String,
}

/// Generates the well-typed program for `(seed, index)`, with a random
/// topology unless one is given. Discarded attempts are returned alongside.
pub fn generate(
    seed: u64,
    index: u64,
    topology: Option<&LatencyMatrix>,
) -> (Option<(LatencyMatrix, Program)>, Vec<GeneratorFailure>) {
    let mut failures = Vec::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = peer_rng(seed, index, attempt);
        let topo = match topology {
            Some(t) => t.clone(),
            None => random_topology(&mut rng),
        };
        let mut g = Gen {
            rng,
            topo: &topo,
            defs: Vec::new(),
            placed: PlacedEnv::new(),
            fresh: 0,
        };
        let p = g.program();
        match typecheck_program(&p, &topo) {
            Ok(_) => return (Some((topo, p)), failures),
            Err(errs) => failures.push(GeneratorFailure {
                index,
                attempt,
                reason: errs[0].to_string(),
            }),
        }
    }
    (None, failures)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CaseOutcome {
    Ok { max_latency: u64, bound: String },
    Violation { latency: u64, bound: String, trace: Vec<String> },
    Inconclusive(String),
    /// No well-typed program after [`MAX_ATTEMPTS`] attempts.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzCase {
    pub index: u64,
    pub program: Option<Program>,
    pub outcome: CaseOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzReport {
    pub cases: Vec<FuzzCase>,
    pub failures: Vec<GeneratorFailure>,
}

impl FuzzReport {
    fn count(&self, f: impl Fn(&CaseOutcome) -> bool) -> usize {
        self.cases.iter().filter(|c| f(&c.outcome)).count()
    }

    pub fn ok(&self) -> usize {
        self.count(|o| matches!(o, CaseOutcome::Ok { .. }))
    }

    pub fn violations(&self) -> usize {
        self.count(|o| matches!(o, CaseOutcome::Violation { .. }))
    }

    pub fn inconclusive(&self) -> usize {
        self.count(|o| matches!(o, CaseOutcome::Inconclusive(_) | CaseOutcome::Exhausted))
    }

    /// `N ok, V violations`, plus the number of undecided cases if any.
    pub fn summary(&self) -> String {
        let mut s = format!("{} ok, {} violations", self.ok(), self.violations());
        if self.inconclusive() > 0 {
            s.push_str(&format!(", {} inconclusive", self.inconclusive()));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzConfig {
    pub count: u64,
    pub seed: u64,
    pub topology: Option<LatencyMatrix>,
    pub soundness: SoundnessOptions,
}

/// Generates and verifies `count` programs.
pub fn fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let mut report = FuzzReport {
        cases: Vec::new(),
        failures: Vec::new(),
    };
    for index in 0..cfg.count {
        let (made, failures) = generate(cfg.seed, index, cfg.topology.as_ref());
        report.failures.extend(failures);
        let Some((topo, program)) = made else {
            report.cases.push(FuzzCase {
                index,
                program: None,
                outcome: CaseOutcome::Exhausted,
            });
            continue;
        };
        let outcome = match check_soundness_with(&program, &topo, &cfg.soundness) {
            Ok(Verdict::Ok { max_latency, bound, .. }) => CaseOutcome::Ok {
                max_latency,
                bound: bound.to_string(),
            },
            Ok(Verdict::Violation { result, bound, trace }) => CaseOutcome::Violation {
                latency: result.latency,
                bound: bound.to_string(),
                trace: trace.iter().map(|e| e.to_string()).collect(),
            },
            Ok(Verdict::Inconclusive { reason, .. }) => CaseOutcome::Inconclusive(reason),
            Err(e) => CaseOutcome::Inconclusive(e.to_string()),
        };
        report.cases.push(FuzzCase {
            index,
            program: Some(program),
            outcome,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, pretty};

    #[test]
    fn generation_is_deterministic() {
        let a = generate(1, 3, None);
        let b = generate(1, 3, None);
        assert_eq!(a.0.map(|(_, p)| pretty(&p)), b.0.map(|(_, p)| pretty(&p)));
    }

    #[test]
    fn generated_programs_typecheck_and_reparse() {
        for i in 0..40 {
            let (made, _) = generate(5, i, None);
            let (topo, p) = made.expect("a program within the attempt budget");
            assert!(typecheck_program(&p, &topo).is_ok());
            let again = parse(&pretty(&p)).unwrap();
            assert!(again.alpha_eq(&p), "{}", pretty(&p));
        }
    }

    #[test]
    fn small_corpus_is_sound() {
        let cfg = FuzzConfig {
            count: 30,
            seed: 9,
            topology: None,
            soundness: SoundnessOptions::default(),
        };
        let report = fuzz(&cfg);
        assert_eq!(report.violations(), 0);
        assert_eq!(report.ok(), 30, "{:?}", report.cases.iter().find(|c| !matches!(c.outcome, CaseOutcome::Ok { .. })));
    }

    #[test]
    fn injected_bound_is_caught() {
        let cfg = FuzzConfig {
            count: 10,
            seed: 9,
            topology: None,
            soundness: SoundnessOptions {
                bound_delta: -1,
                ..SoundnessOptions::default()
            },
        };
        // Every program whose runs can reach their bound now fails.
        let report = fuzz(&cfg);
        assert!(report.violations() > 0);
    }

    #[test]
    fn empty_run() {
        let cfg = FuzzConfig {
            count: 0,
            seed: 42,
            topology: None,
            soundness: SoundnessOptions::default(),
        };
        assert_eq!(fuzz(&cfg).summary(), "0 ok, 0 violations");
    }
}
