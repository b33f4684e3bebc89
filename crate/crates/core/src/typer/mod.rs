//! Type checking with size and latency bounds.
//!
//! A judgment assigns a term, placed on a peer type, a triple
//! `(B, size, latency)`: its basic type, an upper bound on the size of the
//! value it produces (numeric value for `Nat`, length for lists, `0`
//! otherwise), and an upper bound on the latency its evaluation incurs.
//! Only remote access costs anything: `get P' { t }` evaluated on `P`
//! charges `L(P,P') + latency(t) + L(P',P)`.
//!
//! Recursive functions must recurse on arguments of strictly smaller size.
//! The checker discharges that, and every bound comparison, through the
//! arithmetic prover; anything it cannot prove is rejected.

#![allow(clippy::result_large_err)]

mod error;
mod types;

use std::collections::{BTreeMap, BTreeSet};

use crate::arith::{prove_eq, prove_leq, ArithTerm, AssumptionSet, Constraint, TriState};
use crate::syntax::{fresh_name, pretty_term, BasicType, PeerType, Program, SizedType, Term};
use crate::topology::LatencyMatrix;

pub use error::{TypeError, TypeErrorKind};
pub use types::{free_size_vars, simplify_basic, simplify_sized, subst_basic, subst_sized};

type TResult<T> = Result<T, TypeError>;

/// Placed definitions visible to the term being checked: name -> (peer, type).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlacedEnv(BTreeMap<String, (PeerType, SizedType)>);

impl PlacedEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, peer: PeerType, ty: SizedType) {
        self.0.insert(name.into(), (peer, ty));
    }

    pub fn get(&self, name: &str) -> Option<&(PeerType, SizedType)> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }
}

/// Lexically scoped local bindings; later entries shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalEnv(Vec<(String, SizedType)>);

impl LocalEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, ty: SizedType) {
        self.0.push((name.into(), ty));
    }

    fn lookup(&self, name: &str) -> Option<(usize, &SizedType)> {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, (n, _))| n == name)
            .map(|(i, (_, t))| (i, t))
    }
}

/// Result of checking a whole program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramTypes {
    /// Each placed definition with its checked annotation, in declaration order.
    pub defs: Vec<(String, PeerType, SizedType)>,
    pub main: SizedType,
}

/// An enclosing `fix` whose self-reference is being policed.
#[derive(Clone, Debug)]
struct Guard {
    /// Index of the self binding in the local environment.
    slot: usize,
    size_var: String,
}

#[derive(Clone, Debug)]
struct Ctx {
    peer: PeerType,
    local: LocalEnv,
    phi: AssumptionSet,
    guards: Vec<Guard>,
    size_vars: BTreeSet<String>,
}

impl Ctx {
    fn bind(&mut self, name: &str, ty: SizedType) -> usize {
        self.local.push(name, ty);
        self.local.0.len() - 1
    }
}

fn triple(base: BasicType, size: ArithTerm, latency: ArithTerm) -> SizedType {
    SizedType::new(base, size, latency)
}

fn snippet(t: &Term) -> String {
    let s = pretty_term(t);
    if s.chars().count() > 60 {
        let cut: String = s.chars().take(57).collect();
        format!("{cut}...")
    } else {
        s
    }
}

struct Checker<'a> {
    topo: &'a LatencyMatrix,
    placed: &'a PlacedEnv,
    fresh: usize,
}

impl<'a> Checker<'a> {
    fn fresh_size(&mut self, hint: &str) -> String {
        self.fresh += 1;
        format!("#{hint}{}", self.fresh)
    }

    /// Turns a prover verdict into an error of the given kind.
    fn obligation(
        &self,
        verdict: TriState,
        kind: TypeErrorKind,
        constraint: Constraint,
        message: impl FnOnce() -> String,
    ) -> TResult<()> {
        let (kind, witness) = match verdict {
            TriState::Proved => return Ok(()),
            TriState::Disproved(w) => (kind, Some(w)),
            TriState::Unknown if kind == TypeErrorKind::UnprovenBound => (TypeErrorKind::ArithUnknown, None),
            TriState::Unknown => (kind, None),
        };
        let mut e = TypeError::new(kind, message());
        e.unproved = Some(constraint);
        e.witness = witness;
        Err(e)
    }

    fn require_leq(&self, ctx: &Ctx, a: &ArithTerm, b: &ArithTerm, what: &str) -> TResult<()> {
        let verdict = prove_leq(&ctx.phi, a, b);
        self.obligation(
            verdict,
            TypeErrorKind::UnprovenBound,
            Constraint::leq(a.simplified(), b.simplified()),
            || format!("{what} exceeds its bound"),
        )
    }

    fn require_eq(&self, ctx: &Ctx, a: &ArithTerm, b: &ArithTerm, what: &str) -> TResult<()> {
        let verdict = prove_eq(&ctx.phi, a, b);
        self.obligation(
            verdict,
            TypeErrorKind::UnprovenBound,
            Constraint::eq(a.simplified(), b.simplified()),
            || format!("{what} do not agree"),
        )
    }

    fn well_formed(&self, ctx: &Ctx, b: &BasicType, extra: Option<&str>) -> TResult<()> {
        let unbound: Vec<String> = free_size_vars(b)
            .into_iter()
            .filter(|v| !ctx.size_vars.contains(v) && Some(v.as_str()) != extra)
            .collect();
        if unbound.is_empty() {
            Ok(())
        } else {
            Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!("unbound size variable(s) {} in type {b}", unbound.join(", ")),
            ))
        }
    }

    fn well_formed_sized(&self, ctx: &Ctx, t: &SizedType, extra: Option<&str>) -> TResult<()> {
        self.well_formed(ctx, &t.base, extra)?;
        let mut vars = t.size.free_vars();
        vars.extend(t.latency.free_vars());
        let unbound: Vec<String> = vars
            .into_iter()
            .filter(|v| !ctx.size_vars.contains(v) && Some(v.as_str()) != extra)
            .collect();
        if unbound.is_empty() {
            Ok(())
        } else {
            Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!("unbound size variable(s) {} in type {t}", unbound.join(", ")),
            ))
        }
    }

    fn check_binder(&self, name: &str) -> TResult<()> {
        if self.placed.contains(name) {
            Err(TypeError::new(
                TypeErrorKind::PlacementError,
                format!("local binder `{name}` shadows a placed definition"),
            ))
        } else {
            Ok(())
        }
    }

    /// Picks a name for a binder's size variable that does not clash with
    /// one already in scope, renaming the annotated body if needed.
    fn scope_size_var(&self, ctx: &Ctx, size_var: &str, body: &Term) -> (String, Option<Term>) {
        if !ctx.size_vars.contains(size_var) {
            return (size_var.to_string(), None);
        }
        let fresh = fresh_name(size_var, &ctx.size_vars);
        let body = types::rename_size_in_term(body, size_var, &fresh);
        (fresh, Some(body))
    }

    /// `actual` may be used where `expected` is required.
    fn subtype(&mut self, ctx: &Ctx, actual: &BasicType, expected: &BasicType) -> TResult<()> {
        let mismatch = || {
            TypeError::new(
                TypeErrorKind::Mismatch,
                format!("expected type {expected}, found {actual}"),
            )
        };
        match (actual, expected) {
            (BasicType::Unit, BasicType::Unit)
            | (BasicType::Bool, BasicType::Bool)
            | (BasicType::Nat, BasicType::Nat) => Ok(()),
            (BasicType::List(a), BasicType::List(e)) => self.subtype(ctx, a, e).map_err(|_| mismatch()),
            (BasicType::Fun(fa), BasicType::Fun(fe)) => {
                let mut avoid = ctx.size_vars.clone();
                avoid.extend(free_size_vars(actual));
                avoid.extend(free_size_vars(expected));
                let v = fresh_name(&fa.size_var, &avoid);
                let var = ArithTerm::var(&v);
                let mut inner = ctx.clone();
                inner.size_vars.insert(v.clone());
                let a_arg = subst_basic(&fa.arg, &fa.size_var, &var);
                let e_arg = subst_basic(&fe.arg, &fe.size_var, &var);
                self.subtype(&inner, &a_arg, &e_arg).map_err(|_| mismatch())?;
                self.subtype(&inner, &e_arg, &a_arg).map_err(|_| mismatch())?;
                self.require_eq(
                    &inner,
                    &fa.arg_size.substitute(&fa.size_var, &var),
                    &fe.arg_size.substitute(&fe.size_var, &var),
                    "function argument sizes",
                )?;
                let ra = subst_sized(&fa.result, &fa.size_var, &var);
                let re = subst_sized(&fe.result, &fe.size_var, &var);
                self.subtype(&inner, &ra.base, &re.base).map_err(|_| mismatch())?;
                self.require_leq(&inner, &ra.size, &re.size, "function result size")?;
                self.require_leq(&inner, &ra.latency, &re.latency, "function result latency")
            }
            _ => Err(mismatch()),
        }
    }

    fn same_base(&mut self, ctx: &Ctx, a: &BasicType, b: &BasicType) -> TResult<()> {
        self.subtype(ctx, a, b)?;
        self.subtype(ctx, b, a)
    }

    fn join_size(&self, ctx: &Ctx, a: ArithTerm, b: ArithTerm) -> ArithTerm {
        if prove_eq(&ctx.phi, &a, &b).is_proved() {
            a
        } else {
            ArithTerm::max(a, b)
        }
    }

    fn weight(&self, from: &PeerType, to: &PeerType) -> TResult<ArithTerm> {
        self.topo
            .weight(from, to)
            .map(ArithTerm::from)
            .map_err(|e| TypeError::new(TypeErrorKind::PlacementError, e.to_string()))
    }

    fn synth(&mut self, ctx: &Ctx, t: &Term) -> TResult<SizedType> {
        let ty = self.synth_raw(ctx, t)?;
        Ok(simplify_sized(&ty))
    }

    fn synth_raw(&mut self, ctx: &Ctx, t: &Term) -> TResult<SizedType> {
        match t {
            Term::Var(x) => self.var(ctx, x),
            Term::UnitLit => Ok(triple(BasicType::Unit, ArithTerm::Zero, ArithTerm::Zero)),
            Term::BoolLit(_) => Ok(triple(BasicType::Bool, ArithTerm::Zero, ArithTerm::Zero)),
            Term::NatLit(n) => Ok(triple(BasicType::Nat, ArithTerm::from(*n), ArithTerm::Zero)),
            Term::SuccT(inner) => {
                let ty = self.synth(ctx, inner)?;
                self.subtype(ctx, &ty.base, &BasicType::Nat)?;
                Ok(triple(BasicType::Nat, ArithTerm::succ(ty.size), ty.latency))
            }
            Term::Nil(elem) => {
                self.well_formed(ctx, elem, None)?;
                Ok(triple(BasicType::list(elem.clone()), ArithTerm::Zero, ArithTerm::Zero))
            }
            Term::Cons(h, tl) => {
                let head = self.synth(ctx, h)?;
                let tail = self.synth(ctx, tl)?;
                let BasicType::List(elem) = &tail.base else {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        format!("second argument of cons must be a list, found {}", tail.base),
                    ));
                };
                self.subtype(ctx, &head.base, elem)?;
                Ok(triple(
                    tail.base.clone(),
                    ArithTerm::succ(tail.size),
                    ArithTerm::add(head.latency, tail.latency),
                ))
            }
            Term::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.synth(ctx, cond)?;
                self.subtype(ctx, &c.base, &BasicType::Bool)?;
                let a = self.synth(ctx, then_branch)?;
                let b = self.synth(ctx, else_branch)?;
                self.same_base(ctx, &a.base, &b.base)?;
                let size = self.join_size(ctx, a.size, b.size);
                Ok(triple(
                    a.base,
                    size,
                    ArithTerm::add(c.latency, ArithTerm::max(a.latency, b.latency)),
                ))
            }
            Term::CaseList {
                scrutinee,
                nil_branch,
                head,
                tail,
                cons_branch,
            } => {
                let s = self.synth(ctx, scrutinee)?;
                let elem = self.list_elem(&s.base)?;
                let nil = self.synth(ctx, nil_branch)?;
                let (cons_ctx, head_size, tail_size) = self.enter_cons(ctx, &elem, &s.size, head, tail)?;
                let cons = self.synth(&cons_ctx, cons_branch)?;
                // Leaving the branch: the tail's size is bounded by the
                // scrutinee's, and every type former is monotone.
                let cons = subst_sized(&cons, &tail_size, &s.size);
                if free_size_vars_of(&cons).contains(&head_size) {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        format!(
                            "the size of list element `{head}` escapes the case expression (result type {cons})"
                        ),
                    ));
                }
                self.same_base(ctx, &nil.base, &cons.base)?;
                let size = self.join_size(ctx, nil.size, cons.size);
                Ok(triple(
                    nil.base,
                    size,
                    ArithTerm::add(s.latency, ArithTerm::max(nil.latency, cons.latency)),
                ))
            }
            Term::Lam {
                param,
                param_type,
                size_var,
                body,
            } => {
                self.check_binder(param)?;
                self.well_formed(ctx, param_type, None)?;
                let (sv, renamed) = self.scope_size_var(ctx, size_var, body);
                let body = renamed.as_ref().unwrap_or(body);
                let mut inner = ctx.clone();
                inner.size_vars.insert(sv.clone());
                inner.bind(param, triple(param_type.clone(), ArithTerm::var(&sv), ArithTerm::Zero));
                let result = self.synth(&inner, body)?;
                Ok(triple(
                    BasicType::fun(sv.clone(), param_type.clone(), ArithTerm::var(&sv), result),
                    ArithTerm::Zero,
                    ArithTerm::Zero,
                ))
            }
            Term::Fix { .. } => self.fix(ctx, t),
            Term::App(f, a) => self.app(ctx, f, a),
            Term::Get { target, body } => {
                if !self.topo.has_peer(target) {
                    return Err(TypeError::new(
                        TypeErrorKind::PlacementError,
                        format!("`get` targets undeclared peer `{target}`"),
                    ));
                }
                let remote = Ctx {
                    peer: target.clone(),
                    local: LocalEnv::new(),
                    phi: ctx.phi.clone(),
                    guards: Vec::new(),
                    size_vars: ctx.size_vars.clone(),
                };
                let ty = self.synth(&remote, body)?;
                if !ty.base.is_data() {
                    return Err(TypeError::new(
                        TypeErrorKind::PlacementError,
                        format!(
                            "`get {target} {{ ... }}` would transmit a value of type {}; only data can cross peers",
                            ty.base
                        ),
                    ));
                }
                // The target is a static peer name, so selecting it costs nothing.
                let target_cost = ArithTerm::Zero;
                let latency = ArithTerm::sum([
                    target_cost,
                    self.weight(&ctx.peer, target)?,
                    ty.latency,
                    self.weight(target, &ctx.peer)?,
                ]);
                Ok(triple(ty.base, ty.size, latency))
            }
        }
    }

    fn var(&self, ctx: &Ctx, x: &str) -> TResult<SizedType> {
        if let Some((slot, ty)) = ctx.local.lookup(x) {
            if ctx.guards.iter().any(|g| g.slot == slot) {
                return Err(TypeError::new(
                    TypeErrorKind::PlacementError,
                    format!("recursive function `{x}` may only appear applied to an argument"),
                ));
            }
            return Ok(ty.clone());
        }
        match self.placed.get(x) {
            Some((peer, ty)) if *peer == ctx.peer => Ok(ty.clone()),
            Some((peer, _)) => Err(TypeError::new(
                TypeErrorKind::PlacementError,
                format!(
                    "`{x}` is placed on {peer} and cannot be used on {}; use `get {peer} {{ {x} }}`",
                    ctx.peer
                ),
            )),
            None => Err(TypeError::new(
                TypeErrorKind::UnboundVar,
                format!("unbound variable `{x}`"),
            )),
        }
    }

    fn list_elem(&self, b: &BasicType) -> TResult<BasicType> {
        match b {
            BasicType::List(e) => Ok((**e).clone()),
            other => Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!("case scrutinee must be a list, found {other}"),
            )),
        }
    }

    /// Context for the cons branch: the head gets an unconstrained size, the
    /// tail a size strictly below the scrutinee's.
    fn enter_cons(
        &mut self,
        ctx: &Ctx,
        elem: &BasicType,
        list_size: &ArithTerm,
        head: &str,
        tail: &str,
    ) -> TResult<(Ctx, String, String)> {
        self.check_binder(head)?;
        self.check_binder(tail)?;
        if head == tail {
            return Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!("case binds `{head}` twice"),
            ));
        }
        let head_size = self.fresh_size(head);
        let tail_size = self.fresh_size(tail);
        let mut inner = ctx.clone();
        inner.size_vars.insert(head_size.clone());
        inner.size_vars.insert(tail_size.clone());
        inner.phi.insert(Constraint::leq(
            ArithTerm::succ(ArithTerm::var(&tail_size)),
            list_size.clone(),
        ));
        inner.bind(head, triple(elem.clone(), ArithTerm::var(&head_size), ArithTerm::Zero));
        inner.bind(
            tail,
            triple(BasicType::list(elem.clone()), ArithTerm::var(&tail_size), ArithTerm::Zero),
        );
        Ok((inner, head_size, tail_size))
    }

    fn fix(&mut self, ctx: &Ctx, t: &Term) -> TResult<SizedType> {
        let Term::Fix {
            self_name,
            param,
            param_type,
            size_var,
            result,
            body,
        } = t
        else {
            unreachable!("fix called on a non-fix term");
        };
        self.check_binder(self_name)?;
        self.check_binder(param)?;
        if self_name == param {
            return Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!("fix binds `{param}` twice"),
            ));
        }
        self.well_formed(ctx, param_type, None)?;
        self.well_formed_sized(ctx, result, Some(size_var))?;
        let (sv, result, body) = if ctx.size_vars.contains(size_var) {
            let fresh = fresh_name(size_var, &ctx.size_vars);
            let v = ArithTerm::var(&fresh);
            (
                fresh.clone(),
                subst_sized(result, size_var, &v),
                types::rename_size_in_term(body, size_var, &fresh),
            )
        } else {
            (size_var.clone(), result.clone(), (**body).clone())
        };
        let signature = BasicType::fun(sv.clone(), param_type.clone(), ArithTerm::var(&sv), result.clone());
        let mut inner = ctx.clone();
        inner.size_vars.insert(sv.clone());
        let slot = inner.bind(
            self_name,
            triple(signature.clone(), ArithTerm::Zero, ArithTerm::Zero),
        );
        inner.guards.push(Guard {
            slot,
            size_var: sv.clone(),
        });
        inner.bind(param, triple(param_type.clone(), ArithTerm::var(&sv), ArithTerm::Zero));
        self.check(&inner, &body, &result, &ArithTerm::Zero)?;
        Ok(triple(signature, ArithTerm::Zero, ArithTerm::Zero))
    }

    fn app(&mut self, ctx: &Ctx, f: &Term, a: &Term) -> TResult<SizedType> {
        let guard = match f {
            Term::Var(x) => ctx
                .local
                .lookup(x)
                .and_then(|(slot, _)| ctx.guards.iter().find(|g| g.slot == slot))
                .cloned(),
            _ => None,
        };
        let fty = match (&guard, f) {
            (Some(g), _) => ctx.local.0[g.slot].1.clone(),
            _ => self.synth(ctx, f)?,
        };
        let BasicType::Fun(fun) = &fty.base else {
            return Err(TypeError::new(
                TypeErrorKind::Mismatch,
                format!("`{}` is applied but has type {}", snippet(f), fty.base),
            ));
        };
        let arg = self.synth(ctx, a)?;
        let param_base = &fun.arg;
        // The argument type mentions the quantified variable only through
        // nested binders, so no instantiation is needed for the base check.
        self.subtype(ctx, &arg.base, param_base)?;

        let inst = self.instantiate(ctx, &fun.size_var, &fun.arg_size, &arg.size)?;

        if let Some(g) = &guard {
            let obligation = Constraint::leq(
                ArithTerm::succ(arg.size.clone()).simplified(),
                ArithTerm::var(&g.size_var),
            );
            let verdict = prove_leq(&ctx.phi, &obligation.lhs, &obligation.rhs);
            self.obligation(verdict, TypeErrorKind::NonDecreasingRecursion, obligation, || {
                format!(
                    "recursive call `{} {}` is not on a strictly smaller argument",
                    snippet(f),
                    snippet(a)
                )
            })?;
        }

        let result = subst_sized(&fun.result, &fun.size_var, &inst);
        Ok(triple(
            result.base,
            result.size,
            ArithTerm::sum([fty.latency, arg.latency, result.latency]),
        ))
    }

    /// Chooses a value for a function's size variable so that the argument
    /// fits the declared argument size.
    fn instantiate(
        &self,
        ctx: &Ctx,
        size_var: &str,
        declared: &ArithTerm,
        actual: &ArithTerm,
    ) -> TResult<ArithTerm> {
        let declared_nf = crate::arith::normalize(declared);
        let candidate = if !declared.mentions(size_var) {
            ArithTerm::Zero
        } else {
            match declared_nf.as_poly().and_then(|p| p.as_var_plus_const()) {
                Some((x, k)) if x == size_var => crate::arith::normalize(actual)
                    .minus_const(&k)
                    .map(|nf| nf.embed())
                    .unwrap_or_else(|| actual.clone()),
                _ => actual.clone(),
            }
        };
        let bound = declared.substitute(size_var, &candidate);
        self.require_leq(ctx, actual, &bound, "argument size")?;
        Ok(candidate)
    }

    /// Checks `t` against `expected`, where `offset` is latency already
    /// spent before `t` runs: `offset + latency(t) <= expected.latency`.
    fn check(&mut self, ctx: &Ctx, t: &Term, expected: &SizedType, offset: &ArithTerm) -> TResult<()> {
        match t {
            Term::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.synth(ctx, cond)?;
                self.subtype(ctx, &c.base, &BasicType::Bool)?;
                let offset = ArithTerm::add(offset.clone(), c.latency).simplified();
                self.check(ctx, then_branch, expected, &offset)?;
                self.check(ctx, else_branch, expected, &offset)
            }
            Term::CaseList {
                scrutinee,
                nil_branch,
                head,
                tail,
                cons_branch,
            } => {
                let s = self.synth(ctx, scrutinee)?;
                let elem = self.list_elem(&s.base)?;
                let offset = ArithTerm::add(offset.clone(), s.latency).simplified();
                self.check(ctx, nil_branch, expected, &offset)?;
                let (cons_ctx, _, _) = self.enter_cons(ctx, &elem, &s.size, head, tail)?;
                self.check(&cons_ctx, cons_branch, expected, &offset)
            }
            _ => {
                let actual = self.synth(ctx, t)?;
                self.subtype(ctx, &actual.base, &expected.base)?;
                self.require_leq(ctx, &actual.size, &expected.size, "size")?;
                self.require_leq(
                    ctx,
                    &ArithTerm::add(offset.clone(), actual.latency),
                    &expected.latency,
                    "latency",
                )
            }
        }
    }
}

fn free_size_vars_of(t: &SizedType) -> BTreeSet<String> {
    types::free_size_vars_sized(t)
}

/// Synthesizes the type of `t` placed on `peer`.
pub fn typecheck_term(
    topo: &LatencyMatrix,
    placed: &PlacedEnv,
    local: &LocalEnv,
    phi: &AssumptionSet,
    peer: &PeerType,
    t: &Term,
) -> Result<SizedType, TypeError> {
    let mut size_vars = phi.free_vars();
    for (_, ty) in &local.0 {
        size_vars.extend(free_size_vars_of(ty));
    }
    let ctx = Ctx {
        peer: peer.clone(),
        local: local.clone(),
        phi: phi.clone(),
        guards: Vec::new(),
        size_vars,
    };
    let mut checker = Checker {
        topo,
        placed,
        fresh: 0,
    };
    checker.synth(&ctx, t)
}

/// Checks a `fix` term: its body against the declared result type, with
/// every recursive call on a provably smaller argument.
pub fn check_fix(
    topo: &LatencyMatrix,
    placed: &PlacedEnv,
    local: &LocalEnv,
    phi: &AssumptionSet,
    peer: &PeerType,
    fix: &Term,
) -> Result<SizedType, TypeError> {
    if !matches!(fix, Term::Fix { .. }) {
        return Err(TypeError::new(
            TypeErrorKind::Mismatch,
            format!("expected a fix term, found `{}`", snippet(fix)),
        ));
    }
    typecheck_term(topo, placed, local, phi, peer, fix)
}

/// Checks every placed definition in order, then `main`.
pub fn typecheck_program(p: &Program, topo: &LatencyMatrix) -> Result<ProgramTypes, Vec<TypeError>> {
    let mut errors = Vec::new();
    let mut placed = PlacedEnv::new();
    let mut defs = Vec::new();
    let mut seen = BTreeSet::new();

    for d in &p.defs {
        let outcome = (|| -> TResult<()> {
            if !seen.insert(d.name.clone()) {
                return Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    format!("`{}` is defined twice", d.name),
                ));
            }
            if !topo.has_peer(&d.peer) {
                return Err(TypeError::new(
                    TypeErrorKind::PlacementError,
                    format!("definition `{}` is placed on undeclared peer `{}`", d.name, d.peer),
                ));
            }
            let mut checker = Checker {
                topo,
                placed: &placed,
                fresh: 0,
            };
            let ctx = Ctx {
                peer: d.peer.clone(),
                local: LocalEnv::new(),
                phi: AssumptionSet::new(),
                guards: Vec::new(),
                size_vars: BTreeSet::new(),
            };
            checker.well_formed_sized(&ctx, &d.annotation, None)?;
            checker.check(&ctx, &d.body, &d.annotation, &ArithTerm::Zero)
        })();
        if let Err(mut e) = outcome {
            e.pos = d.pos;
            e.message = format!("in `{}`: {}", d.name, e.message);
            errors.push(e);
        }
        // Later definitions see the declared type even if this one failed,
        // so each definition yields at most one error.
        if !placed.contains(&d.name) {
            placed.insert(d.name.clone(), d.peer.clone(), d.annotation.clone());
            defs.push((d.name.clone(), d.peer.clone(), simplify_sized(&d.annotation)));
        }
    }

    let main = (|| -> TResult<SizedType> {
        if !topo.has_peer(&p.main_peer) {
            return Err(TypeError::new(
                TypeErrorKind::PlacementError,
                format!("main is placed on undeclared peer `{}`", p.main_peer),
            ));
        }
        let mut checker = Checker {
            topo,
            placed: &placed,
            fresh: 0,
        };
        let ctx = Ctx {
            peer: p.main_peer.clone(),
            local: LocalEnv::new(),
            phi: AssumptionSet::new(),
            guards: Vec::new(),
            size_vars: BTreeSet::new(),
        };
        checker.synth(&ctx, &p.main)
    })();
    let main = match main {
        Ok(t) => Some(t),
        Err(mut e) => {
            e.pos = p.main_pos;
            e.message = format!("in `main`: {}", e.message);
            errors.push(e);
            None
        }
    };

    match main {
        Some(main) if errors.is_empty() => Ok(ProgramTypes { defs, main }),
        _ => Err(errors),
    }
}
