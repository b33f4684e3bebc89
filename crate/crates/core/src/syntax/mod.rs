//! Abstract syntax of placed programs, with substitution and alpha-equivalence.

mod lexer;
mod parser;
mod pretty;

use std::collections::BTreeSet;
use std::fmt;

use crate::arith::ArithTerm;

pub use parser::{parse, parse_arith, parse_term, SyntaxError};
pub use pretty::{pretty, pretty_term};
pub(crate) use lexer::{is_ident_char as lexer_is_ident_char, is_ident_start as lexer_is_ident_start};

/// Static location category, e.g. `Client` or `Server`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeerType(pub String);

impl PeerType {
    pub fn new(name: impl Into<String>) -> Self {
        PeerType(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PeerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BasicType {
    Unit,
    Bool,
    Nat,
    List(Box<BasicType>),
    Fun(Box<FunType>),
}

/// `forall size_var . (arg, arg_size) -> result`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunType {
    pub size_var: String,
    pub arg: BasicType,
    pub arg_size: ArithTerm,
    pub result: SizedType,
}

impl BasicType {
    pub fn list(elem: BasicType) -> Self {
        BasicType::List(Box::new(elem))
    }

    pub fn fun(size_var: impl Into<String>, arg: BasicType, arg_size: ArithTerm, result: SizedType) -> Self {
        BasicType::Fun(Box::new(FunType {
            size_var: size_var.into(),
            arg,
            arg_size,
            result,
        }))
    }

    /// Data types carry no code and can cross peer boundaries.
    pub fn is_data(&self) -> bool {
        match self {
            BasicType::Unit | BasicType::Bool | BasicType::Nat => true,
            BasicType::List(elem) => elem.is_data(),
            BasicType::Fun(_) => false,
        }
    }
}

/// The type triple: basic type, size bound and latency bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SizedType {
    pub base: BasicType,
    pub size: ArithTerm,
    pub latency: ArithTerm,
}

impl SizedType {
    pub fn new(base: BasicType, size: ArithTerm, latency: ArithTerm) -> Self {
        SizedType { base, size, latency }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    UnitLit,
    BoolLit(bool),
    NatLit(u64),
    SuccT(Box<Term>),
    Nil(BasicType),
    Cons(Box<Term>, Box<Term>),
    CaseList {
        scrutinee: Box<Term>,
        nil_branch: Box<Term>,
        head: String,
        tail: String,
        cons_branch: Box<Term>,
    },
    If {
        cond: Box<Term>,
        then_branch: Box<Term>,
        else_branch: Box<Term>,
    },
    Lam {
        param: String,
        param_type: BasicType,
        size_var: String,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    Fix {
        self_name: String,
        param: String,
        param_type: BasicType,
        size_var: String,
        result: SizedType,
        body: Box<Term>,
    },
    Get {
        target: PeerType,
        body: Box<Term>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacedDef {
    pub peer: PeerType,
    pub name: String,
    pub annotation: SizedType,
    pub body: Term,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub defs: Vec<PlacedDef>,
    pub main_peer: PeerType,
    pub main: Term,
    pub main_pos: Pos,
}

impl Program {
    /// Equality up to renaming of bound variables, ignoring source positions.
    pub fn alpha_eq(&self, other: &Program) -> bool {
        self.main_peer == other.main_peer
            && self.main.alpha_eq(&other.main)
            && self.defs.len() == other.defs.len()
            && self.defs.iter().zip(&other.defs).all(|(a, b)| {
                a.peer == b.peer
                    && a.name == b.name
                    && a.annotation == b.annotation
                    && a.body.alpha_eq(&b.body)
            })
    }

    pub fn def(&self, name: &str) -> Option<&PlacedDef> {
        self.defs.iter().find(|d| d.name == name)
    }
}

fn bx(t: Term) -> Box<Term> {
    Box::new(t)
}

impl Term {
    pub fn var(x: impl Into<String>) -> Term {
        Term::Var(x.into())
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(bx(f), bx(a))
    }

    pub fn cons(h: Term, t: Term) -> Term {
        Term::Cons(bx(h), bx(t))
    }

    pub fn succ(t: Term) -> Term {
        Term::SuccT(bx(t))
    }

    pub fn get(target: impl Into<String>, body: Term) -> Term {
        Term::Get {
            target: PeerType::new(target),
            body: bx(body),
        }
    }

    pub fn if_(cond: Term, then_branch: Term, else_branch: Term) -> Term {
        Term::If {
            cond: bx(cond),
            then_branch: bx(then_branch),
            else_branch: bx(else_branch),
        }
    }

    pub fn lam(param: impl Into<String>, param_type: BasicType, size_var: impl Into<String>, body: Term) -> Term {
        Term::Lam {
            param: param.into(),
            param_type,
            size_var: size_var.into(),
            body: bx(body),
        }
    }

    /// A list literal of naturals, `cons(a, cons(b, ... nil[Nat]))`.
    pub fn nat_list(items: &[u64]) -> Term {
        items
            .iter()
            .rev()
            .fold(Term::Nil(BasicType::Nat), |acc, n| Term::cons(Term::NatLit(*n), acc))
    }

    pub fn is_value(&self) -> bool {
        match self {
            Term::UnitLit
            | Term::BoolLit(_)
            | Term::NatLit(_)
            | Term::Nil(_)
            | Term::Lam { .. }
            | Term::Fix { .. } => true,
            Term::Cons(h, t) => h.is_value() && t.is_value(),
            _ => false,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(&x.as_str()) {
                    out.insert(x.clone());
                }
            }
            Term::UnitLit | Term::BoolLit(_) | Term::NatLit(_) | Term::Nil(_) => {}
            Term::SuccT(t) => t.collect_free(bound, out),
            Term::Get { body, .. } => body.collect_free(bound, out),
            Term::Cons(a, b) | Term::App(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.collect_free(bound, out);
                then_branch.collect_free(bound, out);
                else_branch.collect_free(bound, out);
            }
            Term::CaseList {
                scrutinee,
                nil_branch,
                head,
                tail,
                cons_branch,
            } => {
                scrutinee.collect_free(bound, out);
                nil_branch.collect_free(bound, out);
                bound.push(head);
                bound.push(tail);
                cons_branch.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            Term::Lam { param, body, .. } => {
                bound.push(param);
                body.collect_free(bound, out);
                bound.pop();
            }
            Term::Fix {
                self_name,
                param,
                body,
                ..
            } => {
                bound.push(self_name);
                bound.push(param);
                body.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
        }
    }

    pub fn mentions_free(&self, x: &str) -> bool {
        self.free_vars().contains(x)
    }

    /// Capture-avoiding substitution of `v` for the free occurrences of `x`.
    pub fn subst(&self, x: &str, v: &Term) -> Term {
        let fv_v = v.free_vars();
        self.subst_with(x, v, &fv_v)
    }

    fn subst_with(&self, x: &str, v: &Term, fv_v: &BTreeSet<String>) -> Term {
        let go = |t: &Term| bx(t.subst_with(x, v, fv_v));
        match self {
            Term::Var(y) if y == x => v.clone(),
            Term::Var(_) | Term::UnitLit | Term::BoolLit(_) | Term::NatLit(_) | Term::Nil(_) => {
                self.clone()
            }
            Term::SuccT(t) => Term::SuccT(go(t)),
            Term::Cons(a, b) => Term::Cons(go(a), go(b)),
            Term::App(a, b) => Term::App(go(a), go(b)),
            Term::Get { target, body } => Term::Get {
                target: target.clone(),
                body: go(body),
            },
            Term::If {
                cond,
                then_branch,
                else_branch,
            } => Term::If {
                cond: go(cond),
                then_branch: go(then_branch),
                else_branch: go(else_branch),
            },
            Term::CaseList {
                scrutinee,
                nil_branch,
                head,
                tail,
                cons_branch,
            } => {
                let (head, tail, cons_branch) = if head == x || tail == x {
                    (head.clone(), tail.clone(), cons_branch.clone())
                } else {
                    let (names, body) = freshen(&[head, tail], cons_branch, x, fv_v);
                    (names[0].clone(), names[1].clone(), bx(body.subst_with(x, v, fv_v)))
                };
                Term::CaseList {
                    scrutinee: go(scrutinee),
                    nil_branch: go(nil_branch),
                    head,
                    tail,
                    cons_branch,
                }
            }
            Term::Lam {
                param,
                param_type,
                size_var,
                body,
            } => {
                let (param, body) = if param == x {
                    (param.clone(), body.clone())
                } else {
                    let (names, body) = freshen(&[param], body, x, fv_v);
                    (names[0].clone(), bx(body.subst_with(x, v, fv_v)))
                };
                Term::Lam {
                    param,
                    param_type: param_type.clone(),
                    size_var: size_var.clone(),
                    body,
                }
            }
            Term::Fix {
                self_name,
                param,
                param_type,
                size_var,
                result,
                body,
            } => {
                let (self_name, param, body) = if self_name == x || param == x {
                    (self_name.clone(), param.clone(), body.clone())
                } else {
                    let (names, body) = freshen(&[self_name, param], body, x, fv_v);
                    (names[0].clone(), names[1].clone(), bx(body.subst_with(x, v, fv_v)))
                };
                Term::Fix {
                    self_name,
                    param,
                    param_type: param_type.clone(),
                    size_var: size_var.clone(),
                    result: result.clone(),
                    body,
                }
            }
        }
    }

    /// Equality up to consistent renaming of bound term variables.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        alpha(self, other, &mut Vec::new())
    }
}

/// Renames binders in `names` that would capture a free variable of the
/// substituted value, returning the (possibly renamed) binders and body.
fn freshen(names: &[&String], body: &Term, x: &str, fv_v: &BTreeSet<String>) -> (Vec<String>, Term) {
    let mut out: Vec<String> = names.iter().map(|n| (*n).clone()).collect();
    let mut body = body.clone();
    if !body.mentions_free(x) {
        return (out, body);
    }
    for i in 0..out.len() {
        if !fv_v.contains(&out[i]) {
            continue;
        }
        let mut avoid = body.free_vars();
        avoid.extend(fv_v.iter().cloned());
        avoid.extend(out.iter().cloned());
        avoid.insert(x.to_string());
        let fresh = fresh_name(&out[i], &avoid);
        body = body.subst(&out[i], &Term::Var(fresh.clone()));
        out[i] = fresh;
    }
    (out, body)
}

/// `base'`, `base''`, ... the first one not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut candidate = format!("{base}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

fn alpha<'a>(a: &'a Term, b: &'a Term, env: &mut Vec<(&'a str, &'a str)>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            let ix = env.iter().rposition(|(l, _)| *l == x);
            let iy = env.iter().rposition(|(_, r)| *r == y);
            match (ix, iy) {
                (None, None) => x == y,
                (Some(i), Some(j)) => i == j,
                _ => false,
            }
        }
        (Term::UnitLit, Term::UnitLit) => true,
        (Term::BoolLit(x), Term::BoolLit(y)) => x == y,
        (Term::NatLit(x), Term::NatLit(y)) => x == y,
        (Term::Nil(x), Term::Nil(y)) => x == y,
        (Term::SuccT(x), Term::SuccT(y)) => alpha(x, y, env),
        (Term::Cons(a1, a2), Term::Cons(b1, b2)) | (Term::App(a1, a2), Term::App(b1, b2)) => {
            alpha(a1, b1, env) && alpha(a2, b2, env)
        }
        (Term::Get { target: t1, body: b1 }, Term::Get { target: t2, body: b2 }) => {
            t1 == t2 && alpha(b1, b2, env)
        }
        (
            Term::If {
                cond: c1,
                then_branch: t1,
                else_branch: e1,
            },
            Term::If {
                cond: c2,
                then_branch: t2,
                else_branch: e2,
            },
        ) => alpha(c1, c2, env) && alpha(t1, t2, env) && alpha(e1, e2, env),
        (
            Term::CaseList {
                scrutinee: s1,
                nil_branch: n1,
                head: h1,
                tail: tl1,
                cons_branch: c1,
            },
            Term::CaseList {
                scrutinee: s2,
                nil_branch: n2,
                head: h2,
                tail: tl2,
                cons_branch: c2,
            },
        ) => {
            if !(alpha(s1, s2, env) && alpha(n1, n2, env)) {
                return false;
            }
            env.push((h1, h2));
            env.push((tl1, tl2));
            let ok = alpha(c1, c2, env);
            env.truncate(env.len() - 2);
            ok
        }
        (
            Term::Lam {
                param: p1,
                param_type: ty1,
                size_var: s1,
                body: b1,
            },
            Term::Lam {
                param: p2,
                param_type: ty2,
                size_var: s2,
                body: b2,
            },
        ) => {
            if ty1 != ty2 || s1 != s2 {
                return false;
            }
            env.push((p1, p2));
            let ok = alpha(b1, b2, env);
            env.pop();
            ok
        }
        (
            Term::Fix {
                self_name: f1,
                param: p1,
                param_type: ty1,
                size_var: s1,
                result: r1,
                body: b1,
            },
            Term::Fix {
                self_name: f2,
                param: p2,
                param_type: ty2,
                size_var: s2,
                result: r2,
                body: b2,
            },
        ) => {
            if ty1 != ty2 || s1 != s2 || r1 != r2 {
                return false;
            }
            env.push((f1, f2));
            env.push((p1, p2));
            let ok = alpha(b1, b2, env);
            env.truncate(env.len() - 2);
            ok
        }
        _ => false,
    }
}

/// Free-standing form of [`Term::subst`].
pub fn subst_term(t: &Term, x: &str, v: &Term) -> Term {
    t.subst(x, v)
}

/// Free-standing form of [`Term::free_vars`].
pub fn free_vars(t: &Term) -> BTreeSet<String> {
    t.free_vars()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_term(self))
    }
}

impl fmt::Display for BasicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicType::Unit => write!(f, "Unit"),
            BasicType::Bool => write!(f, "Bool"),
            BasicType::Nat => write!(f, "Nat"),
            BasicType::List(e) => write!(f, "List[{e}]"),
            BasicType::Fun(fun) => write!(
                f,
                "forall {} . ({}, {}) -> {}",
                fun.size_var, fun.arg, fun.arg_size, fun.result
            ),
        }
    }
}

impl fmt::Display for SizedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.base, self.size, self.latency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(src: &str) -> Term {
        parse_term(src).unwrap()
    }

    #[test]
    fn subst_examples() {
        assert_eq!(Term::var("x").subst("x", &Term::NatLit(3)), Term::NatLit(3));
        let lam = t("fun (y : Nat @ s) => x");
        let out = lam.subst("x", &Term::var("y"));
        match &out {
            Term::Lam { param, body, .. } => {
                assert_eq!(param, "y'");
                assert_eq!(**body, Term::var("y"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(out.alpha_eq(&t("fun (z : Nat @ s) => y")));
        assert_eq!(
            t("if x then 1 else 2").subst("x", &Term::BoolLit(true)),
            t("if true then 1 else 2")
        );
    }

    #[test]
    fn subst_stops_at_shadowing_binders() {
        let lam = t("fun (x : Nat @ s) => x");
        assert_eq!(lam.subst("x", &Term::NatLit(1)), lam);
        let fix = t("fix f (n : List[Nat] @ s) : (Nat, 0, 0) => f n");
        assert_eq!(fix.subst("f", &Term::NatLit(1)), fix);
        let case = t("case l of nil => h | cons(h, tl) => h");
        assert_eq!(
            case.subst("h", &Term::NatLit(1)),
            t("case l of nil => 1 | cons(h, tl) => h")
        );
    }

    #[test]
    fn free_vars_examples() {
        assert!(t("fun (x : Nat @ s) => x").free_vars().is_empty());
        assert_eq!(
            t("f x").free_vars(),
            BTreeSet::from(["f".to_string(), "x".to_string()])
        );
        assert_eq!(t("get Server { y }").free_vars(), BTreeSet::from(["y".to_string()]));
        assert_eq!(
            t("case l of nil => a | cons(h, tl) => cons(h, b)").free_vars(),
            BTreeSet::from(["a".to_string(), "b".to_string(), "l".to_string()])
        );
    }

    #[test]
    fn alpha_equivalence() {
        assert!(t("fun (x : Nat @ s) => x").alpha_eq(&t("fun (y : Nat @ s) => y")));
        assert!(!t("fun (x : Nat @ s) => y").alpha_eq(&t("fun (y : Nat @ s) => y")));
        assert!(t("case l of nil => 0 | cons(a, b) => a")
            .alpha_eq(&t("case l of nil => 0 | cons(c, d) => c")));
        assert!(!t("case l of nil => 0 | cons(a, b) => a")
            .alpha_eq(&t("case l of nil => 0 | cons(c, d) => d")));
    }

    #[test]
    fn values() {
        assert!(t("cons(1, nil[Nat])").is_value());
        assert!(!t("cons(S(1), nil[Nat])").is_value());
        assert!(t("fun (x : Nat @ s) => get Server { 1 }").is_value());
        assert!(!t("get Server { 1 }").is_value());
        assert!(!t("S(0)").is_value());
    }

    #[test]
    fn data_types() {
        assert!(BasicType::list(BasicType::list(BasicType::Nat)).is_data());
        let f = BasicType::fun("s", BasicType::Nat, ArithTerm::var("s"), SizedType::new(BasicType::Nat, ArithTerm::Zero, ArithTerm::Zero));
        assert!(!f.is_data());
        assert!(!BasicType::list(f).is_data());
    }
}
