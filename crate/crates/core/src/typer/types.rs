//! Size-variable bookkeeping on types and annotated terms.

use std::collections::BTreeSet;

use crate::arith::ArithTerm;
use crate::syntax::{fresh_name, BasicType, FunType, SizedType, Term};

pub fn free_size_vars(b: &BasicType) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_basic(b, &mut out);
    out
}

pub fn free_size_vars_sized(t: &SizedType) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_sized(t, &mut out);
    out
}

fn collect_basic(b: &BasicType, out: &mut BTreeSet<String>) {
    match b {
        BasicType::Unit | BasicType::Bool | BasicType::Nat => {}
        BasicType::List(e) => collect_basic(e, out),
        BasicType::Fun(f) => {
            let mut inner = BTreeSet::new();
            collect_basic(&f.arg, &mut inner);
            f.arg_size.collect_vars(&mut inner);
            collect_sized(&f.result, &mut inner);
            inner.remove(&f.size_var);
            out.extend(inner);
        }
    }
}

fn collect_sized(t: &SizedType, out: &mut BTreeSet<String>) {
    collect_basic(&t.base, out);
    t.size.collect_vars(out);
    t.latency.collect_vars(out);
}

/// Capture-avoiding substitution of a size variable inside a basic type.
pub fn subst_basic(b: &BasicType, x: &str, by: &ArithTerm) -> BasicType {
    match b {
        BasicType::Unit | BasicType::Bool | BasicType::Nat => b.clone(),
        BasicType::List(e) => BasicType::list(subst_basic(e, x, by)),
        BasicType::Fun(f) => {
            if f.size_var == x {
                return b.clone();
            }
            let by_vars = by.free_vars();
            let (size_var, arg, arg_size, result) = if by_vars.contains(&f.size_var) {
                let mut avoid = by_vars;
                avoid.extend(free_size_vars(b));
                avoid.insert(x.to_string());
                let fresh = fresh_name(&f.size_var, &avoid);
                let v = ArithTerm::Var(fresh.clone());
                (
                    fresh,
                    subst_basic(&f.arg, &f.size_var, &v),
                    f.arg_size.substitute(&f.size_var, &v),
                    subst_sized(&f.result, &f.size_var, &v),
                )
            } else {
                (f.size_var.clone(), f.arg.clone(), f.arg_size.clone(), f.result.clone())
            };
            BasicType::Fun(Box::new(FunType {
                size_var,
                arg: subst_basic(&arg, x, by),
                arg_size: arg_size.substitute(x, by),
                result: subst_sized(&result, x, by),
            }))
        }
    }
}

pub fn subst_sized(t: &SizedType, x: &str, by: &ArithTerm) -> SizedType {
    SizedType {
        base: subst_basic(&t.base, x, by),
        size: t.size.substitute(x, by),
        latency: t.latency.substitute(x, by),
    }
}

/// Puts every size and latency term in the type into canonical form.
pub fn simplify_basic(b: &BasicType) -> BasicType {
    match b {
        BasicType::Unit | BasicType::Bool | BasicType::Nat => b.clone(),
        BasicType::List(e) => BasicType::list(simplify_basic(e)),
        BasicType::Fun(f) => BasicType::Fun(Box::new(FunType {
            size_var: f.size_var.clone(),
            arg: simplify_basic(&f.arg),
            arg_size: f.arg_size.simplified(),
            result: simplify_sized(&f.result),
        })),
    }
}

pub fn simplify_sized(t: &SizedType) -> SizedType {
    SizedType {
        base: simplify_basic(&t.base),
        size: t.size.simplified(),
        latency: t.latency.simplified(),
    }
}

/// Renames free occurrences of size variable `old` to `new` in the type
/// annotations carried by a term.
pub fn rename_size_in_term(t: &Term, old: &str, new: &str) -> Term {
    let v = ArithTerm::var(new);
    let go = |t: &Term| Box::new(rename_size_in_term(t, old, new));
    match t {
        Term::Var(_) | Term::UnitLit | Term::BoolLit(_) | Term::NatLit(_) => t.clone(),
        Term::Nil(b) => Term::Nil(subst_basic(b, old, &v)),
        Term::SuccT(a) => Term::SuccT(go(a)),
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
        } => Term::CaseList {
            scrutinee: go(scrutinee),
            nil_branch: go(nil_branch),
            head: head.clone(),
            tail: tail.clone(),
            cons_branch: go(cons_branch),
        },
        Term::Lam {
            param,
            param_type,
            size_var,
            body,
        } => Term::Lam {
            param: param.clone(),
            param_type: subst_basic(param_type, old, &v),
            size_var: size_var.clone(),
            body: if size_var == old { body.clone() } else { go(body) },
        },
        Term::Fix {
            self_name,
            param,
            param_type,
            size_var,
            result,
            body,
        } => {
            let shadowed = size_var == old;
            Term::Fix {
                self_name: self_name.clone(),
                param: param.clone(),
                param_type: subst_basic(param_type, old, &v),
                size_var: size_var.clone(),
                result: if shadowed { result.clone() } else { subst_sized(result, old, &v) },
                body: if shadowed { body.clone() } else { go(body) },
            }
        }
    }
}
